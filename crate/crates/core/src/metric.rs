//! Unitarily invariant distances between operators.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::unitary::{CMatrix, UnitaryOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricVariant {
    Frobenius,
    OperatorNorm,
}

/// A distance on unitaries. `normalized` divides the Frobenius distance by
/// `sqrt(dim)`; it has no effect on the operator norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MetricKind {
    pub variant: MetricVariant,
    pub normalized: bool,
}

impl MetricKind {
    pub const FROBENIUS: Self = Self {
        variant: MetricVariant::Frobenius,
        normalized: false,
    };
    pub const FROBENIUS_NORMALIZED: Self = Self {
        variant: MetricVariant::Frobenius,
        normalized: true,
    };
    pub const OPERATOR_NORM: Self = Self {
        variant: MetricVariant::OperatorNorm,
        normalized: false,
    };

    pub fn all() -> [Self; 3] {
        [
            Self::FROBENIUS,
            Self::FROBENIUS_NORMALIZED,
            Self::OPERATOR_NORM,
        ]
    }

    pub fn name(self) -> &'static str {
        match (self.variant, self.normalized) {
            (MetricVariant::Frobenius, false) => "frobenius",
            (MetricVariant::Frobenius, true) => "frobenius-normalized",
            (MetricVariant::OperatorNorm, _) => "opnorm",
        }
    }

    /// Distance between two raw square matrices of equal size.
    pub fn matrix_distance(self, u: &CMatrix, v: &CMatrix) -> f64 {
        let diff = u - v;
        match self.variant {
            MetricVariant::Frobenius => {
                let d = frobenius_norm(&diff);
                if self.normalized {
                    d / (u.nrows() as f64).sqrt()
                } else {
                    d
                }
            }
            MetricVariant::OperatorNorm => spectral_norm(diff),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frobenius" | "fro" => Ok(Self::FROBENIUS),
            "frobenius-normalized" | "frobenius_normalized" | "fro-norm" => {
                Ok(Self::FROBENIUS_NORMALIZED)
            }
            "opnorm" | "operator-norm" | "operator_norm" | "spectral" => Ok(Self::OPERATOR_NORM),
            _ => Err(Error::InvalidArgument(format!("unknown metric `{s}`"))),
        }
    }
}

pub(crate) fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value, from a full SVD.
pub(crate) fn spectral_norm(m: CMatrix) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn distance(metric: MetricKind, u: &UnitaryOperator, v: &UnitaryOperator) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    Ok(metric.matrix_distance(u.matrix(), v.matrix()))
}
