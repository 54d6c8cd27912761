//! Strength values, the property harness, and CNOT-count estimates.
//!
//! Every number here is a computed upper bound `K̂` on the true strength;
//! statements are made about those bounds, never about the exact minimum.

use std::fmt;

use crate::error::{Error, Result};
use crate::local::{minimize_distance_from, LocalUnitaryProduct, OptimizerOptions};
use crate::metric::{distance, MetricKind};
use crate::par;
use crate::rng::stream_seed;
use crate::unitary::{haar_random_unitary, StandardGate, UnitaryOperator};

pub const LOCALITY_TOL: f64 = 1e-8;
pub const CHAINING_TOL: f64 = 1e-9;
pub const CHAINING_ENGINE_TOL: f64 = 1e-6;
pub const STABILITY_ONE_SIDED_TOL: f64 = 1e-6;
pub const STABILITY_GAP_TOL: f64 = 1e-4;
/// Numerator strengths at or below this give a zero CNOT estimate.
pub const ZERO_STRENGTH: f64 = 1e-8;
/// Slack on the strength ratio before taking the ceiling.
pub const RATIO_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct StrengthResult {
    pub metric: MetricKind,
    pub value: f64,
    pub argmin: LocalUnitaryProduct,
    pub restarts_used: usize,
    pub converged: bool,
    pub per_restart_values: Vec<f64>,
}

impl StrengthResult {
    /// Recomputes `distance(metric, u, expand(argmin))`.
    pub fn witness_distance(&self, u: &UnitaryOperator) -> Result<f64> {
        distance(self.metric, u, &self.argmin.expand())
    }
}

pub fn strength(
    metric: MetricKind,
    u: &UnitaryOperator,
    opts: &OptimizerOptions,
) -> Result<StrengthResult> {
    strength_from(metric, u, opts, &[])
}

/// [`strength`] with extra starting points for the search.
pub fn strength_from(
    metric: MetricKind,
    u: &UnitaryOperator,
    opts: &OptimizerOptions,
    extra_starts: &[LocalUnitaryProduct],
) -> Result<StrengthResult> {
    let r = minimize_distance_from(metric, u, opts, extra_starts)?;
    Ok(StrengthResult {
        metric,
        value: r.value,
        converged: r.converged(),
        restarts_used: r.per_restart_values.len(),
        argmin: r.argmin,
        per_restart_values: r.per_restart_values,
    })
}

/// CNOT on qubits (0, 1) followed by identities on the rest.
pub fn embedded_cnot(num_qubits: usize) -> Result<UnitaryOperator> {
    if num_qubits < 2 {
        return Err(Error::InvalidArgument(format!(
            "CNOT needs at least 2 qubits, target has {num_qubits}"
        )));
    }
    Ok(StandardGate::Cnot.operator().embed(num_qubits - 2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Property {
    Chaining,
    Stability,
    Locality,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Chaining => "chaining",
            Self::Stability => "stability",
            Self::Locality => "locality",
        })
    }
}

/// A secondary check carried alongside the headline one.
#[derive(Clone, Debug, PartialEq)]
pub struct SideCheck {
    pub label: &'static str,
    pub tolerance: f64,
    pub max_violation: f64,
    pub holds: bool,
}

impl SideCheck {
    fn from_violations(label: &'static str, tolerance: f64, violations: &[f64]) -> Self {
        let max_violation = violations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            label,
            tolerance,
            max_violation,
            holds: max_violation <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyReport {
    pub property: Property,
    pub metric: MetricKind,
    pub num_qubits: usize,
    pub instances_tested: usize,
    pub tolerance: f64,
    pub max_violation: f64,
    pub holds: bool,
    /// One signed number per instance; its meaning depends on the property
    /// (strength for locality, slack for chaining, `K̂(U) - K̂(U⊗I)` for
    /// stability).
    pub per_instance: Vec<f64>,
    pub side_check: Option<SideCheck>,
}

fn require_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        Err(Error::InvalidArgument("samples must be >= 1".into()))
    } else {
        Ok(())
    }
}

fn sample_opts(opts: &OptimizerOptions, seed: u64, index: usize) -> OptimizerOptions {
    opts.clone()
        .with_seed(stream_seed(seed ^ opts.master_seed, index as u64))
}

fn run_samples<T: Send>(
    samples: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    par::map_indexed(samples, f).into_iter().collect()
}

/// Strength of each given local product; all should vanish.
pub fn locality_on(
    metric: MetricKind,
    products: &[LocalUnitaryProduct],
    opts: &OptimizerOptions,
) -> Result<PropertyReport> {
    require_samples(products.len())?;
    let values = run_samples(products.len(), |i| {
        Ok(strength(metric, &products[i].expand(), opts)?.value)
    })?;
    let max_violation = values.iter().copied().fold(0.0, f64::max);
    Ok(PropertyReport {
        property: Property::Locality,
        metric,
        num_qubits: products[0].num_qubits(),
        instances_tested: values.len(),
        tolerance: LOCALITY_TOL,
        max_violation,
        holds: max_violation <= LOCALITY_TOL,
        per_instance: values,
        side_check: None,
    })
}

/// Strength of `samples` Haar-random local products on `num_qubits` qubits.
pub fn check_locality(
    metric: MetricKind,
    num_qubits: usize,
    samples: usize,
    seed: u64,
    opts: &OptimizerOptions,
) -> Result<PropertyReport> {
    require_samples(samples)?;
    let products: Vec<_> = (0..samples)
        .map(|i| LocalUnitaryProduct::random(num_qubits, stream_seed(seed, i as u64)))
        .collect();
    locality_on(metric, &products, opts)
}

#[derive(Clone, Debug)]
pub struct ChainingInstance {
    pub strength_u: StrengthResult,
    pub strength_v: StrengthResult,
    /// `D(UV, L_U L_V)` for the factorwise product of the two witnesses.
    pub constructive_distance: f64,
    /// `K̂(UV)` from an independent search.
    pub strength_uv: f64,
}

impl ChainingInstance {
    pub fn bound(&self) -> f64 {
        self.strength_u.value + self.strength_v.value
    }

    pub fn constructive_violation(&self) -> f64 {
        self.constructive_distance - self.bound()
    }

    pub fn engine_violation(&self) -> f64 {
        self.strength_uv - self.bound()
    }
}

pub fn chaining_instance(
    metric: MetricKind,
    u: &UnitaryOperator,
    v: &UnitaryOperator,
    opts: &OptimizerOptions,
) -> Result<ChainingInstance> {
    let uv = u.compose(v)?;
    let su = strength(metric, u, opts)?;
    let sv = strength(metric, v, opts)?;
    let witness = su.argmin.product(&sv.argmin)?;
    let constructive_distance = distance(metric, &uv, &witness.expand())?;
    let strength_uv = strength(metric, &uv, opts)?.value;
    Ok(ChainingInstance {
        strength_u: su,
        strength_v: sv,
        constructive_distance,
        strength_uv,
    })
}

/// `K(UV) <= K(U) + K(V)` on Haar pairs, checked constructively through the
/// product of the two witnesses; the independent `K̂(UV)` is the side check.
pub fn check_chaining(
    metric: MetricKind,
    num_qubits: usize,
    samples: usize,
    seed: u64,
    opts: &OptimizerOptions,
) -> Result<PropertyReport> {
    require_samples(samples)?;
    let instances = run_samples(samples, |i| {
        let s = stream_seed(seed, i as u64);
        let u = haar_random_unitary(num_qubits, stream_seed(s, 0));
        let v = haar_random_unitary(num_qubits, stream_seed(s, 1));
        chaining_instance(metric, &u, &v, &sample_opts(opts, seed, i))
    })?;
    let constructive: Vec<f64> = instances
        .iter()
        .map(|c| c.constructive_violation())
        .collect();
    let engine: Vec<f64> = instances.iter().map(|c| c.engine_violation()).collect();
    let max_violation = constructive
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PropertyReport {
        property: Property::Chaining,
        metric,
        num_qubits,
        instances_tested: samples,
        tolerance: CHAINING_TOL,
        max_violation,
        holds: max_violation <= CHAINING_TOL,
        per_instance: constructive,
        side_check: Some(SideCheck::from_violations(
            "engine K(UV) <= K(U)+K(V)",
            CHAINING_ENGINE_TOL,
            &engine,
        )),
    })
}

#[derive(Clone, Debug)]
pub struct StabilityInstance {
    pub strength_u: f64,
    pub strength_embedded: f64,
}

impl StabilityInstance {
    /// `K̂(U) - K̂(U⊗I)`.
    pub fn gap(&self) -> f64 {
        self.strength_u - self.strength_embedded
    }
}

/// Strength of `u` and of `u ⊗ I`. The search on `u ⊗ I` also starts from
/// the witness of `u` with an identity appended.
pub fn stability_instance(
    metric: MetricKind,
    u: &UnitaryOperator,
    opts: &OptimizerOptions,
) -> Result<StabilityInstance> {
    let su = strength(metric, u, opts)?;
    let embedded = u.embed(1);
    let seeded = su.argmin.with_identity_appended();
    let se = strength_from(metric, &embedded, opts, &[seeded])?;
    Ok(StabilityInstance {
        strength_u: su.value,
        strength_embedded: se.value,
    })
}

/// Measures `K̂(U) - K̂(U⊗I)` on Haar samples. `holds` requires every gap
/// within [`STABILITY_GAP_TOL`]; the one-sided bound
/// `K̂(U⊗I) <= K̂(U) + 1e-6` is the side check. Neither is expected for
/// every metric.
pub fn check_stability(
    metric: MetricKind,
    num_qubits: usize,
    samples: usize,
    seed: u64,
    opts: &OptimizerOptions,
) -> Result<PropertyReport> {
    require_samples(samples)?;
    let instances = run_samples(samples, |i| {
        let u = haar_random_unitary(num_qubits, stream_seed(seed, i as u64));
        stability_instance(metric, &u, &sample_opts(opts, seed, i))
    })?;
    stability_report(metric, num_qubits, &instances)
}

pub fn stability_report(
    metric: MetricKind,
    num_qubits: usize,
    instances: &[StabilityInstance],
) -> Result<PropertyReport> {
    require_samples(instances.len())?;
    let gaps: Vec<f64> = instances.iter().map(StabilityInstance::gap).collect();
    let one_sided: Vec<f64> = gaps.iter().map(|g| -g).collect();
    let max_violation = gaps.iter().map(|g| g.abs()).fold(0.0, f64::max);
    Ok(PropertyReport {
        property: Property::Stability,
        metric,
        num_qubits,
        instances_tested: instances.len(),
        tolerance: STABILITY_GAP_TOL,
        max_violation,
        holds: max_violation <= STABILITY_GAP_TOL,
        per_instance: gaps,
        side_check: Some(SideCheck::from_violations(
            "K(U x I) <= K(U)",
            STABILITY_ONE_SIDED_TOL,
            &one_sided,
        )),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundReport {
    pub metric: MetricKind,
    pub target_strength: f64,
    pub cnot_strength: f64,
    pub heuristic_min_cnots: u64,
    /// Always `"heuristic"`: both strengths are numerical upper bounds.
    pub rigor_flag: &'static str,
}

/// `ceil(K̂(u) / K̂(CNOT ⊗ I…))`, the estimate behind `M >= K(U)/K(CNOT)`.
pub fn cnot_lower_bound(
    metric: MetricKind,
    u: &UnitaryOperator,
    opts: &OptimizerOptions,
) -> Result<LowerBoundReport> {
    let cnot = embedded_cnot(u.num_qubits())?;
    let cnot_strength = strength(metric, &cnot, opts)?.value;
    if cnot_strength <= ZERO_STRENGTH {
        return Err(Error::DegenerateCnotStrength(cnot_strength));
    }
    let target_strength = strength(metric, u, opts)?.value;
    let heuristic_min_cnots = if target_strength <= ZERO_STRENGTH {
        0
    } else {
        (target_strength / cnot_strength - RATIO_SLACK)
            .ceil()
            .max(1.0) as u64
    };
    Ok(LowerBoundReport {
        metric,
        target_strength,
        cnot_strength,
        heuristic_min_cnots,
        rigor_flag: "heuristic",
    })
}
