//! Dense unitary operators on qubit registers.
//!
//! Basis indices follow a big-endian convention: qubit 0 (the first tensor
//! factor) owns the most significant bit of the basis index.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

pub type CMatrix = DMatrix<Complex64>;

/// Default tolerance for unitarity checks (max entry of `U†U - I`).
pub const UNITARITY_TOL: f64 = 1e-10;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Max entry magnitude of `m†m - I`.
pub fn unitarity_deviation(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let gram = m.adjoint() * m;
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - c(target, 0.0)).norm());
        }
    }
    Ok(worst)
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> Result<bool> {
    Ok(unitarity_deviation(m)? <= tol)
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// An `n`-qubit unitary stored as a dense `2^n x 2^n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator {
    num_qubits: usize,
    matrix: CMatrix,
}

impl UnitaryOperator {
    /// Validates shape and unitarity at [`UNITARITY_TOL`].
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARITY_TOL)
    }

    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        let deviation = unitarity_deviation(&matrix)?;
        let num_qubits = qubits_for_dim(matrix.nrows())?;
        if num_qubits == 0 {
            return Err(Error::InvalidArgument(
                "operator must act on at least one qubit".into(),
            ));
        }
        let within = deviation <= tol;
        if !within {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { num_qubits, matrix })
    }

    /// Wraps a matrix that is unitary by construction (products of unitaries).
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        debug_assert!(matrix.is_square() && matrix.nrows().is_power_of_two());
        let num_qubits = matrix.nrows().trailing_zeros() as usize;
        Self { num_qubits, matrix }
    }

    pub fn identity(num_qubits: usize) -> Self {
        assert!(num_qubits >= 1, "identity needs at least one qubit");
        let dim = 1usize << num_qubits;
        Self::from_trusted(CMatrix::identity(dim, dim))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self::from_trusted(self.matrix.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `e^{i phase} U`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let z = Complex64::from_polar(1.0, phase);
        Self::from_trusted(self.matrix.map(|x| x * z))
    }

    /// Column `index` of the matrix, i.e. the image of basis state `|index>`.
    pub fn apply_to_basis(&self, index: usize) -> Vec<Complex64> {
        self.matrix.column(index).iter().copied().collect()
    }

    /// Kronecker product `self ⊗ other`; `self` owns the most significant qubits.
    pub fn tensor(&self, other: &Self) -> Self {
        Self::from_trusted(self.matrix.kronecker(&other.matrix))
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(Self::from_trusted(&self.matrix * &other.matrix))
    }

    /// `self ⊗ I` on `extra` additional qubits.
    pub fn embed(&self, extra: usize) -> Self {
        if extra == 0 {
            return self.clone();
        }
        self.tensor(&Self::identity(extra))
    }
}

pub fn tensor(a: &UnitaryOperator, b: &UnitaryOperator) -> UnitaryOperator {
    a.tensor(b)
}

pub fn compose(u: &UnitaryOperator, v: &UnitaryOperator) -> Result<UnitaryOperator> {
    u.compose(v)
}

/// Named textbook gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StandardGate {
    Cnot,
    Cz,
    Swap,
    SqrtSwap,
    H,
    X,
    Y,
    Z,
    /// Identity on the given number of qubits.
    Identity(usize),
}

impl StandardGate {
    pub fn num_qubits(self) -> usize {
        match self {
            Self::Cnot | Self::Cz | Self::Swap | Self::SqrtSwap => 2,
            Self::H | Self::X | Self::Y | Self::Z => 1,
            Self::Identity(n) => n,
        }
    }

    pub fn operator(self) -> UnitaryOperator {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let entries: Vec<Complex64> = match self {
            Self::Cnot => vec![o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z],
            Self::Cz => vec![o, z, z, z, z, o, z, z, z, z, o, z, z, z, z, -o],
            Self::Swap => vec![o, z, z, z, z, z, o, z, z, o, z, z, z, z, z, o],
            Self::SqrtSwap => {
                let p = c(0.5, 0.5);
                let m = c(0.5, -0.5);
                vec![o, z, z, z, z, p, m, z, z, m, p, z, z, z, z, o]
            }
            Self::H => {
                let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                vec![h, h, h, -h]
            }
            Self::X => vec![z, o, o, z],
            Self::Y => vec![z, c(0.0, -1.0), c(0.0, 1.0), z],
            Self::Z => vec![o, z, z, -o],
            Self::Identity(n) => return UnitaryOperator::identity(n),
        };
        let dim = 1usize << self.num_qubits();
        UnitaryOperator::from_trusted(CMatrix::from_row_slice(dim, dim, &entries))
    }
}

impl FromStr for StandardGate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "cnot" | "cx" => Self::Cnot,
            "cz" => Self::Cz,
            "swap" => Self::Swap,
            "sqrt_swap" | "sqrtswap" => Self::SqrtSwap,
            "h" => Self::H,
            "x" => Self::X,
            "y" => Self::Y,
            "z" => Self::Z,
            "i" | "id" | "id1" => Self::Identity(1),
            "id2" => Self::Identity(2),
            "id3" => Self::Identity(3),
            _ => return Err(Error::UnknownGate(s.to_string())),
        })
    }
}

impl fmt::Display for StandardGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cnot => f.write_str("cnot"),
            Self::Cz => f.write_str("cz"),
            Self::Swap => f.write_str("swap"),
            Self::SqrtSwap => f.write_str("sqrt_swap"),
            Self::H => f.write_str("h"),
            Self::X => f.write_str("x"),
            Self::Y => f.write_str("y"),
            Self::Z => f.write_str("z"),
            Self::Identity(n) => write!(f, "id{n}"),
        }
    }
}

/// Looks up a gate by name (case-insensitive).
pub fn standard_gate(name: &str) -> Result<UnitaryOperator> {
    Ok(name.parse::<StandardGate>()?.operator())
}

/// Haar-distributed unitary: complex Ginibre matrix, QR, then the columns of
/// `Q` are rescaled by the phases of `diag(R)` so the law is exactly Haar.
pub fn haar_random_unitary(num_qubits: usize, seed: u64) -> UnitaryOperator {
    assert!(
        num_qubits >= 1,
        "haar_random_unitary needs at least one qubit"
    );
    let dim = 1usize << num_qubits;
    let mut rng = rng::child_rng(seed, num_qubits as u64);
    haar_matrix(dim, &mut rng)
}

pub(crate) fn haar_matrix(dim: usize, rng: &mut rng::StreamRng) -> UnitaryOperator {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut entries = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        entries.push(c(re * scale, im * scale));
    }
    let ginibre = CMatrix::from_row_slice(dim, dim, &entries);
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    UnitaryOperator::from_trusted(q)
}
