//! Nearest local unitary products.
//!
//! Two engines live here. The Frobenius engine maximizes `|tr(L† U)|` by
//! block-coordinate ascent: with all other factors fixed the overlap is linear
//! in factor `j`, `tr(L† U) = tr(A_j† M_j)`, and the unitary maximizing
//! `Re tr(A† M)` is the polar factor of `M`. The operator-norm engine is a
//! compass pattern search over a local chart of each factor.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metric::{MetricKind, MetricVariant};
use crate::par;
use crate::rng;
use crate::unitary::{c, haar_matrix, is_unitary, CMatrix, UnitaryOperator, UNITARITY_TOL};

pub type Mat2 = Matrix2<Complex64>;

/// Singular values below this are treated as zero by [`polar_update`].
pub const DEGENERATE_SINGULAR_VALUE: f64 = 1e-14;

const PATTERN_INITIAL_STEP: f64 = PI / 8.0;
const PATTERN_MIN_STEP: f64 = 1e-10;

/// Ordered single-qubit factors `A ⊗ B ⊗ …`; factor 0 acts on qubit 0.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnitaryProduct {
    factors: Vec<Mat2>,
}

impl LocalUnitaryProduct {
    pub fn new(factors: Vec<Mat2>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::EmptyProduct);
        }
        for f in &factors {
            let m = CMatrix::from_iterator(2, 2, f.iter().copied());
            if !is_unitary(&m, UNITARITY_TOL)? {
                return Err(Error::NotUnitary {
                    deviation: crate::unitary::unitarity_deviation(&m)?,
                });
            }
        }
        Ok(Self { factors })
    }

    pub(crate) fn from_trusted(factors: Vec<Mat2>) -> Self {
        debug_assert!(!factors.is_empty());
        Self { factors }
    }

    /// Builds a product from single-qubit operators.
    pub fn from_operators(ops: &[UnitaryOperator]) -> Result<Self> {
        let mut factors = Vec::with_capacity(ops.len());
        for op in ops {
            if op.num_qubits() != 1 {
                return Err(Error::WrongQubitCount {
                    expected: 1,
                    got: op.num_qubits(),
                });
            }
            factors.push(to_mat2(op.matrix()));
        }
        Self::new(factors)
    }

    pub fn identity(num_qubits: usize) -> Self {
        assert!(num_qubits >= 1);
        Self::from_trusted(vec![Mat2::identity(); num_qubits])
    }

    /// Independent Haar-random factors.
    pub fn random(num_qubits: usize, seed: u64) -> Self {
        assert!(num_qubits >= 1);
        let mut r = rng::child_rng(seed, 0x10ca1 + num_qubits as u64);
        Self::random_with(num_qubits, &mut r)
    }

    pub(crate) fn random_with(num_qubits: usize, r: &mut rng::StreamRng) -> Self {
        Self::from_trusted(
            (0..num_qubits)
                .map(|_| to_mat2(haar_matrix(2, r).matrix()))
                .collect(),
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Mat2] {
        &self.factors
    }

    pub fn factor_operator(&self, j: usize) -> UnitaryOperator {
        UnitaryOperator::from_trusted(to_dmatrix(&self.factors[j]))
    }

    pub fn expand(&self) -> UnitaryOperator {
        UnitaryOperator::from_trusted(expand_factors(&self.factors))
    }

    /// Factorwise product: `(A_1 A_2) ⊗ (B_1 B_2) ⊗ … = (A_1⊗B_1⊗…)(A_2⊗B_2⊗…)`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::WrongQubitCount {
                expected: self.num_qubits(),
                got: other.num_qubits(),
            });
        }
        Ok(Self::from_trusted(
            self.factors
                .iter()
                .zip(&other.factors)
                .map(|(a, b)| a * b)
                .collect(),
        ))
    }

    /// `self ⊗ I` on one extra trailing qubit.
    pub fn with_identity_appended(&self) -> Self {
        let mut factors = self.factors.clone();
        factors.push(Mat2::identity());
        Self::from_trusted(factors)
    }

    /// Multiplies factor 0 by `e^{i phase}`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let mut factors = self.factors.clone();
        factors[0] *= Complex64::from_polar(1.0, phase);
        Self::from_trusted(factors)
    }
}

pub fn expand(l: &LocalUnitaryProduct) -> UnitaryOperator {
    l.expand()
}

pub(crate) fn to_mat2(m: &CMatrix) -> Mat2 {
    Mat2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

pub(crate) fn to_dmatrix(m: &Mat2) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
}

pub(crate) fn expand_factors(factors: &[Mat2]) -> CMatrix {
    let n = factors.len();
    let dim = 1usize << n;
    CMatrix::from_fn(dim, dim, |r, col| {
        let mut z = c(1.0, 0.0);
        for (k, f) in factors.iter().enumerate() {
            let shift = n - 1 - k;
            z *= f[((r >> shift) & 1, (col >> shift) & 1)];
        }
        z
    })
}

fn check_dims(l: &[Mat2], u: &CMatrix) -> Result<()> {
    let dim = 1usize << l.len();
    if u.nrows() != dim || u.ncols() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: u.nrows(),
        });
    }
    Ok(())
}

pub(crate) fn overlap_raw(factors: &[Mat2], u: &CMatrix) -> Complex64 {
    let n = factors.len();
    let dim = 1usize << n;
    let mut acc = c(0.0, 0.0);
    for col in 0..dim {
        for r in 0..dim {
            let mut w = c(1.0, 0.0);
            for (k, f) in factors.iter().enumerate() {
                let shift = n - 1 - k;
                w *= f[((r >> shift) & 1, (col >> shift) & 1)].conj();
            }
            acc += w * u[(r, col)];
        }
    }
    acc
}

/// `tr(expand(l)† · u)`.
pub fn local_overlap(l: &LocalUnitaryProduct, u: &UnitaryOperator) -> Result<Complex64> {
    check_dims(&l.factors, u.matrix())?;
    Ok(overlap_raw(&l.factors, u.matrix()))
}

pub(crate) fn environment_raw(u: &CMatrix, factors: &[Mat2], j: usize) -> Mat2 {
    let n = factors.len();
    let dim = 1usize << n;
    let jshift = n - 1 - j;
    let mut env = Mat2::zeros();
    for col in 0..dim {
        for r in 0..dim {
            let mut w = c(1.0, 0.0);
            for (k, f) in factors.iter().enumerate() {
                if k == j {
                    continue;
                }
                let shift = n - 1 - k;
                w *= f[((r >> shift) & 1, (col >> shift) & 1)].conj();
            }
            env[((r >> jshift) & 1, (col >> jshift) & 1)] += w * u[(r, col)];
        }
    }
    env
}

/// The 2x2 matrix `M_j` with `tr(expand(l)† u) = tr(A_j† M_j)` for fixed
/// factors `k != j`. Takes a raw matrix so linearity in `u` is observable.
pub fn environment(u: &CMatrix, l: &LocalUnitaryProduct, j: usize) -> Result<Mat2> {
    if j >= l.num_qubits() {
        return Err(Error::QubitOutOfRange {
            index: j,
            num_qubits: l.num_qubits(),
        });
    }
    check_dims(&l.factors, u)?;
    Ok(environment_raw(u, &l.factors, j))
}

/// Smallest-index unit vector orthogonal to `a` (itself a unit vector).
fn orthonormal_completion(a: &nalgebra::Vector2<Complex64>) -> nalgebra::Vector2<Complex64> {
    for k in 0..2 {
        let mut e = nalgebra::Vector2::<Complex64>::zeros();
        e[k] = c(1.0, 0.0);
        let proj = a[k].conj();
        let resid = e - a * proj;
        let norm = resid.norm();
        if norm > 1e-3 {
            return resid / c(norm, 0.0);
        }
    }
    unreachable!("a unit vector in C^2 leaves a residual >= 1/sqrt(2) on some basis vector")
}

/// Unitary polar factor `W V†` of `m = W Σ V†`: the unitary maximizing
/// `Re tr(A† m)`. Directions with singular value below
/// [`DEGENERATE_SINGULAR_VALUE`] are completed by the smallest-index
/// orthonormal completion, so the zero matrix maps to the identity.
pub fn polar_update(m: &Mat2) -> Mat2 {
    let svd = m.svd(true, true);
    let s = svd.singular_values;
    let (smax, smin) = (s[0].max(s[1]), s[0].min(s[1]));
    if smax < DEGENERATE_SINGULAR_VALUE {
        return Mat2::identity();
    }
    let w = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    if smin >= DEGENERATE_SINGULAR_VALUE {
        return w * v_t;
    }
    let top = if s[0] >= s[1] { 0 } else { 1 };
    let w0 = w.column(top).into_owned();
    let v0 = v_t.row(top).adjoint();
    let w1 = orthonormal_completion(&w0);
    let v1 = orthonormal_completion(&v0);
    w0 * v0.adjoint() + w1 * v1.adjoint()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerOptions {
    pub restarts: usize,
    pub max_sweeps: usize,
    /// Sweep-to-sweep objective change below which a restart stops.
    pub convergence_tol: f64,
    pub master_seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_sweeps: 500,
            convergence_tol: 1e-12,
            master_seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be >= 1".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("max_sweeps must be >= 1".into()));
        }
        let positive = self.convergence_tol > 0.0;
        if !positive {
            return Err(Error::InvalidArgument("convergence_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-restart history. `objective[0]` is the value at the starting point;
/// each later entry is the value after one sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationTrace {
    pub restart_index: usize,
    pub objective: Vec<f64>,
    pub converged: bool,
    pub sweeps_used: usize,
}

#[derive(Clone, Debug)]
pub struct OverlapResult {
    pub best_abs_overlap: f64,
    pub argmax: LocalUnitaryProduct,
    pub best_restart: usize,
    pub traces: Vec<OptimizationTrace>,
}

fn starting_points(
    num_qubits: usize,
    opts: &OptimizerOptions,
    extra: &[LocalUnitaryProduct],
) -> Result<Vec<Vec<Mat2>>> {
    let mut starts: Vec<Vec<Mat2>> = (0..opts.restarts)
        .map(|r| {
            let mut g = rng::child_rng(opts.master_seed, r as u64);
            LocalUnitaryProduct::random_with(num_qubits, &mut g).factors
        })
        .collect();
    for l in extra {
        if l.num_qubits() != num_qubits {
            return Err(Error::WrongQubitCount {
                expected: num_qubits,
                got: l.num_qubits(),
            });
        }
        starts.push(l.factors.clone());
    }
    Ok(starts)
}

/// Block-coordinate ascent of `|tr(L† u)|` from one starting point. A sweep
/// that fails to increase the objective (rounding at the optimum) is
/// discarded, so the recorded sequence never decreases.
pub(crate) fn overlap_ascent(
    u: &CMatrix,
    mut factors: Vec<Mat2>,
    opts: &OptimizerOptions,
    restart_index: usize,
) -> (f64, Vec<Mat2>, OptimizationTrace) {
    let n = factors.len();
    let mut value = overlap_raw(&factors, u).norm();
    let mut objective = vec![value];
    let mut converged = false;
    let mut sweeps_used = 0;
    for sweep in 1..=opts.max_sweeps {
        let mut candidate = factors.clone();
        for j in 0..n {
            let env = environment_raw(u, &candidate, j);
            candidate[j] = polar_update(&env);
        }
        let next = overlap_raw(&candidate, u).norm();
        if next < value {
            converged = true;
            break;
        }
        let delta = next - value;
        factors = candidate;
        value = next;
        objective.push(value);
        sweeps_used = sweep;
        if delta < opts.convergence_tol {
            converged = true;
            break;
        }
    }
    (
        value,
        factors,
        OptimizationTrace {
            restart_index,
            objective,
            converged,
            sweeps_used,
        },
    )
}

/// Index of the best entry under `better`, lowest index on ties.
fn select_best(values: &[f64], minimize: bool) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        let b = values[best];
        let wins = if minimize { v < b } else { v > b };
        if wins {
            best = i;
        }
    }
    best
}

pub fn maximize_local_overlap(
    u: &UnitaryOperator,
    opts: &OptimizerOptions,
) -> Result<OverlapResult> {
    maximize_local_overlap_from(u, opts, &[])
}

/// As [`maximize_local_overlap`], with `extra_starts` run as additional
/// restarts indexed after the random ones.
pub fn maximize_local_overlap_from(
    u: &UnitaryOperator,
    opts: &OptimizerOptions,
    extra_starts: &[LocalUnitaryProduct],
) -> Result<OverlapResult> {
    opts.validate()?;
    let starts = starting_points(u.num_qubits(), opts, extra_starts)?;
    let runs = par::map_indexed(starts.len(), |i| {
        overlap_ascent(u.matrix(), starts[i].clone(), opts, i)
    });
    let values: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let best = select_best(&values, false);
    let mut traces = Vec::with_capacity(runs.len());
    let mut argmax = None;
    for (i, (_, factors, trace)) in runs.into_iter().enumerate() {
        if i == best {
            argmax = Some(LocalUnitaryProduct::from_trusted(factors));
        }
        traces.push(trace);
    }
    Ok(OverlapResult {
        best_abs_overlap: values[best],
        argmax: argmax.expect("at least one restart"),
        best_restart: best,
        traces,
    })
}

#[derive(Clone, Debug)]
pub struct DistanceResult {
    pub metric: MetricKind,
    /// `distance(metric, u, expand(argmin))`, recomputed from the witness.
    pub value: f64,
    pub argmin: LocalUnitaryProduct,
    pub best_restart: usize,
    pub per_restart_values: Vec<f64>,
    pub traces: Vec<OptimizationTrace>,
}

impl DistanceResult {
    pub fn converged(&self) -> bool {
        self.traces[self.best_restart].converged
    }
}

/// Rotates the global phase of `factors` so `tr(L† u)` is real and positive.
fn align_phase(u: &CMatrix, mut factors: Vec<Mat2>) -> Vec<Mat2> {
    let ov = overlap_raw(&factors, u);
    if ov.norm() > 0.0 {
        factors[0] *= ov / ov.norm();
    }
    factors
}

pub fn minimize_distance(
    metric: MetricKind,
    u: &UnitaryOperator,
    opts: &OptimizerOptions,
) -> Result<DistanceResult> {
    minimize_distance_from(metric, u, opts, &[])
}

/// Upper bound on `min_L D(u, L)` with its witness.
///
/// Random restarts come first (indices `0..opts.restarts`), then for the
/// operator norm a warm start from the Frobenius optimum, then
/// `extra_starts`. The result is never worse than any starting point.
pub fn minimize_distance_from(
    metric: MetricKind,
    u: &UnitaryOperator,
    opts: &OptimizerOptions,
    extra_starts: &[LocalUnitaryProduct],
) -> Result<DistanceResult> {
    opts.validate()?;
    let um = u.matrix();
    let runs: Vec<(f64, Vec<Mat2>, OptimizationTrace)> = match metric.variant {
        MetricVariant::Frobenius => {
            let starts = starting_points(u.num_qubits(), opts, extra_starts)?;
            par::map_indexed(starts.len(), |i| {
                let (_, factors, trace) = overlap_ascent(um, starts[i].clone(), opts, i);
                let factors = align_phase(um, factors);
                let value = metric.matrix_distance(um, &expand_factors(&factors));
                (value, factors, trace)
            })
        }
        MetricVariant::OperatorNorm => {
            let warm = maximize_local_overlap(u, opts)?;
            let warm = align_phase(um, warm.argmax.factors);
            let mut extra = Vec::with_capacity(extra_starts.len() + 1);
            extra.push(LocalUnitaryProduct::from_trusted(warm));
            extra.extend_from_slice(extra_starts);
            let starts = starting_points(u.num_qubits(), opts, &extra)?;
            par::map_indexed(starts.len(), |i| {
                pattern_search(um, metric, starts[i].clone(), opts, i)
            })
        }
    };
    let per_restart_values: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let best = select_best(&per_restart_values, true);
    let mut traces = Vec::with_capacity(runs.len());
    let mut argmin = None;
    for (i, (_, factors, trace)) in runs.into_iter().enumerate() {
        if i == best {
            argmin = Some(LocalUnitaryProduct::from_trusted(factors));
        }
        traces.push(trace);
    }
    let argmin = argmin.expect("at least one restart");
    let value = metric.matrix_distance(um, &expand_factors(&argmin.factors));
    Ok(DistanceResult {
        metric,
        value,
        argmin,
        best_restart: best,
        per_restart_values,
        traces,
    })
}

/// `e^{iα} exp(i (x σx + y σy + z σz))` for `p = (α, x, y, z)`.
pub(crate) fn chart_exp(p: &[f64]) -> Mat2 {
    let (alpha, x, y, z) = (p[0], p[1], p[2], p[3]);
    let theta = (x * x + y * y + z * z).sqrt();
    let cos = theta.cos();
    let sinc = if theta < 1e-8 {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    };
    let m = Mat2::new(
        c(cos, sinc * z),
        c(sinc * y, sinc * x),
        c(-sinc * y, sinc * x),
        c(cos, -sinc * z),
    );
    if alpha == 0.0 {
        m
    } else {
        m * Complex64::from_polar(1.0, alpha)
    }
}

pub(crate) fn chart_factors(bases: &[Mat2], params: &[f64]) -> Vec<Mat2> {
    bases
        .iter()
        .enumerate()
        .map(|(j, b)| b * chart_exp(&params[4 * j..4 * j + 4]))
        .collect()
}

/// Compass search on the chart `B_j · chart_exp(p_j)`; one sweep polls every
/// coordinate in both directions, accepting strict improvements. A sweep
/// without improvement halves the step and re-centres the chart.
pub(crate) fn pattern_search(
    u: &CMatrix,
    metric: MetricKind,
    mut bases: Vec<Mat2>,
    opts: &OptimizerOptions,
    restart_index: usize,
) -> (f64, Vec<Mat2>, OptimizationTrace) {
    let dims = 4 * bases.len();
    let eval = |bases: &[Mat2], p: &[f64]| {
        metric.matrix_distance(u, &expand_factors(&chart_factors(bases, p)))
    };
    let mut params = vec![0.0; dims];
    let mut best = eval(&bases, &params);
    let mut objective = vec![best];
    let mut step = PATTERN_INITIAL_STEP;
    let mut converged = false;
    let mut sweeps_used = 0;
    while sweeps_used < opts.max_sweeps {
        if step < PATTERN_MIN_STEP {
            converged = true;
            break;
        }
        sweeps_used += 1;
        let mut improved = false;
        for i in 0..dims {
            let origin = params[i];
            for delta in [step, -step] {
                params[i] = origin + delta;
                let f = eval(&bases, &params);
                if f < best {
                    best = f;
                    improved = true;
                    break;
                }
                params[i] = origin;
            }
        }
        objective.push(best);
        if !improved {
            step *= 0.5;
            bases = chart_factors(&bases, &params);
            params.iter_mut().for_each(|p| *p = 0.0);
        }
    }
    if step < PATTERN_MIN_STEP {
        converged = true;
    }
    let factors = chart_factors(&bases, &params);
    let value = metric.matrix_distance(u, &expand_factors(&factors));
    (
        value,
        factors,
        OptimizationTrace {
            restart_index,
            objective,
            converged,
            sweeps_used,
        },
    )
}
