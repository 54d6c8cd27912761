//! CNOT synthesis from an arbitrary entangling two-qubit gate.
//!
//! A plan with `k` uses of the gate `U` is the circuit
//! `L_k · U · L_{k-1} · … · U · L_0` with local layers `L_i = A_i ⊗ B_i`.
//! The search maximizes `|tr(CNOT† · circuit)|` one local factor at a time.
//! Each factor enters linearly, so every update is an exact polar-factor
//! solve and needs no derivatives.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::local::{
    environment_raw, polar_update, LocalUnitaryProduct, Mat2, OptimizationTrace, OptimizerOptions,
};
use crate::metric::{frobenius_norm, spectral_norm, MetricKind, MetricVariant};
use crate::par;
use crate::rng;
use crate::unitary::{c, CMatrix, StandardGate, UnitaryOperator};

/// Phase-invariant Frobenius distance at or below which a plan succeeds.
pub const SYNTHESIS_TOL: f64 = 1e-6;
/// Output entanglement (bits) above which a gate counts as entangling.
pub const ENTANGLEMENT_THRESHOLD: f64 = 1e-8;
pub const ENTANGLING_RESTARTS: usize = 20;

fn check_same_dim(u: &UnitaryOperator, v: &UnitaryOperator) -> Result<()> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    Ok(())
}

fn frobenius_phase_invariant(u: &CMatrix, v: &CMatrix) -> f64 {
    let t = (v.adjoint() * u).trace();
    let phase = if t.norm() > 0.0 {
        t / t.norm()
    } else {
        c(1.0, 0.0)
    };
    frobenius_norm(&(u - v * phase))
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `min_φ D(u, e^{iφ} v)`.
pub fn phase_invariant_distance(
    metric: MetricKind,
    u: &UnitaryOperator,
    v: &UnitaryOperator,
) -> Result<f64> {
    check_same_dim(u, v)?;
    let (um, vm) = (u.matrix(), v.matrix());
    Ok(match metric.variant {
        MetricVariant::Frobenius => {
            let d = frobenius_phase_invariant(um, vm);
            if metric.normalized {
                d / (u.dim() as f64).sqrt()
            } else {
                d
            }
        }
        MetricVariant::OperatorNorm => {
            let f = |phi: f64| spectral_norm(um - vm * Complex64::from_polar(1.0, phi));
            let seed_phase = (vm.adjoint() * um).trace().arg();
            const SCAN: usize = 64;
            let width = 2.0 * PI / SCAN as f64;
            let (mut best_phi, mut best) = (seed_phase, f(seed_phase));
            for j in 1..SCAN {
                let phi = seed_phase + width * j as f64;
                let val = f(phi);
                if val < best {
                    best = val;
                    best_phi = phi;
                }
            }
            let (_, refined) = golden_section(f, best_phi - width, best_phi + width, 1e-10);
            best.min(refined)
        }
    })
}

/// Von Neumann entropy (bits) of either qubit of a normalized two-qubit state.
fn entanglement_entropy(psi: &[Complex64; 4]) -> f64 {
    let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let det = psi[0] * psi[3] - psi[1] * psi[2];
    let conc_sqr = (4.0 * det.norm_sqr() / (norm_sqr * norm_sqr)).min(1.0);
    // Smaller squared Schmidt coefficient, written to avoid cancellation.
    let p = conc_sqr / (2.0 * (1.0 + (1.0 - conc_sqr).sqrt()));
    if p <= 0.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (-p).ln_1p() / std::f64::consts::LN_2)
}

fn product_output(u: &CMatrix, x: &[f64]) -> [Complex64; 4] {
    let a = [c(x[0], x[1]), c(x[2], x[3])];
    let b = [c(x[4], x[5]), c(x[6], x[7])];
    let input = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let mut out = [c(0.0, 0.0); 4];
    for (r, o) in out.iter_mut().enumerate() {
        for (col, z) in input.iter().enumerate() {
            *o += u[(r, col)] * z;
        }
    }
    out
}

fn require_two_qubits(u2: &UnitaryOperator) -> Result<()> {
    if u2.num_qubits() != 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            got: u2.num_qubits(),
        });
    }
    Ok(())
}

/// Largest output entanglement found over product inputs `|a>⊗|b>`, each
/// given by two unnormalized complex amplitudes.
pub fn max_output_entanglement(u2: &UnitaryOperator, seed: u64) -> Result<f64> {
    require_two_qubits(u2)?;
    let um = u2.matrix();
    let runs = par::map_indexed(ENTANGLING_RESTARTS, |r| {
        let mut g = rng::child_rng(seed, r as u64);
        let mut x: Vec<f64> = (0..8).map(|_| StandardNormal.sample(&mut g)).collect();
        let eval = |x: &[f64]| entanglement_entropy(&product_output(um, x));
        let mut best = eval(&x);
        let mut step = 0.25;
        let mut sweeps = 0;
        while step > 1e-6 && sweeps < 200 {
            sweeps += 1;
            let mut improved = false;
            for i in 0..8 {
                let origin = x[i];
                for delta in [step, -step] {
                    x[i] = origin + delta;
                    let f = eval(&x);
                    if f > best {
                        best = f;
                        improved = true;
                        break;
                    }
                    x[i] = origin;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best
    });
    Ok(runs.into_iter().fold(0.0, f64::max))
}

pub fn is_entangling(u2: &UnitaryOperator, seed: u64) -> Result<bool> {
    Ok(max_output_entanglement(u2, seed)? > ENTANGLEMENT_THRESHOLD)
}

/// Interleaved circuit with local layers.
#[derive(Clone, Debug)]
pub struct SynthesisPlan {
    pub uses: usize,
    /// `uses + 1` layers, `layers[0]` applied first.
    pub layers: Vec<LocalUnitaryProduct>,
    /// Phase-invariant Frobenius distance from the circuit to CNOT.
    pub achieved_distance: f64,
    pub success: bool,
    /// Best distance found for each number of uses tried, in order.
    pub attempts: Vec<(usize, f64)>,
}

impl SynthesisPlan {
    /// `L_k · U · … · U · L_0`.
    pub fn circuit(&self, u2: &UnitaryOperator) -> Result<UnitaryOperator> {
        require_two_qubits(u2)?;
        let factors: Vec<Vec<Mat2>> = self.layers.iter().map(|l| l.factors().to_vec()).collect();
        Ok(UnitaryOperator::from_trusted(circuit_matrix(
            u2.matrix(),
            &factors,
        )))
    }

    pub fn replay_distance(&self, u2: &UnitaryOperator) -> Result<f64> {
        phase_invariant_distance(
            MetricKind::FROBENIUS,
            &self.circuit(u2)?,
            &StandardGate::Cnot.operator(),
        )
    }
}

fn layer_matrix(layer: &[Mat2]) -> CMatrix {
    crate::local::expand_factors(layer)
}

fn circuit_matrix(gate: &CMatrix, layers: &[Vec<Mat2>]) -> CMatrix {
    let mut acc = layer_matrix(&layers[0]);
    for layer in &layers[1..] {
        acc = layer_matrix(layer) * (gate * acc);
    }
    acc
}

/// Outcome of the multi-start search at a fixed number of uses.
#[derive(Clone, Debug)]
pub struct LayerSearch {
    pub uses: usize,
    pub best_distance: f64,
    pub best_restart: usize,
    pub layers: Vec<LocalUnitaryProduct>,
    pub per_restart_distances: Vec<f64>,
    pub traces: Vec<OptimizationTrace>,
}

fn layer_ascent(
    gate: &CMatrix,
    target: &CMatrix,
    mut layers: Vec<Vec<Mat2>>,
    opts: &OptimizerOptions,
    restart_index: usize,
) -> (f64, Vec<Vec<Mat2>>, OptimizationTrace) {
    let k = layers.len() - 1;
    let target_dag = target.adjoint();
    let mut dist = frobenius_phase_invariant(&circuit_matrix(gate, &layers), target);
    let mut best = (dist, layers.clone());
    let mut objective = vec![dist];
    let mut converged = false;
    let mut sweeps_used = 0;
    for sweep in 1..=opts.max_sweeps {
        for i in 0..=k {
            // tr(C† · Post · L_i · Pre) = tr(L_i · G) with G = Pre · C† · Post.
            let mut pre = CMatrix::identity(4, 4);
            for layer in &layers[..i] {
                pre = gate * (layer_matrix(layer) * pre);
            }
            let mut post = CMatrix::identity(4, 4);
            for layer in &layers[i + 1..] {
                post = layer_matrix(layer) * (gate * post);
            }
            let g = pre * &target_dag * post;
            let effective = g.adjoint();
            for q in 0..2 {
                let env = environment_raw(&effective, &layers[i], q);
                layers[i][q] = polar_update(&env);
            }
        }
        let next = frobenius_phase_invariant(&circuit_matrix(gate, &layers), target);
        objective.push(next);
        sweeps_used = sweep;
        let change = (dist - next).abs();
        dist = next;
        if next < best.0 {
            best = (next, layers.clone());
        }
        if change < opts.convergence_tol || next < 1e-15 {
            converged = true;
            break;
        }
    }
    (
        best.0,
        best.1,
        OptimizationTrace {
            restart_index,
            objective,
            converged,
            sweeps_used,
        },
    )
}

/// Best plan with exactly `uses` applications of `u2`, over `opts.restarts`
/// random starts plus any `extra_starts` (each `uses + 1` layers).
pub fn search_layers(
    u2: &UnitaryOperator,
    uses: usize,
    opts: &OptimizerOptions,
    extra_starts: &[Vec<LocalUnitaryProduct>],
) -> Result<LayerSearch> {
    require_two_qubits(u2)?;
    opts.validate()?;
    if uses == 0 {
        return Err(Error::InvalidArgument("uses must be >= 1".into()));
    }
    let mut starts: Vec<Vec<Vec<Mat2>>> = (0..opts.restarts)
        .map(|r| {
            let mut g = rng::child_rng(rng::stream_seed(opts.master_seed, uses as u64), r as u64);
            (0..=uses)
                .map(|_| {
                    LocalUnitaryProduct::random_with(2, &mut g)
                        .factors()
                        .to_vec()
                })
                .collect()
        })
        .collect();
    for s in extra_starts {
        if s.len() != uses + 1 || s.iter().any(|l| l.num_qubits() != 2) {
            return Err(Error::InvalidArgument(format!(
                "extra start must have {} two-qubit layers",
                uses + 1
            )));
        }
        starts.push(s.iter().map(|l| l.factors().to_vec()).collect());
    }
    let target = StandardGate::Cnot.operator();
    let runs = par::map_indexed(starts.len(), |i| {
        layer_ascent(u2.matrix(), target.matrix(), starts[i].clone(), opts, i)
    });
    let per_restart_distances: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let mut best_restart = 0;
    for (i, &d) in per_restart_distances.iter().enumerate() {
        if d < per_restart_distances[best_restart] {
            best_restart = i;
        }
    }
    let mut traces = Vec::with_capacity(runs.len());
    let mut layers = Vec::new();
    for (i, (_, l, t)) in runs.into_iter().enumerate() {
        if i == best_restart {
            layers = l
                .into_iter()
                .map(LocalUnitaryProduct::from_trusted)
                .collect();
        }
        traces.push(t);
    }
    Ok(LayerSearch {
        uses,
        best_distance: per_restart_distances[best_restart],
        best_restart,
        layers,
        per_restart_distances,
        traces,
    })
}

/// Smallest number of uses of `u2` (up to `max_uses`) for which the search
/// reaches CNOT within [`SYNTHESIS_TOL`].
pub fn synthesize_cnot(
    u2: &UnitaryOperator,
    max_uses: usize,
    opts: &OptimizerOptions,
) -> Result<SynthesisPlan> {
    require_two_qubits(u2)?;
    opts.validate()?;
    if max_uses == 0 {
        return Err(Error::InvalidArgument("max_uses must be >= 1".into()));
    }
    if !is_entangling(u2, opts.master_seed)? {
        return Err(Error::NotEntangling);
    }
    let mut attempts = Vec::with_capacity(max_uses);
    let mut last = None;
    for k in 1..=max_uses {
        let search = search_layers(u2, k, opts, &[])?;
        attempts.push((k, search.best_distance));
        let success = search.best_distance <= SYNTHESIS_TOL;
        last = Some(search);
        if success {
            break;
        }
    }
    let search = last.expect("max_uses >= 1");
    let mut plan = SynthesisPlan {
        uses: search.uses,
        layers: search.layers,
        achieved_distance: search.best_distance,
        success: search.best_distance <= SYNTHESIS_TOL,
        attempts,
    };
    // Report the distance of the circuit exactly as replayed.
    plan.achieved_distance = plan.replay_distance(u2)?;
    plan.success = plan.achieved_distance <= SYNTHESIS_TOL;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitary::haar_random_unitary;

    #[test]
    fn phase_invariant_distance_cases() {
        let u = haar_random_unitary(2, 3);
        let shifted = u.with_global_phase(PI / 7.0);
        for m in MetricKind::all() {
            assert_eq!(phase_invariant_distance(m, &u, &u).unwrap(), 0.0);
            let d = phase_invariant_distance(m, &shifted, &u).unwrap();
            assert!(d < 1e-9, "{m}: {d}");
        }
        let i1 = UnitaryOperator::identity(1);
        let z = StandardGate::Z.operator();
        let d = phase_invariant_distance(MetricKind::FROBENIUS, &i1, &z).unwrap();
        assert!((d - 2.0).abs() < 1e-15);
        assert!(phase_invariant_distance(MetricKind::FROBENIUS, &i1, &u).is_err());
    }

    #[test]
    fn opnorm_phase_invariance_beats_grid() {
        let u = haar_random_unitary(2, 8);
        let v = haar_random_unitary(2, 9);
        let d = phase_invariant_distance(MetricKind::OPERATOR_NORM, &u, &v).unwrap();
        let grid = (0..20_000)
            .map(|j| {
                let phi = 2.0 * PI * j as f64 / 20_000.0;
                crate::metric::distance(MetricKind::OPERATOR_NORM, &u, &v.with_global_phase(phi))
                    .unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(d <= grid + 1e-12, "{d} vs {grid}");
    }

    #[test]
    fn entropy_of_bell_state_is_one_bit() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = [c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)];
        assert!((entanglement_entropy(&bell) - 1.0).abs() < 1e-12);
        let prod = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(entanglement_entropy(&prod), 0.0);
    }

    #[test]
    fn entangling_examples() {
        assert!(!is_entangling(&StandardGate::Swap.operator(), 1).unwrap());
        assert!(is_entangling(&StandardGate::Cnot.operator(), 1).unwrap());
        let cnot_max = max_output_entanglement(&StandardGate::Cnot.operator(), 1).unwrap();
        assert!((cnot_max - 1.0).abs() < 1e-6);
        let l = LocalUnitaryProduct::random(2, 6).expand();
        assert!(!is_entangling(&l, 1).unwrap());
        assert!(is_entangling(&l, 1).is_ok());
        assert!(is_entangling(&UnitaryOperator::identity(3), 1).is_err());
    }

    #[test]
    fn cnot_from_cnot_takes_one_use() {
        let cnot = StandardGate::Cnot.operator();
        let plan =
            synthesize_cnot(&cnot, 3, &OptimizerOptions::default().with_restarts(8)).unwrap();
        assert_eq!(plan.uses, 1);
        assert_eq!(plan.layers.len(), 2);
        assert!(plan.achieved_distance <= 1e-9, "{}", plan.achieved_distance);
        assert!(plan.success);
    }

    #[test]
    fn swap_is_rejected() {
        let err = synthesize_cnot(
            &StandardGate::Swap.operator(),
            3,
            &OptimizerOptions::default(),
        );
        assert!(matches!(err, Err(Error::NotEntangling)));
    }

    #[test]
    fn plan_replay_matches() {
        let cz = StandardGate::Cz.operator();
        let plan = synthesize_cnot(&cz, 2, &OptimizerOptions::default().with_restarts(8)).unwrap();
        assert_eq!(plan.uses, 1);
        let replay = plan.replay_distance(&cz).unwrap();
        assert!((replay - plan.achieved_distance).abs() <= 1e-12);
    }
}
