//! Acceptance suite. Each test prints one `[PASS]`/`[FAIL] criterion N` line
//! to the real stdout (bypassing the harness capture) and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::process::Command;

use num_complex::Complex64;
use qstrength::fern::{barnsley_fern_system, chaos_game, FERN_ENVELOPE};
use qstrength::strength::{
    self, check_chaining, check_locality, check_stability, cnot_lower_bound, stability_instance,
};
use qstrength::synth::{is_entangling, search_layers, synthesize_cnot, SYNTHESIS_TOL};
use qstrength::{
    distance, haar_random_unitary, maximize_local_overlap, minimize_distance, CMatrix, Error,
    LocalUnitaryProduct, MetricKind, OptimizerOptions, StandardGate, UnitaryOperator,
};

const SEED: u64 = 20240601;
const CNOT_FROBENIUS_GAP: f64 = -0.634_050_671_124_429;

fn report(n: u32, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[{tag}] criterion {n}: {detail}");
    let _ = out.flush();
    assert!(ok, "criterion {n} failed: {detail}");
}

fn opts() -> OptimizerOptions {
    OptimizerOptions::default().with_seed(SEED)
}

fn gate(g: StandardGate) -> UnitaryOperator {
    g.operator()
}

#[test]
fn criterion_1_locality() {
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for n in [2, 3] {
        for m in [MetricKind::FROBENIUS, MetricKind::OPERATOR_NORM] {
            let rep = check_locality(m, n, 100, SEED, &opts()).unwrap();
            assert_eq!(rep.instances_tested, 100);
            worst = worst.max(rep.max_violation);
            lines.push(format!("{m}/{n}q {:.1e}", rep.max_violation));
        }
    }
    report(
        1,
        worst <= 1e-8,
        &format!(
            "locality, max strength of 100 local products: {}",
            lines.join(", ")
        ),
    );
}

#[test]
fn criterion_2_chaining() {
    let mut ok = true;
    let mut lines = Vec::new();
    for m in [MetricKind::FROBENIUS, MetricKind::OPERATOR_NORM] {
        let rep = check_chaining(m, 2, 100, SEED, &opts()).unwrap();
        assert_eq!(rep.instances_tested, 100);
        ok &= rep.max_violation <= 1e-9;
        lines.push(format!(
            "{m} max D(UV, L_U L_V) - K(U) - K(V) = {:.2e}",
            rep.max_violation
        ));
    }
    report(
        2,
        ok,
        &format!("constructive chaining on 100 pairs: {}", lines.join(", ")),
    );
}

#[test]
fn criterion_3_stability() {
    // Unnormalized Frobenius grows by √2 under U -> U⊗I, so the one-sided
    // bound is checked on the dimension-normalized Frobenius metric.
    let mut ok = true;
    let mut lines = Vec::new();
    for m in [MetricKind::FROBENIUS_NORMALIZED, MetricKind::OPERATOR_NORM] {
        let rep = check_stability(m, 2, 50, SEED, &opts()).unwrap();
        let side = rep.side_check.clone().unwrap();
        ok &= side.max_violation <= 1e-6;
        lines.push(format!(
            "{m} max(K(UxI) - K(U)) = {:.2e}, max |gap| = {:.2e}",
            side.max_violation, rep.max_violation
        ));
    }
    let un = check_stability(MetricKind::FROBENIUS, 2, 50, SEED, &opts()).unwrap();
    lines.push(format!(
        "frobenius gaps recorded, min {:.4}",
        un.per_instance
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    ));
    let gap = stability_instance(MetricKind::FROBENIUS, &gate(StandardGate::Cnot), &opts())
        .unwrap()
        .gap();
    ok &= (gap - CNOT_FROBENIUS_GAP).abs() <= 1e-9;
    lines.push(format!("frozen cnot frobenius gap {gap:.15}"));
    report(
        3,
        ok,
        &format!("one-sided stability on 50 samples: {}", lines.join(", ")),
    );
}

type M2 = [[Complex64; 2]; 2];

fn u2(phase: f64, alpha: f64, beta: f64, gamma: f64) -> M2 {
    let (cb, sb) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let e = |t: f64| Complex64::from_polar(1.0, t + phase);
    [
        [
            e(-(alpha + gamma) / 2.0) * cb,
            -e(-(alpha - gamma) / 2.0) * sb,
        ],
        [e((alpha - gamma) / 2.0) * sb, e((alpha + gamma) / 2.0) * cb],
    ]
}

fn abs_overlap(u: &CMatrix, p: &[f64; 8]) -> f64 {
    let a = u2(p[0], p[1], p[2], p[3]);
    let b = u2(p[4], p[5], p[6], p[7]);
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..4 {
        for c in 0..4 {
            acc += (a[r >> 1][c >> 1] * b[r & 1][c & 1]).conj() * u[(r, c)];
        }
    }
    acc.norm()
}

/// Grid over all 8 real parameters of A ⊗ B (phase plus ZYZ angles each),
/// then compass refinement of the best cells. The two phases cannot change
/// `|tr|`, so they get a two-point grid; the Euler angles use spacing π/8.
fn grid_oracle(u: &CMatrix) -> f64 {
    let h = PI / 8.0;
    let euler: Vec<[f64; 3]> = (0..16)
        .flat_map(|i| {
            (0..=8)
                .flat_map(move |j| (0..16).map(move |k| [i as f64 * h, j as f64 * h, k as f64 * h]))
        })
        .collect();
    let mut top: Vec<(f64, [f64; 8])> = Vec::new();
    for pa in [0.0, PI / 2.0] {
        for pb in [0.0, PI / 2.0] {
            for x in &euler {
                for y in &euler {
                    let p = [pa, x[0], x[1], x[2], pb, y[0], y[1], y[2]];
                    let v = abs_overlap(u, &p);
                    if top.len() < 8 || v > top[7].0 {
                        top.push((v, p));
                        top.sort_by(|a, b| b.0.total_cmp(&a.0));
                        top.truncate(8);
                    }
                }
            }
        }
    }
    top.into_iter()
        .map(|(mut best, mut p)| {
            let mut step = h / 2.0;
            while step > 1e-12 {
                let mut improved = false;
                for i in 0..8 {
                    for d in [step, -step] {
                        let mut q = p;
                        q[i] += d;
                        let v = abs_overlap(u, &q);
                        if v > best {
                            (best, p, improved) = (v, q, true);
                        }
                    }
                }
                if !improved {
                    step /= 2.0;
                }
            }
            best
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_4_cnot_oracle() {
    let cnot = gate(StandardGate::Cnot);
    let oracle = grid_oracle(cnot.matrix());
    let oracle_ok = (oracle - 2.0 * 2f64.sqrt()).abs() <= 1e-4;
    let engine_overlap = maximize_local_overlap(&cnot, &opts())
        .unwrap()
        .best_abs_overlap;
    let k = minimize_distance(MetricKind::FROBENIUS, &cnot, &opts())
        .unwrap()
        .value;
    let k_ok = (k - (8.0 - 4.0 * 2f64.sqrt()).sqrt()).abs() <= 1e-6;
    report(
        4,
        oracle_ok && k_ok && (engine_overlap - oracle).abs() <= 1e-4,
        &format!("grid oracle max|tr(L'CNOT)| = {oracle:.12}, engine {engine_overlap:.12}, K_F(CNOT) = {k:.12}"),
    );
}

fn cnot_control_second() -> UnitaryOperator {
    let mut m = CMatrix::zeros(4, 4);
    for (col, row) in [0, 3, 2, 1].into_iter().enumerate() {
        m[(row, col)] = Complex64::new(1.0, 0.0);
    }
    UnitaryOperator::new(m).unwrap()
}

#[test]
fn criterion_5_lower_bound() {
    let c = gate(StandardGate::Cnot);
    let three = c
        .compose(&cnot_control_second())
        .unwrap()
        .compose(&c)
        .unwrap();
    let mut ok = three.matrix() == gate(StandardGate::Swap).matrix();
    let local = LocalUnitaryProduct::random(2, SEED).expand();
    let mut lines = Vec::new();
    for m in MetricKind::all() {
        let swap = cnot_lower_bound(m, &gate(StandardGate::Swap), &opts())
            .unwrap()
            .heuristic_min_cnots;
        let cnot = cnot_lower_bound(m, &c, &opts())
            .unwrap()
            .heuristic_min_cnots;
        let loc = cnot_lower_bound(m, &local, &opts())
            .unwrap()
            .heuristic_min_cnots;
        ok &= swap <= 3 && cnot == 1 && loc == 0;
        lines.push(format!("{m} swap {swap} cnot {cnot} local {loc}"));
    }
    report(
        5,
        ok,
        &format!("3-CNOT swap verified, estimates: {}", lines.join(", ")),
    );
}

#[test]
fn criterion_6_synthesis() {
    let o = opts().with_restarts(64);
    let ih = gate(StandardGate::Identity(1)).tensor(&gate(StandardGate::H));
    let conj = ih
        .compose(&gate(StandardGate::Cz))
        .unwrap()
        .compose(&ih)
        .unwrap();
    let oracle = (conj.matrix() - gate(StandardGate::Cnot).matrix()).norm() < 1e-15;
    let cz = synthesize_cnot(&gate(StandardGate::Cz), 3, &o).unwrap();
    let cz_ok = cz.success && cz.uses == 1;
    let ss = gate(StandardGate::SqrtSwap);
    let plan = synthesize_cnot(&ss, 3, &o).unwrap();
    let ss_ok = plan.success && plan.uses == 2 && plan.achieved_distance <= SYNTHESIS_TOL;
    let k1 = search_layers(&ss, 1, &opts().with_restarts(200), &[]).unwrap();
    let k1_min = k1
        .per_restart_distances
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let k1_ok = k1.per_restart_distances.len() == 200 && k1_min > 1e-3;
    let swap_ok = !is_entangling(&gate(StandardGate::Swap), SEED).unwrap()
        && matches!(
            synthesize_cnot(&gate(StandardGate::Swap), 3, &o),
            Err(Error::NotEntangling)
        );
    report(
        6,
        oracle && cz_ok && ss_ok && k1_ok && swap_ok,
        &format!(
            "cz: {} use(s) at {:.1e}; sqrt_swap: {} uses at {:.1e}, k=1 best of 200 restarts {k1_min:.4}; swap rejected: {swap_ok}",
            cz.uses, cz.achieved_distance, plan.uses, plan.achieved_distance
        ),
    );
}

#[test]
fn criterion_7_fern() {
    let sys = barnsley_fern_system();
    let sum_ok = sys.maps().iter().map(|m| m.probability).sum::<f64>() == 1.0;
    let tr_ok = sys.maps()[1].translation == [0.0, 1.6] && sys.maps()[3].translation == [0.0, 0.44];
    let a = chaos_game(&sys, (0.0, 0.0), 1_000_000, 20, SEED).unwrap();
    let b = chaos_game(&sys, (0.0, 0.0), 1_000_000, 20, SEED).unwrap();
    let identical = a.points.len() == b.points.len()
        && a.points
            .iter()
            .zip(&b.points)
            .all(|(p, q)| p.0.to_bits() == q.0.to_bits() && p.1.to_bits() == q.1.to_bits());
    let confined = a.points.iter().all(|&p| FERN_ENVELOPE.contains(p));
    let stem = a.points.iter().zip(&a.map_indices).filter(|(_, &k)| k == 0);
    let stem_ok = stem.clone().all(|(p, _)| p.0 == 0.0) && stem.count() > 0;
    report(
        7,
        sum_ok && tr_ok && identical && confined && stem_ok,
        &format!("probabilities sum {sum_ok}, translations {tr_ok}, bit-identical {identical}, 1e6 points in envelope {confined}, stem x=0 {stem_ok}"),
    );
}

#[test]
fn criterion_8_metric_axioms() {
    let mut worst: f64 = 0.0;
    for m in MetricKind::all() {
        for i in 0..1000u64 {
            let s = qstrength::rng::stream_seed(SEED, i);
            let n = 1 + (i % 3) as usize;
            let [u, v, w] =
                [0, 1, 2].map(|k| haar_random_unitary(n, qstrength::rng::stream_seed(s, k)));
            let d = |a: &UnitaryOperator, b: &UnitaryOperator| distance(m, a, b).unwrap();
            let uv = d(&u, &v);
            worst = worst
                .max(d(&u, &u))
                .max(-uv)
                .max((uv - d(&v, &u)).abs())
                .max(uv - d(&u, &w) - d(&w, &v));
            let (p, q) = (
                haar_random_unitary(n, qstrength::rng::stream_seed(s, 3)),
                haar_random_unitary(n, qstrength::rng::stream_seed(s, 4)),
            );
            let pu = p.compose(&u).unwrap().compose(&q).unwrap();
            let pv = p.compose(&v).unwrap().compose(&q).unwrap();
            worst = worst.max((d(&pu, &pv) - uv).abs());
        }
    }
    report(8, worst <= 1e-9, &format!("metric axioms and bi-unitary invariance on 1000 triples per metric, max violation {worst:.2e}"));
}

fn cli(args: &[&str], threads: &str) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_qstrength"))
        .args(["--format", "records"])
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .env_remove("QSTRENGTH_SEED")
        .env_remove("QSTRENGTH_RESTARTS")
        .output()
        .expect("run qstrength");
    (out.status.code().unwrap_or(-1), out.stdout)
}

#[test]
fn criterion_9_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fern.csv");
    let pgm = dir.path().join("fern.pgm");
    let layers = dir.path().join("layers");
    let runs: Vec<(&str, Vec<&str>)> = vec![
        (
            "strength",
            vec!["strength", "--gate", "cnot", "--metric", "opnorm"],
        ),
        (
            "props",
            vec![
                "props",
                "--metric",
                "all",
                "--samples",
                "3",
                "--restarts",
                "8",
            ],
        ),
        (
            "lowerbound",
            vec!["lowerbound", "--gate", "swap", "--metric", "opnorm"],
        ),
        (
            "synth",
            vec![
                "synth",
                "--gate",
                "sqrt_swap",
                "--layers-dir",
                layers.to_str().unwrap(),
            ],
        ),
        (
            "fern",
            vec![
                "fern",
                "--csv",
                csv.to_str().unwrap(),
                "--pgm",
                pgm.to_str().unwrap(),
            ],
        ),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, args) in &runs {
        let first = cli(args, "1");
        let files = (std::fs::read(&csv).ok(), std::fs::read(&pgm).ok());
        let second = cli(args, "1");
        let parallel = cli(args, "4");
        let same_files = files == (std::fs::read(&csv).ok(), std::fs::read(&pgm).ok());
        let same = first.0 == 0
            && first == second
            && first == parallel
            && same_files
            && !first.1.is_empty();
        ok &= same;
        lines.push(format!(
            "{name} {}",
            if same { "identical" } else { "DIFFERS" }
        ));
    }
    report(
        9,
        ok,
        &format!(
            "byte-identical records across runs and thread counts: {}",
            lines.join(", ")
        ),
    );
}

#[test]
fn strength_report_matches_direct_call() {
    let r = strength::strength(
        MetricKind::FROBENIUS,
        &gate(StandardGate::Cnot),
        &OptimizerOptions::default(),
    )
    .unwrap();
    let (code, out) = cli(&["strength", "--gate", "cnot"], "1");
    assert_eq!(code, 0);
    let rec: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(rec["value"].as_f64().unwrap(), r.value);
}
