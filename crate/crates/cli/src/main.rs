//! `qstrength` command-line front end.
//!
//! Exit codes: 0 success, 1 a gated property failed (`props`), 2 malformed
//! input or flags, 3 non-unitary input, 4 degenerate CNOT strength, 5
//! non-entangling gate (`synth`), 6 unwritable output path.

mod records;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qstrength::fern::{self, BoundingBox};
use qstrength::matrix_io;
use qstrength::strength::{self, PropertyReport};
use qstrength::synth;
use qstrength::{Error, MetricKind, OptimizerOptions, StandardGate, UnitaryOperator};

use records::Record;

#[derive(Parser)]
#[command(
    name = "qstrength",
    version,
    about = "Strength of quantum gates, CNOT synthesis, and the fern IFS"
)]
struct Cli {
    /// Output style; `records` is line-delimited JSON with a pinned field order.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Records,
}

#[derive(Subcommand)]
enum Command {
    /// Distance from a gate to the nearest product of single-qubit unitaries.
    Strength {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value = "frobenius")]
        metric: String,
        #[command(flatten)]
        opt: OptArgs,
        /// Write the expanded witness operator in matrix text format.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Run the locality, chaining and stability harnesses.
    Props {
        /// Metric name, repeatable; `all` selects every metric.
        #[arg(long, default_value = "frobenius")]
        metric: Vec<String>,
        #[arg(long, default_value_t = 2)]
        qubits: usize,
        /// Overrides all three per-harness sample counts.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 100)]
        locality_samples: usize,
        #[arg(long, default_value_t = 100)]
        chaining_samples: usize,
        #[arg(long, default_value_t = 50)]
        stability_samples: usize,
        #[command(flatten)]
        opt: OptArgs,
    },
    /// Heuristic CNOT-count estimate ceil(K(U) / K(CNOT)).
    Lowerbound {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value = "frobenius")]
        metric: String,
        #[command(flatten)]
        opt: OptArgs,
    },
    /// Search for a CNOT built from uses of the given two-qubit gate.
    Synth {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 3)]
        max_uses: usize,
        #[command(flatten)]
        opt: OptArgs,
        /// Directory receiving one matrix file per local layer.
        #[arg(long)]
        layers_dir: Option<PathBuf>,
    },
    /// Chaos-game rendering of the Barnsley fern.
    Fern {
        /// Total chaos-game iterations, burn-in included.
        #[arg(long, default_value_t = fern::DEFAULT_ITERATIONS)]
        points: usize,
        #[arg(long, env = "QSTRENGTH_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = fern::DEFAULT_BURN_IN)]
        burn_in: usize,
        /// Raster size as WxH.
        #[arg(long, default_value = "200x200")]
        raster: String,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Plain PGM (P2) output path.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Target {
    /// Named gate: cnot, cz, swap, sqrt_swap, h, x, y, z, id1, id2, id3.
    #[arg(long)]
    gate: Option<String>,
    /// Matrix file in qstrength text format.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args)]
struct OptArgs {
    #[arg(long, env = "QSTRENGTH_SEED", default_value_t = 0)]
    seed: u64,
    /// Random restarts per optimization (default 32; 64 for synth).
    #[arg(long, env = "QSTRENGTH_RESTARTS")]
    restarts: Option<usize>,
    #[arg(long, default_value_t = 500)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

impl OptArgs {
    fn options(&self, default_restarts: usize) -> Result<OptimizerOptions, Failure> {
        let opts = OptimizerOptions {
            restarts: self.restarts.unwrap_or(default_restarts),
            max_sweeps: self.max_sweeps,
            convergence_tol: self.tol,
            master_seed: self.seed,
        };
        opts.validate().map_err(Failure::from)?;
        Ok(opts)
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn unwritable(path: &Path, err: std::io::Error) -> Self {
        Self::new(6, format!("cannot write {}: {err}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotUnitary { .. } => 3,
            Error::DegenerateCnotStrength(_) => 4,
            Error::NotEntangling => 5,
            _ => 2,
        };
        Self::new(code, e.to_string())
    }
}

struct Output {
    format: Format,
    text: String,
}

impl Output {
    fn record(&mut self, r: Record) {
        if self.format == Format::Records {
            self.text.push_str(&r.line());
            self.text.push('\n');
        }
    }

    fn human(&mut self, line: impl AsRef<str>) {
        if self.format == Format::Human {
            self.text.push_str(line.as_ref());
            self.text.push('\n');
        }
    }
}

fn load_target(t: &Target) -> Result<(String, UnitaryOperator), Failure> {
    if let Some(name) = &t.gate {
        let gate: StandardGate = name.parse()?;
        return Ok((gate.to_string(), gate.operator()));
    }
    let path = t.matrix.as_ref().expect("clap enforces one target");
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(2, format!("cannot read {}: {e}", path.display())))?;
    let m = matrix_io::parse_matrix(&text)?;
    let u = UnitaryOperator::new(m)?;
    Ok((path.display().to_string(), u))
}

fn parse_metric(s: &str) -> Result<MetricKind, Failure> {
    Ok(s.parse::<MetricKind>()?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::unwritable(path, e))
}

fn cmd_strength(
    out: &mut Output,
    target: &Target,
    metric: &str,
    opt: &OptArgs,
    witness_out: Option<&Path>,
) -> Result<u8, Failure> {
    let (source, u) = load_target(target)?;
    let metric = parse_metric(metric)?;
    let opts = opt.options(32)?;
    let r = strength::strength(metric, &u, &opts)?;
    if let Some(path) = witness_out {
        let mut text = format!("# witness for {source}, metric {metric}\n");
        text.push_str(&matrix_io::write_unitary(&r.argmin.expand()));
        write_file(path, &text)?;
    }
    let witness = witness_out.map(|p| p.display().to_string());
    out.record(
        Record::new("strength")
            .str("source", &source)
            .str("metric", metric.name())
            .int("num_qubits", u.num_qubits() as u64)
            .num("value", r.value)
            .int("restarts_used", r.restarts_used as u64)
            .bool("converged", r.converged)
            .nums("per_restart_values", &r.per_restart_values)
            .opt_str("witness", witness.as_deref()),
    );
    out.human(format!(
        "strength of {source} ({metric}): {}",
        records::float(r.value)
    ));
    out.human(format!(
        "  restarts: {}, converged: {}",
        r.restarts_used, r.converged
    ));
    for j in 0..r.argmin.num_qubits() {
        out.human(format!("  witness factor {j}:"));
        for line in matrix_io::write_unitary(&r.argmin.factor_operator(j))
            .lines()
            .skip(1)
        {
            out.human(format!("    {line}"));
        }
    }
    Ok(0)
}

fn property_record(r: &PropertyReport) -> Record {
    let mut rec = Record::new("property")
        .str("property", &r.property.to_string())
        .str("metric", r.metric.name())
        .int("num_qubits", r.num_qubits as u64)
        .int("instances_tested", r.instances_tested as u64)
        .num("tolerance", r.tolerance)
        .num("max_violation", r.max_violation)
        .bool("holds", r.holds);
    match &r.side_check {
        Some(s) => {
            rec = rec
                .str("side_check", s.label)
                .num("side_tolerance", s.tolerance)
                .num("side_max_violation", s.max_violation)
                .bool("side_holds", s.holds);
        }
        None => rec = rec.opt_str("side_check", None),
    }
    rec.nums("per_instance", &r.per_instance)
}

fn property_human(out: &mut Output, r: &PropertyReport) {
    out.human(format!(
        "{} [{}] on {} qubits, {} instances: max violation {:.3e} (tol {:.0e}) -> {}",
        r.property,
        r.metric,
        r.num_qubits,
        r.instances_tested,
        r.max_violation,
        r.tolerance,
        if r.holds { "holds" } else { "fails" }
    ));
    if let Some(s) = &r.side_check {
        out.human(format!(
            "    {}: max violation {:.3e} (tol {:.0e}) -> {}",
            s.label,
            s.max_violation,
            s.tolerance,
            if s.holds { "holds" } else { "fails" }
        ));
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_props(
    out: &mut Output,
    metrics: &[String],
    qubits: usize,
    samples: Option<usize>,
    locality: usize,
    chaining: usize,
    stability: usize,
    opt: &OptArgs,
) -> Result<u8, Failure> {
    let mut selected = Vec::new();
    for m in metrics {
        if m.eq_ignore_ascii_case("all") {
            selected.extend(MetricKind::all());
        } else {
            selected.push(parse_metric(m)?);
        }
    }
    if !(1..=5).contains(&qubits) {
        return Err(Failure::new(2, "--qubits must be in 1..=5"));
    }
    let (locality, chaining, stability) = match samples {
        Some(s) => (s, s, s),
        None => (locality, chaining, stability),
    };
    let opts = opt.options(32)?;
    let cnot = StandardGate::Cnot.operator();
    let mut gated_ok = true;
    for metric in selected {
        let loc = strength::check_locality(metric, qubits, locality, opts.master_seed, &opts)?;
        let chain = strength::check_chaining(metric, qubits, chaining, opts.master_seed, &opts)?;
        let stab = strength::check_stability(metric, qubits, stability, opts.master_seed, &opts)?;
        gated_ok &= loc.holds && chain.holds;
        for r in [&loc, &chain, &stab] {
            out.record(property_record(r));
            property_human(out, r);
        }
        let c = strength::stability_instance(metric, &cnot, &opts)?;
        out.record(
            Record::new("cnot_stability")
                .str("metric", metric.name())
                .num("strength", c.strength_u)
                .num("strength_embedded", c.strength_embedded)
                .num("gap", c.gap()),
        );
        out.human(format!(
            "    cnot: K = {:.6}, K(cnot x I) = {:.6}, gap {:.3e}",
            c.strength_u,
            c.strength_embedded,
            c.gap()
        ));
    }
    out.record(Record::new("props_summary").bool("locality_and_chaining_hold", gated_ok));
    out.human(if gated_ok {
        "locality and chaining hold"
    } else {
        "locality or chaining FAILED"
    });
    Ok(if gated_ok { 0 } else { 1 })
}

fn cmd_lowerbound(
    out: &mut Output,
    target: &Target,
    metric: &str,
    opt: &OptArgs,
) -> Result<u8, Failure> {
    let (source, u) = load_target(target)?;
    let metric = parse_metric(metric)?;
    let opts = opt.options(32)?;
    let r = strength::cnot_lower_bound(metric, &u, &opts)?;
    out.record(
        Record::new("lower_bound")
            .str("source", &source)
            .str("metric", metric.name())
            .num("target_strength", r.target_strength)
            .num("cnot_strength", r.cnot_strength)
            .int("heuristic_min_cnots", r.heuristic_min_cnots)
            .str("rigor", r.rigor_flag),
    );
    out.human(format!(
        "{source} [{metric}]: K = {:.6}, K(cnot) = {:.6}, at least {} CNOTs ({})",
        r.target_strength, r.cnot_strength, r.heuristic_min_cnots, r.rigor_flag
    ));
    Ok(0)
}

fn factor_entries(m: &qstrength::Mat2) -> Vec<f64> {
    let mut v = Vec::with_capacity(8);
    for i in 0..2 {
        for j in 0..2 {
            v.push(m[(i, j)].re);
            v.push(m[(i, j)].im);
        }
    }
    v
}

fn cmd_synth(
    out: &mut Output,
    target: &Target,
    max_uses: usize,
    opt: &OptArgs,
    layers_dir: Option<&Path>,
) -> Result<u8, Failure> {
    let (source, u) = load_target(target)?;
    if u.num_qubits() != 2 {
        return Err(Failure::new(
            2,
            format!(
                "synth needs a 2-qubit gate, {source} has {} qubits",
                u.num_qubits()
            ),
        ));
    }
    let opts = opt.options(64)?;
    let plan =
        match synth::synthesize_cnot(&u, max_uses, &opts) {
            Err(Error::NotEntangling) => return Err(Failure::new(
                5,
                format!(
                    "{source} is not entangling; synthesis requires an entangling two-qubit gate"
                ),
            )),
            other => other?,
        };
    let mut files = Vec::new();
    if let Some(dir) = layers_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::unwritable(dir, e))?;
        for (i, layer) in plan.layers.iter().enumerate() {
            let path = dir.join(format!("layer_{i}.txt"));
            let text = format!(
                "# layer {i} of {}\n{}",
                plan.layers.len(),
                matrix_io::write_unitary(&layer.expand())
            );
            write_file(&path, &text)?;
            files.push(path.display().to_string());
        }
    }
    let (ks, ds): (Vec<u64>, Vec<f64>) = plan.attempts.iter().map(|&(k, d)| (k as u64, d)).unzip();
    out.record(
        Record::new("synthesis")
            .str("source", &source)
            .int("uses", plan.uses as u64)
            .bool("success", plan.success)
            .num("achieved_distance", plan.achieved_distance)
            .num("tolerance", synth::SYNTHESIS_TOL)
            .ints("attempt_uses", &ks)
            .nums("attempt_best_distance", &ds),
    );
    out.human(format!(
        "{source}: {} with {} use(s), distance to CNOT {:.3e}",
        if plan.success {
            "CNOT found"
        } else {
            "no CNOT found"
        },
        plan.uses,
        plan.achieved_distance
    ));
    for (k, d) in &plan.attempts {
        out.human(format!("  k = {k}: best distance {d:.3e}"));
    }
    for (i, layer) in plan.layers.iter().enumerate() {
        out.record(
            Record::new("synthesis_layer")
                .int("index", i as u64)
                .nums("factor0", &factor_entries(&layer.factors()[0]))
                .nums("factor1", &factor_entries(&layer.factors()[1]))
                .opt_str("file", files.get(i).map(String::as_str)),
        );
    }
    for f in &files {
        out.human(format!("  wrote {f}"));
    }
    Ok(0)
}

fn parse_raster(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::new(2, format!("--raster expects WxH, got `{s}`"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.parse().map_err(|_| bad())?;
    let h: usize = h.parse().map_err(|_| bad())?;
    if w == 0 || h == 0 || w > 10_000 || h > 10_000 {
        return Err(bad());
    }
    Ok((w, h))
}

#[allow(clippy::too_many_arguments)]
fn cmd_fern(
    out: &mut Output,
    points: usize,
    seed: u64,
    burn_in: usize,
    raster: &str,
    csv: Option<&Path>,
    pgm: Option<&Path>,
) -> Result<u8, Failure> {
    let (width, height) = parse_raster(raster)?;
    let sys = fern::barnsley_fern_system();
    let cloud = fern::chaos_game(&sys, (0.0, 0.0), points, burn_in, seed)?;
    let envelope: BoundingBox = fern::FERN_ENVELOPE;
    let image = fern::rasterize(&cloud, width, height, &envelope)?;
    if let Some(path) = csv {
        write_file(path, &cloud.to_csv())?;
    }
    if let Some(path) = pgm {
        write_file(path, &image.to_pgm())?;
    }
    let b = cloud.bounds().expect("cloud is non-empty");
    out.record(
        Record::new("fern")
            .int("seed", seed)
            .int("iterations", points as u64)
            .int("burn_in", burn_in as u64)
            .int("points", cloud.len() as u64)
            .nums("bounds", &[b.xmin, b.xmax, b.ymin, b.ymax])
            .int("raster_width", width as u64)
            .int("raster_height", height as u64)
            .num("nonzero_fraction", image.nonzero_fraction())
            .opt_str("csv", csv.map(|p| p.display().to_string()).as_deref())
            .opt_str("pgm", pgm.map(|p| p.display().to_string()).as_deref()),
    );
    out.human(format!(
        "fern: {} points (seed {seed}, burn-in {burn_in}), x in [{:.4}, {:.4}], y in [{:.4}, {:.4}]",
        cloud.len(),
        b.xmin,
        b.xmax,
        b.ymin,
        b.ymax
    ));
    out.human(format!(
        "raster {width}x{height}: {:.2}% of pixels lit",
        100.0 * image.nonzero_fraction()
    ));
    Ok(0)
}

fn run(cli: &Cli, out: &mut Output) -> Result<u8, Failure> {
    match &cli.command {
        Command::Strength {
            target,
            metric,
            opt,
            witness_out,
        } => cmd_strength(out, target, metric, opt, witness_out.as_deref()),
        Command::Props {
            metric,
            qubits,
            samples,
            locality_samples,
            chaining_samples,
            stability_samples,
            opt,
        } => cmd_props(
            out,
            metric,
            *qubits,
            *samples,
            *locality_samples,
            *chaining_samples,
            *stability_samples,
            opt,
        ),
        Command::Lowerbound {
            target,
            metric,
            opt,
        } => cmd_lowerbound(out, target, metric, opt),
        Command::Synth {
            target,
            max_uses,
            opt,
            layers_dir,
        } => cmd_synth(out, target, *max_uses, opt, layers_dir.as_deref()),
        Command::Fern {
            points,
            seed,
            burn_in,
            raster,
            csv,
            pgm,
        } => cmd_fern(
            out,
            *points,
            *seed,
            *burn_in,
            raster,
            csv.as_deref(),
            pgm.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Output {
        format: cli.format,
        text: String::new(),
    };
    match run(&cli, &mut out) {
        Ok(code) => {
            print!("{}", out.text);
            ExitCode::from(code)
        }
        Err(f) => {
            print!("{}", out.text);
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
