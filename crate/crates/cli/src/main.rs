//! `netfit` command-line tool.
//!
//! Exit codes: 0 success, 2 usage, 3 invalid input, 4 numerical failure, 5 I/O.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netfit::estimators::{
    complete_with, decompose, denoise_with, summary, write_trace_csv, DenoiseOptions, TraceRecord,
};
use netfit::evalio::{run_sweep, SweepSpec};
use netfit::generators::{add_noise, derive_seed, equal_modules, random_mask, GeneratorKind, GeneratorSpec};
use netfit::gradients::check_gradient;
use netfit::metrics::{evaluate, targets_from_reference, MetricKind};
use netfit::{io, project, DecompositionConfig, DescentConfig, MetricSpec, NetError, WeightMatrix};

#[derive(Parser)]
#[command(name = "netfit", version, about = "Weighted network estimation from graph-metric targets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic network, optionally with a noisy copy and a missing-entry mask.
    Generate(GenerateArgs),
    /// Evaluate graph metrics of a network.
    Metrics(MetricsArgs),
    /// Compare analytic gradients with finite differences on a random network.
    Gradcheck(GradcheckArgs),
    /// Denoise a network towards metric targets.
    Denoise(DenoiseArgs),
    /// Split an additive mixture of two networks.
    Decompose(DecomposeArgs),
    /// Fill in missing edge weights.
    Complete(CompleteArgs),
    /// Run an experiment sweep described by a TOML file.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    RandomComplete,
    ScaleFree,
    Modular,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Number of nodes.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mean binary degree (scale-free).
    #[arg(long, default_value_t = 5.0)]
    avg_degree: f64,
    /// Number of modules (modular).
    #[arg(long, default_value_t = 8)]
    modules: usize,
    /// Fraction of nonzero weights inside modules (modular).
    #[arg(long, default_value_t = 0.9)]
    in_frac: f64,
    /// Output matrix (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Module assignment output (modular only).
    #[arg(long)]
    modules_out: Option<PathBuf>,
    /// Noise level for `--noisy-out`.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Write a noisy observation of the network here.
    #[arg(long)]
    noisy_out: Option<PathBuf>,
    /// Fraction of pairs marked missing for `--mask-out`.
    #[arg(long, default_value_t = 0.1)]
    missing_frac: f64,
    /// Write a random missing-entry mask here.
    #[arg(long)]
    mask_out: Option<PathBuf>,
}

#[derive(Args)]
struct InputArgs {
    /// Network as a dense CSV matrix.
    #[arg(long, conflicts_with = "edges", required_unless_present = "edges")]
    input: Option<PathBuf>,
    /// Network as a 1-based `i j w` edge list.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Node count for an edge list (default: largest index).
    #[arg(long, requires = "edges")]
    nodes: Option<usize>,
}

impl InputArgs {
    fn load(&self) -> netfit::Result<WeightMatrix> {
        match (&self.input, &self.edges) {
            (Some(p), _) => io::read_weight_matrix(p),
            (None, Some(p)) => io::read_edge_list(p, self.nodes),
            (None, None) => unreachable!("clap requires one input"),
        }
    }
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Metrics to evaluate, comma separated (default: all that apply).
    #[arg(long, value_delimiter = ',')]
    metric: Vec<MetricKind>,
    /// Module assignment, needed for modularity.
    #[arg(long)]
    modules: Option<PathBuf>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long)]
    metric: MetricKind,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 1-based node for local metrics (default: every node).
    #[arg(long)]
    node: Option<usize>,
    /// Module count for modularity.
    #[arg(long, default_value_t = 2)]
    modules: usize,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-6)]
    h: f64,
    /// Largest acceptable relative error.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

#[derive(Args)]
struct DescentArgs {
    /// Learning rate.
    #[arg(long, default_value_t = 1e-3)]
    mu: f64,
    /// Stop when the cost falls to this value.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iters: usize,
    /// Trace every this many iterations (0: first and last only).
    #[arg(long, default_value_t = 100)]
    log_every: usize,
}

impl DescentArgs {
    fn config(&self) -> DescentConfig {
        DescentConfig { mu: self.mu, eps: self.eps, max_iters: self.max_iters, log_every: self.log_every }
    }
}

#[derive(Args)]
struct TargetArgs {
    /// Targets file (TOML).
    #[arg(long, conflicts_with = "targets_from", required_unless_present = "targets_from")]
    targets: Option<PathBuf>,
    /// Compute targets from this reference matrix (CSV).
    #[arg(long, requires = "metrics")]
    targets_from: Option<PathBuf>,
    /// Metrics to take from the reference, comma separated.
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<MetricKind>,
    /// Module assignment for a modularity target taken from the reference.
    #[arg(long)]
    modules: Option<PathBuf>,
}

impl TargetArgs {
    fn load(&self, n: usize) -> netfit::Result<Vec<MetricSpec>> {
        load_targets(self.targets.as_deref(), self.targets_from.as_deref(), &self.metrics, self.modules.as_deref(), n)
    }
}

fn load_targets(
    file: Option<&Path>,
    reference: Option<&Path>,
    metrics: &[MetricKind],
    modules: Option<&Path>,
    n: usize,
) -> netfit::Result<Vec<MetricSpec>> {
    if let Some(f) = file {
        return io::read_targets(f, n);
    }
    let reference = io::read_weight_matrix(reference.expect("clap requires a target source"))?;
    if reference.n() != n {
        return Err(NetError::ShapeMismatch { expected: n, found: reference.n() });
    }
    let modules = modules.map(io::read_modules).transpose()?;
    targets_from_reference(&reference, metrics, modules.as_ref())
}

#[derive(Args)]
struct DenoiseArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    targets: TargetArgs,
    #[command(flatten)]
    descent: DescentArgs,
    /// True network, recorded as distance in the trace.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output matrix (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Trace output (CSV).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Mixture matrix (CSV, entries may exceed 1).
    #[arg(long)]
    input: PathBuf,
    /// Targets file for the first network.
    #[arg(long, required_unless_present = "reference1")]
    targets1: Option<PathBuf>,
    /// Targets file for the second network.
    #[arg(long, required_unless_present = "reference2")]
    targets2: Option<PathBuf>,
    /// Reference matrix for the first network's targets.
    #[arg(long, conflicts_with = "targets1", requires = "metrics1")]
    reference1: Option<PathBuf>,
    #[arg(long, conflicts_with = "targets2", requires = "metrics2")]
    reference2: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    metrics1: Vec<MetricKind>,
    #[arg(long, value_delimiter = ',')]
    metrics2: Vec<MetricKind>,
    #[arg(long)]
    modules1: Option<PathBuf>,
    #[arg(long)]
    modules2: Option<PathBuf>,
    #[command(flatten)]
    descent: DescentArgs,
    #[arg(long, default_value_t = 0.1)]
    lambda0: f64,
    #[arg(long, default_value_t = 1.05)]
    lambda_growth: f64,
    #[arg(long, default_value_t = 50)]
    outer_max: usize,
    #[arg(long, default_value_t = 1e-6)]
    recon_eps: f64,
    #[arg(long)]
    out1: PathBuf,
    #[arg(long)]
    out2: PathBuf,
    /// Reconstruction error per outer iteration (CSV).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct CompleteArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Missing pairs, 1-based `i j` per line.
    #[arg(long)]
    mask: PathBuf,
    #[command(flatten)]
    targets: TargetArgs,
    #[command(flatten)]
    descent: DescentArgs,
    /// Starting value for missing entries.
    #[arg(long, default_value_t = 0.5)]
    w_init: f64,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Net(NetError),
    Numerical(String),
    Io(String),
}

impl From<NetError> for Failure {
    fn from(e: NetError) -> Self {
        Failure::Net(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 4,
            Failure::Io(_) => 5,
            Failure::Net(e) => match e {
                NetError::Io(_) => 5,
                NetError::NonFiniteCost { .. }
                | NetError::ScheduleStall { .. }
                | NetError::DegenerateAllZero
                | NetError::EmptyNetwork => 4,
                _ => 3,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Io(m) => m.clone(),
            Failure::Net(e) => e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &[u8]) -> Outcome {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io_err = |e: &dyn Display| Failure::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(&e))?;
    tmp.write_all(contents).map_err(|e| io_err(&e))?;
    tmp.persist(path).map_err(|e| io_err(&e.error))?;
    Ok(())
}

fn write_or_print(path: Option<&Path>, contents: &str) -> Outcome {
    match path {
        Some(p) => write_atomic(p, contents.as_bytes()),
        None => {
            std::io::stdout().write_all(contents.as_bytes())?;
            Ok(())
        }
    }
}

fn trace_bytes(trace: &[TraceRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, trace).expect("writing to a Vec cannot fail");
    buf
}

fn with_buffer(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to a Vec cannot fail");
    buf
}

fn generate(a: &GenerateArgs) -> Outcome {
    let spec = match a.kind {
        Kind::RandomComplete => GeneratorSpec::random_complete(a.n, a.seed),
        Kind::ScaleFree => GeneratorSpec::scale_free(a.n, a.avg_degree, a.seed),
        Kind::Modular => GeneratorSpec::modular(a.n, a.modules, a.in_frac, a.seed),
    };
    if a.modules_out.is_some() && spec.kind != GeneratorKind::Modular {
        return Err(Failure::Usage("--modules-out needs --kind modular".into()));
    }
    let (w, modules) = spec.generate()?;
    write_atomic(&a.out, io::matrix_csv_string(w.as_array()).as_bytes())?;
    if let (Some(p), Some(m)) = (&a.modules_out, &modules) {
        write_atomic(p, &with_buffer(|b| io::write_modules(b, m)))?;
    }
    if let Some(p) = &a.noisy_out {
        let noisy = add_noise(&w, a.sigma, derive_seed(a.seed, &[2]))?;
        write_atomic(p, io::matrix_csv_string(noisy.as_array()).as_bytes())?;
    }
    if let Some(p) = &a.mask_out {
        let mask = random_mask(a.n, a.missing_frac, derive_seed(a.seed, &[3]))?;
        write_atomic(p, &with_buffer(|b| io::write_mask(b, &mask)))?;
    }
    Ok(())
}

fn metrics(a: &MetricsArgs) -> Outcome {
    let w = a.input.load()?;
    let modules = a.modules.as_deref().map(io::read_modules).transpose()?;
    let kinds: Vec<MetricKind> = if a.metric.is_empty() {
        MetricKind::ALL.into_iter().filter(|k| !k.needs_modules() || modules.is_some()).collect()
    } else {
        a.metric.clone()
    };
    let specs = targets_from_reference(&w, &kinds, modules.as_ref())?;
    let mut out = String::from("metric,node,value\n");
    for s in &specs {
        let node = s.node.map(|i| (i + 1).to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", s.kind, node, s.target));
    }
    write_or_print(a.out.as_deref(), &out)
}

fn gradcheck(a: &GradcheckArgs) -> Outcome {
    if a.n < 3 {
        return Err(Failure::Net(NetError::InvalidParams(format!("gradcheck needs n >= 3, got {}", a.n))));
    }
    let base = netfit::generators::random_complete(a.n, a.seed)?;
    let w = project(&(base.as_array() * 0.8 + 0.1))?;
    let nodes: Vec<Option<usize>> = match (a.metric.is_local(), a.node) {
        (false, _) => vec![None],
        (true, Some(0)) => return Err(Failure::Usage("--node is 1-based".into())),
        (true, Some(k)) => vec![Some(k - 1)],
        (true, None) => (0..a.n).map(Some).collect(),
    };
    let modules = a.metric.needs_modules().then(|| equal_modules(a.n, a.modules)).transpose()?;
    let mut out = String::from("metric,node,max_rel_err,mean_rel_err\n");
    let mut worst = 0.0f64;
    for node in nodes {
        let spec = MetricSpec { kind: a.metric, node, modules: modules.clone(), target: 0.0 };
        evaluate(&spec, &w)?;
        let check = check_gradient(&spec, &w, a.h)?;
        worst = worst.max(check.max_rel_err);
        let label = node.map(|i| (i + 1).to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{:e},{:e}\n", a.metric, label, check.max_rel_err, check.mean_rel_err));
    }
    print!("{out}");
    if worst >= a.tol {
        return Err(Failure::Numerical(format!("gradient check failed: max relative error {worst:e} >= {:e}", a.tol)));
    }
    Ok(())
}

fn read_truth(path: Option<&Path>) -> netfit::Result<Option<WeightMatrix>> {
    path.map(io::read_weight_matrix).transpose()
}

fn denoise(a: &DenoiseArgs) -> Outcome {
    let w = a.input.load()?;
    let targets = a.targets.load(w.n())?;
    let truth = read_truth(a.truth.as_deref())?;
    let opts = DenoiseOptions { update_mask: None, truth: truth.as_ref() };
    let fit = denoise_with(&w, &targets, &a.descent.config(), &opts)?;
    write_atomic(&a.out, io::matrix_csv_string(fit.w_hat.as_array()).as_bytes())?;
    if let Some(p) = &a.trace {
        write_atomic(p, &trace_bytes(&fit.trace))?;
    }
    eprint!("{}", summary(&fit));
    Ok(())
}

fn decompose_cmd(a: &DecomposeArgs) -> Outcome {
    let mix = io::read_matrix(&a.input)?;
    let n = mix.nrows();
    let t1 = load_targets(a.targets1.as_deref(), a.reference1.as_deref(), &a.metrics1, a.modules1.as_deref(), n)?;
    let t2 = load_targets(a.targets2.as_deref(), a.reference2.as_deref(), &a.metrics2, a.modules2.as_deref(), n)?;
    let cfg = DecompositionConfig {
        inner: a.descent.config(),
        lambda0: a.lambda0,
        lambda_growth: a.lambda_growth,
        outer_max: a.outer_max,
        recon_eps: a.recon_eps,
    };
    let d = decompose(&mix, &t1, &t2, &cfg)?;
    write_atomic(&a.out1, io::matrix_csv_string(d.first.w_hat.as_array()).as_bytes())?;
    write_atomic(&a.out2, io::matrix_csv_string(d.second.w_hat.as_array()).as_bytes())?;
    if let Some(p) = &a.trace {
        let mut out = String::from("outer,recon_error\n");
        for (k, r) in d.recon_errors.iter().enumerate() {
            out.push_str(&format!("{k},{r}\n"));
        }
        write_atomic(p, out.as_bytes())?;
    }
    eprintln!("converged = {}\nouter_iterations = {}", d.converged, d.outer_iters);
    Ok(())
}

fn complete_cmd(a: &CompleteArgs) -> Outcome {
    let w = a.input.load()?;
    let mask = io::read_mask(&a.mask, w.n())?;
    let targets = a.targets.load(w.n())?;
    let truth = read_truth(a.truth.as_deref())?;
    let fit = complete_with(&w, &mask, &targets, a.w_init, &a.descent.config(), truth.as_ref())?;
    write_atomic(&a.out, io::matrix_csv_string(fit.w_hat.as_array()).as_bytes())?;
    if let Some(p) = &a.trace {
        write_atomic(p, &trace_bytes(&fit.trace))?;
    }
    eprint!("{}", summary(&fit));
    Ok(())
}

fn sweep(a: &SweepArgs) -> Outcome {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Failure::Io(format!("{}: {e}", a.config.display())))?;
    let spec = SweepSpec::from_toml(&text)?;
    let table = run_sweep(&spec)?;
    write_or_print(a.out.as_deref(), &table.to_csv())
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Metrics(a) => metrics(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Denoise(a) => denoise(a),
        Command::Decompose(a) => decompose_cmd(a),
        Command::Complete(a) => complete_cmd(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let head: Vec<&str> =
                text.lines().map(str::trim).take_while(|l| !l.is_empty() && !l.starts_with("Usage:")).collect();
            eprintln!("netfit: {}", head.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("netfit: {}", f.message().replace('\n', " "));
            ExitCode::from(f.code())
        }
    }
}
