use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use hmrtc_core::baselines::{wcp_solve, WcpConfig};
use hmrtc_core::experiment::{run_experiment, ExperimentSpec, Method, RunOptions};
use hmrtc_core::signal::{self, ExponentialModel};
use hmrtc_core::{io, metrics, selftest, solve, Error, SolveResult, SolverConfig, C64};

#[derive(Parser)]
#[command(name = "hmrtc", version, about = "Hankel-regularized tensor completion for exponential signals")]
struct Cli {
    /// Print errors as a JSON object on stderr.
    #[arg(long, global = true)]
    json_errors: bool,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Run solvers sequentially so results do not depend on scheduling.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random exponential tensor; writes signal.cten, truth.cten and model.json.
    Simulate(SimulateArgs),
    /// Generate a sampling mask.
    Sample(SampleArgs),
    /// Complete an observed tensor; writes reconstruction.cten and history.csv.
    Solve(SolveArgs),
    /// Compare a reconstruction against a reference tensor.
    Evaluate(EvaluateArgs),
    /// Run an experiment spec; writes trials.csv and summary.json.
    Experiment(ExperimentArgs),
    /// Run the randomized operator checks.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Tensor size, e.g. 20,20,20.
    #[arg(long, value_delimiter = ',', default_value = "20,20,20")]
    dims: Vec<usize>,
    /// Number of exponential components.
    #[arg(long, default_value_t = 5)]
    rank: usize,
    /// Generate undamped components.
    #[arg(long)]
    undamped: bool,
    /// Standard deviation of the complex Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_delimiter = ',', default_value = "20,20,20")]
    dims: Vec<usize>,
    /// Fraction of entries to observe.
    #[arg(long, default_value_t = 0.3)]
    sr: f64,
    /// Drop whole slices of this mode instead of sampling entries.
    #[arg(long)]
    drop_mode: Option<usize>,
    /// Fraction of slices dropped with --drop-mode.
    #[arg(long, default_value_t = 0.5)]
    drop_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output mask file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Observed tensor (CTEN1); unobserved entries are ignored.
    #[arg(long)]
    tensor: PathBuf,
    /// Sampling mask (CMSK1).
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, default_value = "hmrtc")]
    method: String,
    /// Solver configuration JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    r_hat: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Reconstructed tensor.
    estimate: PathBuf,
    /// Reference tensor.
    reference: PathBuf,
    /// Model JSON; adds the frequency RMSE of the estimate's spectral peaks.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    zero_pad: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    spec: PathBuf,
    /// Output directory; overrides the spec's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the spec's `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

type CliResult<T> = Result<T, Error>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DimMismatch { .. } | Error::InvalidParameter { .. } | Error::Spec(_) => 2,
        _ => 1,
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let model = signal::random_model(&a.dims, a.rank, !a.undamped, a.seed)?;
    let (truth, scale) = signal::normalize_max(&model.synthesize())?;
    let noisy = if a.sigma > 0.0 { signal::add_noise(&truth, a.sigma, a.seed)? } else { truth.clone() };
    let mut normalized = model.clone();
    for c in &mut normalized.components {
        c.amplitude /= C64::new(scale, 0.0);
    }
    create_dir(&a.out)?;
    io::save_tensor(a.out.join("signal.cten"), &noisy)?;
    io::save_tensor(a.out.join("truth.cten"), &truth)?;
    write_file(&a.out.join("model.json"), &(normalized.to_json()? + "\n"))?;
    Ok(())
}

fn sample(a: &SampleArgs) -> CliResult<()> {
    let mask = match a.drop_mode {
        Some(mode) => signal::drop_slices(&a.dims, mode, a.drop_fraction, a.seed)?,
        None => signal::sample_uniform(&a.dims, a.sr, a.seed)?,
    };
    io::save_mask(&a.out, &mask)
}

fn write_history(path: &Path, result: &SolveResult) -> CliResult<()> {
    let f = fs::File::create(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    w.write_record(["iter", "delta_x", "feasibility_gap", "lagrangian", "beta"])?;
    for h in &result.history {
        w.write_record([
            h.iter.to_string(),
            h.delta_x.to_string(),
            h.feasibility_gap.to_string(),
            h.lagrangian.to_string(),
            h.beta.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn solve_cmd(a: &SolveArgs, deterministic: bool) -> CliResult<()> {
    let method: Method = a.method.parse()?;
    let observed = io::load_tensor(&a.tensor)?;
    let mask = io::load_mask(&a.mask)?;
    if observed.dims() != mask.dims() {
        return Err(Error::DimMismatch { expected: observed.dims().to_vec(), found: mask.dims().to_vec() });
    }
    let mut cfg = match &a.config {
        Some(p) => {
            let s = fs::read_to_string(p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
            serde_json::from_str::<SolverConfig>(&s)?
        }
        None => SolverConfig::default(),
    };
    cfg.lambda = a.lambda.unwrap_or(cfg.lambda);
    cfg.r_hat = a.r_hat.unwrap_or(cfg.r_hat);
    cfg.tol = a.tol.unwrap_or(cfg.tol);
    cfg.max_iter = a.max_iter.unwrap_or(cfg.max_iter);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.parallel &= !deterministic;
    let result = match method {
        Method::Hmrtc => solve(&observed, &mask, &cfg)?,
        Method::Wcp => {
            let wcp = WcpConfig {
                r_hat: cfg.r_hat,
                max_iter: a.max_iter.unwrap_or(WcpConfig::default().max_iter),
                seed: cfg.seed,
                parallel: cfg.parallel,
                ..WcpConfig::default()
            };
            wcp_solve(&observed, &mask, &wcp)?
        }
    };
    create_dir(&a.out)?;
    io::save_tensor(a.out.join("reconstruction.cten"), &result.reconstruction)?;
    write_history(&a.out.join("history.csv"), &result)?;
    println!(
        "{}",
        json!({"method": method.name(), "iterations": result.iterations, "converged": result.converged})
    );
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let est = io::load_tensor(&a.estimate)?;
    let reference = io::load_tensor(&a.reference)?;
    let rlne = metrics::rlne(&est, &reference)?;
    let mut out = json!({"rlne": rlne, "clipped_rlne": metrics::clip_rlne(rlne)});
    if let Some(p) = &a.model {
        let s = fs::read_to_string(p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
        let model = ExponentialModel::from_json(&s)?;
        let peaks = metrics::estimate_frequencies(&est, model.rank(), a.zero_pad)?;
        out["short_count"] = json!(peaks.short);
        out["freq_rmse"] =
            if peaks.short { json!(null) } else { json!(metrics::freq_rmse(&model.frequencies(), &peaks.peaks)?) };
    }
    println!("{out}");
    Ok(())
}

fn experiment(a: &ExperimentArgs, opts: RunOptions) -> CliResult<()> {
    let mut spec = ExperimentSpec::load(&a.spec)?;
    if let Some(seed) = a.seed {
        spec.master_seed = seed;
    }
    let dir = a
        .out
        .clone()
        .or_else(|| spec.output.clone())
        .ok_or_else(|| Error::Spec("field `output`: missing and no --out given".into()))?;
    let out = run_experiment(&spec, opts)?;
    out.write(&dir)?;
    for c in &out.summary.cells {
        println!(
            "{} R={} r_hat={} sr={} sigma={} lambda={}: mean clipped RLNE {:.4e} over {} trials",
            c.cell.method.name(),
            c.cell.rank,
            c.cell.r_hat,
            c.cell.sr,
            c.cell.sigma,
            c.cell.lambda,
            c.aggregate.mean_clipped_rlne,
            c.aggregate.trials
        );
    }
    Ok(())
}

fn selftest_cmd(a: &SelftestArgs) -> CliResult<bool> {
    let results = selftest::run(a.seed)?;
    let mut all = true;
    for r in &results {
        println!(
            "{} {}: worst {:.3e} (tolerance {:.0e})",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.worst,
            r.tolerance
        );
        all &= r.passed;
    }
    Ok(all)
}

fn run(cli: &Cli) -> CliResult<bool> {
    if cli.threads > 0 {
        // Ignore the error raised when the global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let opts = RunOptions { threads: cli.threads, deterministic: cli.deterministic };
    match &cli.command {
        Command::Simulate(a) => simulate(a)?,
        Command::Sample(a) => sample(a)?,
        Command::Solve(a) => solve_cmd(a, cli.deterministic)?,
        Command::Evaluate(a) => evaluate(a)?,
        Command::Experiment(a) => experiment(a, opts)?,
        Command::Selftest(a) => return selftest_cmd(a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() && std::env::args().any(|a| a == "--json-errors") => {
            let msg = e.render().to_string();
            eprintln!("{}", json!({"error": "usage", "message": msg.trim_end(), "exit_code": 2}));
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            let code = exit_code(&e);
            let mut stderr = std::io::stderr().lock();
            if cli.json_errors {
                let _ = writeln!(stderr, "{}", json!({"error": e.kind(), "message": e.to_string(), "exit_code": code}));
            } else {
                let _ = writeln!(stderr, "error: {e}");
            }
            ExitCode::from(code)
        }
    }
}
