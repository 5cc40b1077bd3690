#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qmedian::check::{prefix_oracle, run_checks};
use qmedian::dataset::format_dataset;
use qmedian::statevector::DEFAULT_MAX_BITS;
use qmedian::{
    amplification_loop, classical_estimate, eps_est, k_closed_form, load_dataset, make_oracle, median_search,
    predicted_fraction, prepare, synth_dataset, AdaptiveConfig, Dataset, Eps0Update, Error, Mode, RunPlan,
};

const USAGE: u8 = 1;
const DATA: u8 = 2;
const NUMERICAL: u8 = 3;

const SWEEP_HEADER: [&str; 8] = [
    "r",
    "k_re",
    "k_im",
    "k_abs",
    "approx_2sqrt2",
    "p_below_analytic",
    "p_below_exact",
    "abs_err",
];

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }

    fn data(message: impl Into<String>) -> Self {
        Self { code: DATA, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Parse { .. } => DATA,
            Error::Numerical(_) | Error::OutOfRange { .. } | Error::DegenerateThreshold(_) => NUMERICAL,
            Error::Size(_) | Error::Index { .. } | Error::Parameter(_) => USAGE,
        };
        Self { code, message: err.to_string() }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "qmedian", version, about = "Amplitude-amplification median estimation on a simulated register")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset with a chosen imbalance at a threshold
    Gen(GenArgs),
    /// Estimate the signed imbalance at a threshold
    Estimate(EstimateArgs),
    /// Binary-search the median
    Median(MedianArgs),
    /// Tabulate the closed-form amplitude against loop count
    Sweep(SweepArgs),
    /// Run the numerical verification suite
    Check(CheckArgs),
    /// Classical sampling estimate of the imbalance
    Baseline(BaselineArgs),
}

#[derive(Args)]
struct SeedArg {
    #[arg(long, env = "QMEDIAN_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    /// Register width in bits; the dataset has 2^n values
    #[arg(long)]
    n: u32,
    #[arg(long, allow_hyphen_values = true)]
    eps: f64,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Sample,
}

impl From<ModeArg> for Mode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Sample => Mode::Sampled,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long, default_value_t = 0.1)]
    eps0: f64,
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    #[arg(long, default_value_t = 3.0)]
    kappa: f64,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[command(flatten)]
    seed: SeedArg,
    /// Override the sample count ceil(1/theta^2)
    #[arg(long)]
    alpha: Option<u64>,
    /// Override the loop count floor(1/(20 eps0))
    #[arg(long)]
    beta: Option<u64>,
    /// Rebuild the state for every sample instead of sampling one state repeatedly
    #[arg(long)]
    resimulate: bool,
    /// Write the JSON record here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MedianArgs {
    #[arg(long)]
    data: PathBuf,
    /// Lower end of the search bracket; defaults to the dataset minimum
    #[arg(long, allow_hyphen_values = true)]
    min: Option<f64>,
    /// Upper end of the search bracket; defaults to the dataset maximum
    #[arg(long, allow_hyphen_values = true)]
    max: Option<f64>,
    #[arg(long)]
    resolution: f64,
    #[arg(long, default_value_t = 0.01)]
    eps_min: f64,
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    #[arg(long, default_value_t = 3.0)]
    kappa: f64,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    alpha: Option<u64>,
    /// Shrink eps0 to half the last estimate instead of halving it
    #[arg(long)]
    eps0_from_estimate: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, allow_hyphen_values = true)]
    eps: f64,
    /// Largest loop count tabulated
    #[arg(long)]
    beta_max: u64,
    /// Also simulate a 2^n register; eps must then be a multiple of 2/2^n
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long)]
    samples: u64,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    load_dataset(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::data(format!("{}: {e}", path.display()));
    let mut file = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    file.write_all(bytes).map_err(io)?;
    file.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure { code: NUMERICAL, message: e.to_string() })?;
    text.push('\n');
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn assumptions() {
    eprintln!("assuming: values equal to the threshold count as above it");
    eprintln!("assuming: eps and eps_min are smaller than 0.1");
}

fn cmd_gen(args: GenArgs) -> CliResult {
    if args.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let synth = synth_dataset(args.n, args.eps, args.mu, args.seed.seed)?;
    write_atomic(&args.out, format_dataset(&synth.dataset).as_bytes())?;
    println!("achieved_eps={:?}", synth.achieved_eps);
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> CliResult {
    let dataset = read_dataset(&args.data)?;
    assumptions();
    let mut plan = RunPlan::new(args.eps0, args.theta, args.kappa, args.mode.into(), args.seed.seed)?;
    if let Some(alpha) = args.alpha {
        plan = plan.with_alpha(alpha)?;
    }
    if let Some(beta) = args.beta {
        plan = plan.with_beta(beta)?;
    }
    plan.resimulate = args.resimulate;
    let record = eps_est(&dataset, args.mu, &plan)?;
    emit_json(&record, args.out.as_deref())
}

#[derive(Serialize)]
struct MedianJson {
    mu_hat: f64,
    rank_below: usize,
    steps: u32,
    calls: u32,
}

fn cmd_median(args: MedianArgs) -> CliResult {
    let dataset = read_dataset(&args.data)?;
    assumptions();
    let config = AdaptiveConfig {
        theta: args.theta,
        kappa: args.kappa,
        mode: args.mode.into(),
        seed: args.seed.seed,
        update: if args.eps0_from_estimate { Eps0Update::HalfEstimate } else { Eps0Update::Halve },
        alpha: args.alpha,
    };
    let min = args.min.unwrap_or(dataset.min());
    let max = args.max.unwrap_or(dataset.max());
    let outcome = median_search(&dataset, min, max, args.resolution, args.eps_min, &config)?;
    let json = MedianJson {
        mu_hat: outcome.mu_hat,
        rank_below: outcome.rank_below,
        steps: outcome.steps,
        calls: outcome.calls,
    };
    emit_json(&json, args.out.as_deref())
}

fn cmd_sweep(args: SweepArgs) -> CliResult {
    if !(args.eps.abs() <= 1.0) {
        return Err(Failure::usage(format!("--eps must lie in [-1, 1], got {}", args.eps)));
    }
    let mut simulated = match args.n {
        None => None,
        Some(n) => {
            if n == 0 || n > DEFAULT_MAX_BITS {
                return Err(Failure::usage(format!("--n must lie in 1..={DEFAULT_MAX_BITS}, got {n}")));
            }
            let len = 1u64 << n;
            let below = len as f64 * (1.0 + args.eps) / 2.0;
            if below.fract() != 0.0 {
                return Err(Failure::usage(format!("--eps {} is not reachable with 2^{n} values", args.eps)));
            }
            let oracle = prefix_oracle(n, below as usize)?;
            let state = prepare(&oracle)?;
            Some((oracle, state))
        }
    };

    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::data(e.to_string());
    writer.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in 0..=args.beta_max {
        let k = k_closed_form(args.eps, r);
        let analytic = predicted_fraction(args.eps, r);
        let (exact, err) = match simulated.as_mut() {
            Some((oracle, state)) => {
                if r > 0 {
                    amplification_loop(state, oracle, 1)?;
                }
                let p = state.probability_of(oracle.below_mask())?;
                (format!("{p:?}"), format!("{:?}", (p - analytic).abs()))
            }
            None => (String::new(), String::new()),
        };
        let approx = 2.0 * std::f64::consts::SQRT_2 * r as f64 * args.eps;
        writer
            .write_record([
                r.to_string(),
                format!("{:?}", k.re),
                format!("{:?}", k.im),
                format!("{:?}", k.norm()),
                format!("{approx:?}"),
                format!("{analytic:?}"),
                exact,
                err,
            ])
            .map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| Failure::data(e.to_string()))?;
    write_atomic(&args.csv, &bytes)
}

fn cmd_check(args: CheckArgs) -> CliResult {
    if !(args.tol >= 0.0) {
        return Err(Failure::usage(format!("--tol must be non-negative, got {}", args.tol)));
    }
    let report = run_checks(args.n, args.seed.seed)?;
    for entry in &report.entries {
        let status = if entry.max_error < args.tol { "ok" } else { "FAIL" };
        println!("{status:4} {:<28} n={:<3} max_error={:e}", entry.name, entry.n, entry.max_error);
    }
    if report.passed(args.tol) {
        Ok(())
    } else {
        Err(Failure {
            code: NUMERICAL,
            message: format!("some checks reached the tolerance {:e}", args.tol),
        })
    }
}

#[derive(Serialize)]
struct BaselineJson {
    f_hat: f64,
    eps_hat: f64,
    m: u64,
    stderr_model: f64,
}

fn cmd_baseline(args: BaselineArgs) -> CliResult {
    let dataset = read_dataset(&args.data)?;
    assumptions();
    let oracle = make_oracle(&dataset, args.mu);
    let est = classical_estimate(&oracle, args.samples, args.seed.seed)?;
    let json = BaselineJson {
        f_hat: est.f_hat,
        eps_hat: est.eps_hat,
        m: est.samples,
        stderr_model: est.stderr_model(),
    };
    emit_json(&json, args.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { USAGE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Median(a) => cmd_median(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Check(a) => cmd_check(a),
        Command::Baseline(a) => cmd_baseline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
