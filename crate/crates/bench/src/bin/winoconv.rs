use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use winoconv::{Policy, DEFAULT_L1_BUDGET};
use winoconv_bench::{
    builtin_suite, l1_budget_from_env, parse_suite, run_bench, run_verify, serialize_suite,
    BenchOptions, LayerSuite, VerifyOptions,
};

/// Winograd convolution verification and benchmarks.
///
/// Exit status: 0 on success, 1 when a result exceeds its error tolerance,
/// 2 on usage, input or runtime errors. WINOCONV_L1_BUDGET overrides the
/// staging budget (bytes).
#[derive(Parser)]
#[command(name = "winoconv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time Winograd against the im2col baseline.
    Bench(BenchArgs),
    /// Check Winograd against the f64 direct convolution.
    Verify(VerifyArgs),
    /// Suite utilities.
    Suite {
        #[command(subcommand)]
        action: SuiteAction,
    },
}

#[derive(Subcommand)]
enum SuiteAction {
    /// Print the built-in suite in suite-file format.
    Print,
}

#[derive(Clone, Copy, ValueEnum)]
enum TileArg {
    #[value(name = "2")]
    Two,
    #[value(name = "4")]
    Four,
    #[value(name = "both")]
    Both,
}

impl TileArg {
    fn sizes(self) -> Vec<usize> {
        match self {
            TileArg::Two => vec![2],
            TileArg::Four => vec![4],
            TileArg::Both => vec![2, 4],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedulerArg {
    Dynamic,
    Static,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite file; the built-in suite when omitted.
    #[arg(long)]
    suite: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "4")]
    m: TileArg,
    /// Worker threads for both implementations [default: available cores].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    #[arg(long, value_enum, default_value = "dynamic")]
    scheduler: SchedulerArg,
    /// Timed runs per entry; overrides the suite's per-entry value.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: Option<u64>,
    /// Untimed runs before timing.
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    /// Also compare each result with the f64 oracle.
    #[arg(long)]
    verify: bool,
    /// Error bound for --verify [default: 1e-4 for m=2, 2e-3 for m=4].
    #[arg(long, value_parser = non_negative)]
    max_error: Option<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    suite: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    m: TileArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Use all-zero weights; every error must then be exactly 0.
    #[arg(long)]
    zero_weights: bool,
    /// Error bound [default: 1e-4 for m=2, 2e-3 for m=4].
    #[arg(long, value_parser = non_negative)]
    max_error: Option<f64>,
    #[command(flatten)]
    output: Output,
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a non-negative number, got `{s}`")),
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Tolerance,
}

impl From<winoconv::Error> for Failure {
    fn from(e: winoconv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load_suite(path: Option<&PathBuf>) -> Result<LayerSuite, Failure> {
    match path {
        Some(p) => parse_suite(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => Ok(builtin_suite()),
    }
}

fn l1_budget() -> Result<usize, Failure> {
    Ok(l1_budget_from_env()
        .map_err(Failure::Usage)?
        .unwrap_or(DEFAULT_L1_BUDGET))
}

fn sink(out: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let suite = load_suite(args.suite.as_ref())?;
    let workers = match args.workers {
        Some(w) => w as usize,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let opts = BenchOptions {
        ms: args.m.sizes(),
        workers,
        policy: match args.scheduler {
            SchedulerArg::Dynamic => Policy::Dynamic,
            SchedulerArg::Static => Policy::Static,
        },
        repeats: args.repeats.map(|r| r as usize),
        warmup: args.warmup,
        verify: args.verify,
        max_error: args.max_error,
        seed: args.seed,
        l1_budget: l1_budget()?,
    };
    let report = run_bench(&suite, &opts)?;
    let mut out = sink(args.output.out.as_ref())?;
    match args.output.format {
        Format::Csv => report.write_csv(&mut out)?,
        Format::Json => report.write_json(&mut out)?,
    }
    out.flush()?;
    for e in report.entries.iter().filter(|e| !e.passed()) {
        eprintln!(
            "{} (m={}): error {:e} exceeds tolerance {:e}",
            e.name,
            e.m,
            e.max_rel_error.unwrap_or(f64::NAN),
            e.tolerance.unwrap_or(f64::NAN)
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Tolerance)
    }
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let suite = load_suite(args.suite.as_ref())?;
    let opts = VerifyOptions {
        ms: args.m.sizes(),
        seed: args.seed,
        l1_budget: l1_budget()?,
        max_error: args.max_error,
        zero_weights: args.zero_weights,
    };
    let report = run_verify(&suite, &opts)?;
    let mut out = sink(args.output.out.as_ref())?;
    match args.output.format {
        Format::Csv => report.write_csv(&mut out)?,
        Format::Json => report.write_json(&mut out)?,
    }
    out.flush()?;
    for r in report.rows.iter().filter(|r| !r.passed()) {
        eprintln!(
            "{} (m={}): error {:e} exceeds tolerance {:e}",
            r.name, r.m, r.max_rel_error, r.tolerance
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Tolerance)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Bench(args) => bench(args),
        Command::Verify(args) => verify(args),
        Command::Suite {
            action: SuiteAction::Print,
        } => {
            print!("{}", serialize_suite(&builtin_suite()));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("winoconv: {msg}");
            ExitCode::from(2)
        }
    }
}
