use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use didbench_core::bench::BenchError;
use didbench_core::config::{BenchConfig, ConfigError};
use didbench_core::did::OperationKind;
use didbench_core::ledger::Platform;
use didbench_core::mls::MlsError;
use didbench_core::report::{self, Format, ReportError, SimulateOptions};

/// Simulated latency, cost and metadata-leakage benchmarks for ledger-based DID methods.
#[derive(Debug, Parser)]
#[command(name = "didbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the benchmark and write samples, summaries, tables, heatmaps and the payload corpus.
    Simulate(SimulateArgs),
    /// Compute MLS tables for a `<chain>/<operation>/*.json` payload corpus.
    Analyze(AnalyzeArgs),
    /// Re-render the tables of an earlier run.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file; the shipped calibration is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "didbench-out")]
    out: PathBuf,
    /// Table format.
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Overrides the config seed.
    #[arg(long, env = "DIDBENCH_SEED")]
    seed: Option<u64>,
    /// Comma-separated platforms (ethereum, xrpl, hedera).
    #[arg(long, value_delimiter = ',')]
    platforms: Option<Vec<String>>,
    /// Comma-separated operations to report.
    #[arg(long, value_delimiter = ',')]
    operations: Option<Vec<String>>,
    /// Overrides the config iteration count.
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Corpus root.
    corpus: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory of a previous simulate or analyze run.
    run: PathBuf,
    /// Write the tables here instead of only printing them.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "table")]
    format: Format,
}

/// A config or input-layout problem (exit 2) rather than an I/O failure (exit 1).
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(message.into()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<ReportError>() {
            return match e {
                ReportError::Config(_) | ReportError::Bench(BenchError::Config(_)) => 2,
                ReportError::Mls(MlsError::Layout { .. } | MlsError::EmptyCorpus) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn load_config(path: Option<&Path>) -> Result<BenchConfig> {
    match path {
        Some(path) => match BenchConfig::load(path) {
            Err(ConfigError::Io { path, source }) => Err(anyhow!("cannot read config {path}: {source}")),
            other => Ok(other?),
        },
        None => Ok(BenchConfig::defaults()),
    }
}

fn parse_list<T: std::str::FromStr>(items: &[String], what: &str) -> Result<Vec<T>> {
    items
        .iter()
        .map(|s| s.trim().parse::<T>().map_err(|_| usage(format!("unknown {what} {s:?}"))))
        .collect()
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut config = load_config(args.common.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(iterations) = args.iterations {
        config.iterations = iterations;
    }
    if let Some(platforms) = &args.platforms {
        config.platforms = parse_list::<Platform>(platforms, "platform")?;
    }
    let operations = match &args.operations {
        Some(ops) => parse_list::<OperationKind>(ops, "operation")?,
        None => config.operations.clone(),
    };
    config.validate()?;
    let options = SimulateOptions { out: args.common.out.clone(), format: args.common.format, operations };
    let manifest = report::simulate(&config, &options)?;
    println!(
        "simulate: {} files in {} (run_digest {}, seed {})",
        manifest.outputs.len() + 1,
        args.common.out.display(),
        manifest.run_digest,
        config.seed
    );
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let flatten = match &args.common.config {
        Some(path) => load_config(Some(path))?.mls,
        None => Default::default(),
    };
    let outcome = report::analyze(&args.corpus, &args.common.out, args.common.format, &flatten)
        .with_context(|| format!("analyzing {}", args.corpus.display()))?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "analyze: {} chains, {} warnings, tables in {} (run_digest {})",
        outcome.mls.chains.len(),
        outcome.warnings.len(),
        args.common.out.display(),
        outcome.manifest.run_digest
    );
    Ok(())
}

fn report_cmd(args: ReportArgs) -> Result<()> {
    let rendered = report::report(&args.run, args.out.as_deref(), args.format)?;
    print!("{rendered}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Analyze(args) => analyze(args),
        Command::Report(args) => report_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
