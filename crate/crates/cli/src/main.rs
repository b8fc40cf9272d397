use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use echo_qram::io::{OutputFormat, RunConfig};

mod commands;

/// Environment variable that caps the worker thread count.
const THREADS_ENV: &str = "QRAM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "qram", version, about = "Cavity echo memory and transfer simulator")]
struct Cli {
    /// Configuration file (`key = value` lines grouped in sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `csv` or `csv+svg`; overrides `output.format`.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Refuse to run anything that would draw random numbers.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Storage and retrieval efficiencies of the memory.
    Efficiency,
    /// Optimal inhomogeneous broadening, analytic and numeric.
    Match,
    /// Memory-to-processor transfer report and efficiency threshold.
    Transfer,
    /// Time-domain run of the discretized ensemble.
    Oracle,
    /// Dataset behind one figure (fig1a..fig5, or `all`).
    Figure { id: String },
    /// Closed forms against each other and against the oracle.
    Verify,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Self::Efficiency => "efficiency".into(),
            Self::Match => "match".into(),
            Self::Transfer => "transfer".into(),
            Self::Oracle => "oracle".into(),
            Self::Figure { id } => format!("figure-{id}"),
            Self::Verify => "verify".into(),
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("cannot configure the thread pool")?;
    Ok(())
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    if let Some(f) = &cli.format {
        cfg.output.format = f.parse::<OutputFormat>()?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    let cfg = resolve(&cli)?;
    // No command draws random numbers, so --seedless always holds.
    let ctx = commands::Context::new(cfg, cli.seedless)?;
    let outcome = match &cli.command {
        Command::Efficiency => commands::efficiency(&ctx).map(|_| true),
        Command::Match => commands::matching(&ctx).map(|_| true),
        Command::Transfer => commands::transfer(&ctx).map(|_| true),
        Command::Oracle => commands::oracle(&ctx).map(|_| true),
        Command::Figure { id } => commands::figure(&ctx, id).map(|_| true),
        Command::Verify => commands::verify(&ctx),
    }?;
    ctx.write_sidecar(&cli.command.name())?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let line = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::from(2)
        }
    }
}
