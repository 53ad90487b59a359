use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wilkinson_core::with_precision;
use wilkinson_harness::config::{parse_tolerance, Format, Overrides};
use wilkinson_harness::{run, Command, ExperimentConfig, Figure, HarnessError, Result};

/// Experiments on the Wilkinson-shift QR iteration for symmetric
/// tridiagonal matrices.
#[derive(Parser)]
#[command(name = "wilkinson-harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Sub {
    /// Trace one orbit step by step.
    Orbit,
    /// Convergence-rate fits over random starts (or one given start).
    Rates,
    /// Chart round-trip errors.
    Chart,
    /// Solve for the start with a given sign itinerary.
    Cantor,
    /// Toda-flow monotonicity checks.
    Toda,
    /// Export the sampled curves behind a figure.
    Figures {
        #[arg(long, value_name = "fig2|fig4|fig5|fig6|fig7")]
        which: String,
    },
    /// Run the invariant checks. Always writes JSON.
    Audit,
}

#[derive(Args)]
struct Opts {
    /// Flat `key = value` config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Increasing eigenvalues, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    spectrum: Option<String>,
    /// Chart permutation, 1-based, comma separated.
    #[arg(long, global = true)]
    chart: Option<String>,
    /// random | matrix:D;O | coords:B | itinerary:SIGNS@Y0
    #[arg(long, global = true, allow_hyphen_values = true)]
    start: Option<String>,
    /// Working precision; rounded up to the next supported level.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// name=value, repeatable.
    #[arg(long = "tol", global = true)]
    tol: Vec<String>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of random starts.
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Slice depth for cantor and fig7.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Assert whether the spectrum is free of three-term progressions.
    #[arg(long, global = true)]
    ap_free: Option<bool>,
}

impl Opts {
    fn overrides(&self) -> Result<Overrides> {
        Ok(Overrides {
            spectrum: self.spectrum.clone(),
            chart: self.chart.clone(),
            start: self.start.clone(),
            max_iter: self.max_iter,
            precision_bits: self.precision_bits,
            tolerances: self.tol.iter().map(|t| parse_tolerance(t)).collect::<Result<_>>()?,
            format: self.format.as_deref().map(str::parse::<Format>).transpose()?,
            seed: self.seed,
            starts: self.starts,
            depth: self.depth,
            ap_free: self.ap_free,
            out: self.out.clone(),
        })
    }
}

fn command(sub: &Sub) -> Result<Command> {
    Ok(match sub {
        Sub::Orbit => Command::Orbit,
        Sub::Rates => Command::Rates,
        Sub::Chart => Command::Chart,
        Sub::Cantor => Command::Cantor,
        Sub::Toda => Command::Toda,
        Sub::Figures { which } => Command::Figures(which.parse::<Figure>()?),
        Sub::Audit => Command::Audit,
    })
}

fn execute(cli: &Cli) -> Result<Option<HarnessError>> {
    let cmd = command(&cli.command)?;
    let mut cfg = ExperimentConfig::resolve(cli.opts.config.as_deref(), &cli.opts.overrides()?)?;
    if cmd == Command::Audit {
        cfg.format = Format::Json;
    }
    let outcome = with_precision!(cfg.precision()?, R => run::<R>(cmd, &cfg))?;
    let mut out: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    outcome.report.write(cfg.format, &mut out)?;
    out.flush()?;
    Ok(outcome.failure)
}

fn report_error(e: &HarnessError) -> ExitCode {
    match e.step() {
        Some(k) => eprintln!("error at step {k}: {e}"),
        None => eprintln!("error: {e}"),
    }
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(failure)) => report_error(&failure),
        Err(e) => report_error(&e),
    }
}
