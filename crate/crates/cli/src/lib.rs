//! Command-line front end: argument parsing, exit codes and run wiring.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;
mod settings;

pub use manifest::{read_manifest, sha256_file, Manifest};

#[derive(Debug, Parser)]
#[command(name = "nv-eddy", version, about = "Eddy-current imaging with a microwave-free NV magnetometer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Raster-scan a pattern and write R/θ images with a manifest
    Scan(Common),
    /// Fit the resolution kernel to the averaged dot cross section
    Resolution(ResolutionArgs),
    /// Sweep drive frequency and fit first-order cutoffs
    Bandwidth(Common),
    /// Minimum detectable conductivity for a disc sample
    Sensitivity(Common),
    /// Skin depth for conductivity/frequency pairs
    SkinDepth(SkinDepthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Analytic,
    Timedomain,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration file
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `[run] out`)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Noise seed (overrides `[run] seed`)
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads for the scan
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Scan evaluation path (overrides `[scan] mode`)
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Args)]
pub struct ResolutionArgs {
    #[command(flatten)]
    pub common: Common,
    /// Analyse an existing R.csv instead of scanning
    #[arg(long, value_name = "CSV")]
    pub image: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SkinDepthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Conductivity in S/m; repeatable
    #[arg(long, value_name = "S/m")]
    pub sigma: Vec<f64>,
    /// Frequency in Hz; repeatable
    #[arg(long, value_name = "Hz")]
    pub frequency: Vec<f64>,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, missing inputs: exit 2.
    Usage(anyhow::Error),
    /// Failure while computing or writing results: exit 1.
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub(crate) fn usage(e: impl Into<anyhow::Error>) -> Self {
        CliError::Usage(e.into())
    }

    pub(crate) fn runtime(e: impl Into<anyhow::Error>) -> Self {
        CliError::Runtime(e.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (CliError::Usage(e) | CliError::Runtime(e)) = self;
        // library errors already inline their cause, so skip repeats
        let mut shown = e.to_string();
        write!(f, "{shown}")?;
        for cause in e.chain().skip(1) {
            let text = cause.to_string();
            if !shown.contains(&text) {
                write!(f, ": {text}")?;
                shown = text;
            }
        }
        Ok(())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    let threads = match &cli.command {
        Command::Scan(c) | Command::Bandwidth(c) | Command::Sensitivity(c) => c.threads,
        Command::Resolution(r) => r.common.threads,
        Command::SkinDepth(s) => s.common.threads,
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::usage(anyhow::anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::runtime)?;
    }
    match cli.command {
        Command::Scan(c) => commands::scan(&c),
        Command::Resolution(r) => commands::resolution(&r),
        Command::Bandwidth(c) => commands::bandwidth(&c),
        Command::Sensitivity(c) => commands::sensitivity(&c),
        Command::SkinDepth(s) => commands::skin_depth(&s),
    }
}

/// Parses `std::env::args`, runs, reports errors on stderr.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nv-eddy: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
