mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::RunConfig;

/// Numerical laboratory for β-ensembles: equilibrium densities, transport
/// maps, kernel spectra, sampling, and fluctuation/universality checks.
#[derive(Debug, Parser)]
#[command(name = "betalab", version)]
struct Cli {
    /// TOML run configuration; defaults apply to every missing key.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config's `output_dir`.
    #[arg(long, short, global = true, env = "BETALAB_OUTPUT_DIR")]
    out: Option<PathBuf>,
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium density: writes NAME.equilibrium.json and NAME.density.csv.
    Equilibrium,
    /// Transport map to the semicircle: NAME.transport.json and NAME.transport.csv.
    Transport,
    /// Deformation-kernel spectrum: NAME.spectrum.csv and NAME.spectrum.json.
    Spectrum,
    /// Draws an ensemble sample: NAME.samples.bin.
    Sample,
    /// Fluctuations of linear statistics: NAME.clt.report.json and NAME.clt.csv.
    Clt {
        /// Reuse an existing sample container instead of sampling.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Local gap statistics against a Gaussian reference: NAME.bulk.report.json and NAME.gaps.csv.
    Bulk,
    /// Runs the identity suite and exits 1 if any check fails: NAME.verify.report.json.
    Verify,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] betalab::Error),
    #[error("{0}")]
    Verification(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "invalid-config",
            CliError::Numerical(e) => e.kind(),
            CliError::Verification(_) => "verification-failed",
            CliError::Io(_) => "io",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(cli.config.as_ref())?;
    if let Some(out) = cli.out {
        cfg.output_dir = Some(out);
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)?;
    let ctx = commands::Context { cfg, out };
    match cli.command {
        Command::Equilibrium => commands::equilibrium(&ctx),
        Command::Transport => commands::transport(&ctx),
        Command::Spectrum => commands::spectrum(&ctx),
        Command::Sample => commands::sample(&ctx),
        Command::Clt { samples } => commands::clt(&ctx, samples.as_deref()),
        Command::Bulk => commands::bulk(&ctx),
        Command::Verify => commands::verify(&ctx),
    }
}

fn report(err: &CliError) -> ExitCode {
    let record = json!({ "error": err.kind(), "message": err.to_string(), "exit_code": err.exit_code() });
    eprintln!("{record}");
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(&CliError::Config(e.to_string())),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
