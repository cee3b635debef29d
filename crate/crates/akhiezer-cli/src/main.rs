use akhiezer::verify::{verify, ConfigError, RunConfig};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

mod tables;

#[derive(Parser, Debug)]
#[command(name = "akhiezer", version, about = "Orthogonal polynomials on several intervals")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// JSON run configuration; without it the two-band default set is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    /// Quadrature order.
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Theta truncation tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Record wall-clock time per check.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Recurrence, polynomial samples, residues and periods as CSV.
    Compute,
    /// Run the identity suite and write report.json.
    Verify,
    /// Theta against quadrature, side by side.
    Compare,
}

impl Command {
    fn parse(name: &str) -> Option<Self> {
        match name {
            "compute" => Some(Command::Compute),
            "verify" => Some(Command::Verify),
            "compare" => Some(Command::Compare),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Compute(_) => 1,
            _ => 2,
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::new(&[-0.3], &[-1.0, 0.1, 1.0]),
    };
    if let Some(n) = cli.n_max {
        config.n_max = n;
    }
    if let Some(order) = cli.order {
        config.order = order;
    }
    if let Some(tol) = cli.tol {
        config.theta_tol = tol;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.display().to_string());
    }
    config.timings |= cli.timings;
    config.validate()?;
    Ok(config)
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Returns whether every check passed.
fn run(cli: &Cli) -> Result<bool, CliError> {
    let mut config = load(cli)?;
    let command = match (cli.command, config.command.as_deref()) {
        (Some(c), _) => c,
        (None, Some(name)) => Command::parse(name).ok_or_else(|| CliError::Usage(format!("unknown command {name:?}")))?,
        (None, None) => return Err(CliError::Usage("no command given (compute, verify or compare)".into())),
    };
    config.command = Some(format!("{command:?}").to_lowercase());
    let out = PathBuf::from(config.out.clone().unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&out).map_err(|source| CliError::Write {
        path: out.clone(),
        source,
    })?;
    match command {
        Command::Compute => {
            for name in tables::compute(&config, &out)? {
                println!("wrote {}", out.join(name).display());
            }
            Ok(true)
        }
        Command::Verify => {
            let report = verify(&config)?;
            write(&out.join("report.json"), report.to_json().as_bytes())?;
            let s = &report.summary;
            println!("{} passed, {} failed, {} skipped", s.passed, s.failed, s.skipped);
            for id in report.failures() {
                println!("failed: {id}");
            }
            Ok(report.passed())
        }
        Command::Compare => {
            let report = tables::compare(&config, &out)?;
            let s = &report.summary;
            println!("{} passed, {} failed", s.passed, s.failed);
            for id in report.failures() {
                println!("failed: {id}");
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("akhiezer: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
