use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coldchain::config::parse_scenario;
use coldchain::run::{run_to_dir, RunError, RunOptions};
use coldchain::sweep::threads_from_env;

#[derive(Parser)]
#[command(name = "coldchain", version, about = "Moment-chain closures of the cold plasma equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spatially affine solutions (simulate, compare, phase, continue).
    Affine(Common),
    /// Traveling waves.
    Twave(Common),
    /// The 1D field solver.
    Field(Common),
    /// Parameter sweeps of affine initial data.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default `out/<name>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integrator relative tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// No progress output.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, c) = match &cli.command {
        Command::Affine(c) => ("affine", c),
        Command::Twave(c) => ("twave", c),
        Command::Field(c) => ("field", c),
        Command::Sweep(c) => ("sweep", c),
    };
    match execute(kind, c) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("coldchain: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(kind: &str, c: &Common) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&c.config)?;
    let stem = c.config.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    let sc = parse_scenario(&text, stem)?;
    if sc.kind() != kind {
        return Err(RunError::Config(coldchain::config::ConfigError {
            line: None,
            field: Some("kind".into()),
            message: format!("scenario is `{}` but the `{kind}` subcommand was used", sc.kind()),
        }));
    }
    if let Some(t) = c.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(RunError::Config(coldchain::config::ConfigError {
                line: None,
                field: Some("--tol".into()),
                message: "must lie in (0, 1)".into(),
            }));
        }
    }
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("out").join(&sc.name));
    if !c.quiet {
        eprintln!("running {} `{}` into {}", sc.kind(), sc.name, dir.display());
    }
    let summary = run_to_dir(&sc, &RunOptions { tol: c.tol, threads: threads_from_env() }, &dir)?;
    if !c.quiet {
        eprintln!("{}: {}", summary.scenario, summary.termination);
    }
    Ok(())
}
