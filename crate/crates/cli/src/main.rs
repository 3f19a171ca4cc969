use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sisdiag_cli::{commands, config, error::CliError};

/// Diagnose shift-invariant structure on finite abelian groups.
#[derive(Parser)]
#[command(name = "sisdiag", version, arg_required_else_help = true)]
struct Cli {
    /// One of: fiberize, range, frame-bounds, strata, principal, check-sp,
    /// range-operator, spectrum, spectral-projector, label-eigen,
    /// diagonalize, ds-check, gamma-check, gamma-diagonalize, verify.
    command: String,

    /// JSON config describing the group, action, generators, and operator.
    #[arg(long)]
    config: PathBuf,

    /// Seed override (beats the config; defaults to 0).
    #[arg(long)]
    seed: Option<u64>,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Eigenvalue clustering tolerance override.
    #[arg(long)]
    eps_eig: Option<f64>,

    /// Rank cutoff override.
    #[arg(long)]
    eps_rank: Option<f64>,

    /// Use all cores for fiberwise work (default: one thread).
    #[arg(long)]
    parallel: bool,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if !config::COMMANDS.contains(&cli.command.as_str()) {
        return Err(CliError::input(format!(
            "unknown command {:?}; expected one of {}",
            cli.command,
            config::COMMANDS.join(", ")
        )));
    }
    let (cfg, raw) = config::load_config(&cli.config)?;
    let opts = commands::RunOptions { seed: cli.seed, eps_eig: cli.eps_eig, eps_rank: cli.eps_rank };
    let report = commands::run(&cfg, &raw, &cli.command, &opts, cli.config.parent())?;
    let text = report.to_json();
    match &cli.out {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    // Reports must not depend on scheduling: fiberwise helpers return
    // index-ordered results either way, so the flag only picks the pool size.
    #[cfg(feature = "parallel")]
    {
        let threads = if cli.parallel { 0 } else { 1 };
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }

    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
