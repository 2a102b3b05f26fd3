use std::path::PathBuf;
use std::process::ExitCode;

use bclab::experiment::{run, Command, ExperimentConfig, KEYS};
use bclab::Error;
use clap::{Parser, Subcommand};

/// Wave-equation boundary control experiments.
///
/// Exit status: 0 on success, 1 when `verify` finds a failing check or a run
/// fails, 2 on a configuration error.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Flat `key = value` config file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory (overrides `out_dir` from the config).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Generator seed (overrides `seed` from the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Travel-time field and filled region at `T`.
    Eikonal,
    /// Eigenvalues and the first few modes.
    Eigen,
    /// Final state of the configured control, with the leapfrog cross-check.
    Forward,
    /// Boundary trace of the dual solution for the target.
    Dual,
    /// Observability test for the target.
    Observe,
    /// Mollifier multipliers.
    Beta,
    /// Control synthesis and the residual-vs-alpha curve.
    Control,
    /// Synthesis in the H¹ norm with the smooth control class.
    H1star,
    /// Runs every invariant suite and writes report.json.
    Verify,
    /// Lists the config keys.
    Keys,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Eikonal => Command::Eikonal,
        Cmd::Eigen => Command::Eigen,
        Cmd::Forward => Command::Forward,
        Cmd::Dual => Command::Dual,
        Cmd::Observe => Command::Observe,
        Cmd::Beta => Command::Beta,
        Cmd::Control => Command::Control,
        Cmd::H1star => Command::H1Star,
        Cmd::Verify => Command::Verify,
        Cmd::Keys => {
            for (k, doc) in KEYS {
                println!("{k:<18} {doc}");
            }
            return ExitCode::SUCCESS;
        }
    };
    let config = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p),
        None => Ok(ExperimentConfig::default_1d()),
    };
    let mut config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("bclab: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    if let Some(dir) = cli.out_dir {
        config = config.with_out_dir(dir);
    }
    match run(command, &config) {
        Ok(report) => {
            if let Some(v) = &report.verify {
                for item in &v.items {
                    let rel = if item.upper { "<=" } else { ">=" };
                    println!(
                        "{} {}.{}: {:e} {rel} {:e}",
                        if item.pass { "PASS" } else { "FAIL" },
                        item.suite,
                        item.name,
                        item.measured,
                        item.bound
                    );
                }
            }
            println!("{command}: wrote {} files to {}", report.artifacts.len(), report.out_dir.display());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("bclab: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("bclab: {e}");
            ExitCode::from(1)
        }
    }
}
