//! Command-line surface.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use phonon_pulse_core::fockspace::find_g_n;

use crate::config::resolve;
use crate::error::{CliError, CliResult};
use crate::experiments::execute;
use crate::output::{output_dir, write_run, MANIFEST_NAME};
use crate::reproduce::{reproduce, Figure};

#[derive(Debug, Parser)]
#[command(name = "phonon-pulse-sim", version, about = "Pulsed-drive cavity optomechanics simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment from a config file and/or preset.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Named parameter set, e.g. paper-fig3.
        #[arg(long)]
        preset: Option<String>,
        /// Override a field: `--set params.kappa=0.001`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run a figure preset and evaluate its pass/fail checks.
    Reproduce {
        #[arg(value_parser = parse_figure)]
        figure: Figure,
        /// Shorter runs and coarser grids.
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print the coupling `g_N` that makes two-phonon transitions resonant.
    FindGn {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        omega_m: f64,
    },
}

fn parse_figure(s: &str) -> Result<Figure, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

pub fn run_cli(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, preset, overrides, output_dir: explicit } => {
            let cfg = resolve(config.as_deref(), preset.as_deref(), &overrides)?;
            let start = Instant::now();
            let out = execute(&cfg)?;
            let dir = output_dir(explicit.as_deref(), cfg.output_dir.as_deref(), &cfg.name);
            let resolved = serde_json::to_value(&cfg).map_err(|e| CliError::config(e.to_string()))?;
            write_run(&dir, &out, resolved, start.elapsed().as_secs_f64())?;
            println!("{}", dir.join(MANIFEST_NAME).display());
            Ok(())
        }
        Command::Reproduce { figure, fast, output_dir } => {
            let (report, dir) = reproduce(figure, fast, output_dir.as_deref())?;
            for c in &report.checks {
                println!("{:<28} {:<5} {}", c.name, format!("{:?}", c.status).to_uppercase(), c.detail);
            }
            println!("{}", dir.display());
            let failed = report.failed();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::CheckFailed(failed))
            }
        }
        Command::FindGn { n, omega_m } => {
            if n == 0 || n % 2 == 1 {
                return Err(CliError::config(format!("--n must be a positive even integer, got {n}")));
            }
            let g = find_g_n(n, omega_m)?;
            println!("{g:.12}");
            Ok(())
        }
    }
}
