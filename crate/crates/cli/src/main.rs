//! Command line front end. `run` executes a scenario described by a JSON
//! config and writes its artifacts; `list` prints the scenario catalogue;
//! `feasibility` computes effective rates straight from flags.
//!
//! Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence.

mod config;
mod error;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmjc_core::model::RamanParams;

use crate::config::Frequency;
use crate::error::{validation, CliError};

#[derive(Parser)]
#[command(
    name = "cmjc",
    version,
    about = "Collective-mode cavity QED simulator",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a JSON config and write its artifacts.
    Run {
        /// Path to the scenario config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's out_dir and CMJC_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for grid scenarios (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the available scenarios.
    List,
    /// Effective coupling, decay rates, swap time, and budget from physical
    /// parameters. Frequencies accept plain numbers (rad/s) or "2pi*<value>".
    Feasibility {
        /// Atom-cavity coupling of one sample atom.
        #[arg(long)]
        g: Frequency,
        /// Classical Raman drive amplitude.
        #[arg(long)]
        alpha: Frequency,
        /// One-photon detuning of the Raman pair.
        #[arg(long = "delta-big")]
        delta_big: Frequency,
        /// Two-photon (Raman) detuning.
        #[arg(long = "delta-small")]
        delta_small: Frequency,
        /// Atoms in the sample.
        #[arg(long = "n-atoms")]
        n_atoms: u32,
        /// Atomic linewidth of the lossy intermediate level.
        #[arg(long)]
        gamma: Frequency,
        /// Cavity linewidth.
        #[arg(long)]
        kappa: Frequency,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn real_main() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, threads } => {
            let text = std::fs::read_to_string(&config).map_err(|e| {
                validation(format!("cannot read config {}: {e}", config.display()))
            })?;
            let cfg = config::parse_config(&text).map_err(validation)?;
            if let Some(k) = threads {
                if k == 0 {
                    return Err(validation("--threads must be >= 1"));
                }
                rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global()
                    .map_err(|e| validation(format!("cannot size the thread pool: {e}")))?;
            }
            let out_dir = out
                .or_else(|| cfg.out_dir.clone())
                .or_else(|| std::env::var_os("CMJC_OUT").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("cmjc-out"));
            let run = scenarios::run(&cfg)?;
            let files = output::write_outputs(&out_dir, &run)?;
            println!("wrote {} file(s) to {}", files.len(), out_dir.display());
            Ok(())
        }
        Command::List => {
            print!("{}", scenarios::list_text());
            Ok(())
        }
        Command::Feasibility {
            g,
            alpha,
            delta_big,
            delta_small,
            n_atoms,
            gamma,
            kappa,
        } => {
            let raman = RamanParams {
                cavity_g: g.0,
                classical_rabi: alpha.0,
                one_photon_detuning: delta_big.0,
                raman_detuning: delta_small.0,
                atoms: n_atoms as usize,
                atomic_linewidth: gamma.0,
                cavity_linewidth: kappa.0,
            };
            raman.validate()?;
            let summary = scenarios::feasibility_summary(&raman)?;
            let text = serde_json::to_string_pretty(&summary)
                .expect("feasibility summary serializes");
            println!("{text}");
            Ok(())
        }
    }
}
