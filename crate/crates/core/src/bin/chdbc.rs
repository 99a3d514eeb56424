//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 validation error, 3 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use chdbc::config::{preset, preset_names, preset_summary, RunConfig};
use chdbc::error::{Error, Result};
use chdbc::oracle::convergence_rate;
use chdbc::run::{run, study_convergence};

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chdbc", version, about = "Cahn-Hilliard with dynamic boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario (see list-scenarios).
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<RunConfig> {
        match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::load(p),
            (_, Some(name)) => preset(name),
            _ => Err(Error::InvalidConfig("--config or --preset is required".into())),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write diagnostics, snapshots and a manifest.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory; overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Refuse to run unless energy decay is guaranteed.
        #[arg(long)]
        strict_stability: bool,
    },
    /// Temporal convergence study against a fine reference step.
    StudyConvergence {
        #[command(flatten)]
        source: Source,
        /// Coarse time steps, strictly decreasing, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        taus: Vec<f64>,
        #[arg(long)]
        tau_star: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in scenarios.
    ListScenarios,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            source,
            out,
            strict_stability,
        } => {
            let mut cfg = source.load()?;
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            cfg.run.strict_stability |= strict_stability;
            let a = run(&cfg)?;
            for w in &a.warnings {
                eprintln!("warning: {w}");
            }
            let (first, last) = (a.records.first().unwrap(), a.records.last().unwrap());
            println!(
                "{} steps, E {:.10e} -> {:.10e}, outputs in {}",
                a.final_state.step,
                first.energy.e_total,
                last.energy.e_total,
                a.dir.display()
            );
            Ok(())
        }
        Command::StudyConvergence {
            source,
            taus,
            tau_star,
            out,
        } => {
            let mut cfg = source.load()?;
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            let table = study_convergence(&cfg, &taus, tau_star)?;
            print!("{}", table.to_csv());
            if let Ok((sp, ss)) = convergence_rate(&table) {
                eprintln!("slopes: phi {sp:.4}, psi {ss:.4}");
            }
            Ok(())
        }
        Command::ListScenarios => {
            for name in preset_names() {
                let cfg = preset(&name)?;
                let p = cfg.params;
                println!("{name}");
                println!("    {}", preset_summary(&name).unwrap_or_default());
                println!(
                    "    grid {}x{} extent {:?}, eps={} delta={} kappa={} s1={} s2={} tau={} steps={}",
                    cfg.grid.nx,
                    cfg.grid.ny,
                    cfg.grid.extent,
                    p.epsilon,
                    p.delta,
                    p.kappa,
                    p.s1,
                    p.s2,
                    p.tau,
                    cfg.step_count()?
                );
                println!("    bulk {:?}, surface {:?}", p.bulk_potential, p.surf_potential);
            }
            Ok(())
        }
    }
}
