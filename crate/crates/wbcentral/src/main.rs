//! Command-line experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wbcentral::harness::{
    self, parse_config, run_convergence, run_experiment, ExperimentConfig, HarnessError,
    ALL_EXPERIMENTS,
};

const CONFIG_KEYS: &str = "\
Config file format: one `key = value` per line, `#` starts a comment.

  experiment   isothermal | perturbed_isothermal_x | perturbed_isothermal_y |
               moving_x | moving_y | shock_tube           (required)
  scheme       fully_discrete | semi_discrete             (default fully_discrete)
  nx, ny       interior cell counts
  x_min, x_max, y_min, y_max   domain bounds              (default [0,1]^2)
  t_end        final time
  cfl          CFL number in (0, 1)                       (default 0.45)
  theta        MC limiter parameter in [1, 2]             (default 1.5)
  eps          speed floor of the fully-discrete scheme   (default 1e-8)
  eta          perturbation amplitude                     (default 1e-2)
  gamma        ratio of specific heats                    (default 1.4)
  rho0, p0     equilibrium reference density and pressure
  phi_x, phi_y constant potential gradient
  g            moving-equilibrium gravity constant        (default 1)
  equilibrium  none | isothermal | moving |
               perturbed_isothermal_x | perturbed_isothermal_y
  bc           outflow | reflecting | periodic (all sides)
  bc_x, bc_y   per-axis override
  integrator   forward_euler | ssp_rk2 (semi-discrete)    (default ssp_rk2)
  projection_reconstruction   true | false                (default true)
  output_dir   snapshot directory                         (default out)
  snapshot_times  comma-separated times (t_end always written)
";

#[derive(Parser)]
#[command(
    name = "wbcentral",
    about = "Well-balanced central finite-volume solver for 2D balance laws",
    after_long_help = CONFIG_KEYS
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Override the snapshot directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the snapshot times (comma-separated).
        #[arg(long)]
        snapshot_times: Option<String>,
    },
    /// Grid-convergence study: run square grids against the finest level.
    Convergence {
        config: PathBuf,
        /// Comma-separated levels; the largest is the reference.
        #[arg(long)]
        levels: String,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// List the built-in experiments.
    List,
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run {
            config,
            output_dir,
            snapshot_times,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            if let Some(times) = snapshot_times {
                cfg.snapshot_times = times
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| HarnessError::Config("bad --snapshot-times".into()))?;
            }
            let report = run_experiment(&cfg)?;
            println!(
                "{}: {} steps to t = {:.6} in {:.2} s",
                cfg.kind.name(),
                report.steps,
                report.final_t,
                report.wall_seconds
            );
            println!(
                "max |deviation| per component: [{:.3e}, {:.3e}, {:.3e}, {:.3e}]",
                report.max_deviation[0],
                report.max_deviation[1],
                report.max_deviation[2],
                report.max_deviation[3]
            );
            for (t, path) in &report.snapshots {
                println!("snapshot t = {:.6}: {}", t, path.display());
            }
            Ok(())
        }
        Command::Convergence {
            config,
            levels,
            output_dir,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let levels: Vec<usize> = levels
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| HarnessError::Config("bad --levels".into()))?;
            let table = run_convergence(&cfg, &levels)?;
            print!("{}", table.render());
            std::fs::create_dir_all(&cfg.output_dir)?;
            let csv_path = cfg.output_dir.join(format!("{}_convergence.csv", cfg.kind.name()));
            std::fs::write(&csv_path, table.to_csv())?;
            println!("table written to {}", csv_path.display());
            Ok(())
        }
        Command::List => {
            println!("built-in experiments:");
            for kind in ALL_EXPERIMENTS {
                let d = harness::ExperimentConfig::defaults(kind);
                println!(
                    "  {:24} {}x{} grid, t_end = {}, equilibrium = {:?}",
                    kind.name(),
                    d.nx,
                    d.ny,
                    d.t_end,
                    d.equilibrium
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(HarnessError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
