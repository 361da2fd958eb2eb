use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coopreg_cli::{
    cmd_check, cmd_run, cmd_sweep, cmd_synth, manifest_path, sweep_table, CliError, Overrides,
    SweepGrid, EXIT_FAILED, EXIT_OK,
};

#[derive(Parser)]
#[command(
    name = "coopreg",
    version,
    about = "Cooperative output regulation: check, synthesize, simulate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Replace the designed observer gain μ.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Negate every K_1 (destabilization test).
    #[arg(long)]
    flip_k1: bool,
    /// Reserved; runs are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            mu: self.mu,
            step: self.step,
            horizon: self.horizon,
            threshold: self.threshold,
            flip_k1: self.flip_k1,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solvability report; exit 1 if a mandatory check fails.
    Check {
        #[command(flatten)]
        common: Common,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Synthesize gains and write them with a manifest.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gains: PathBuf,
    },
    /// Simulate; exit 0 iff the tracking threshold is met in the final window.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gains: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// One run per grid point.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["mu_scale_grid", "step_grid"])]
        mu_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', conflicts_with = "step_grid")]
        mu_scale_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        step_grid: Option<Vec<f64>>,
    },
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Check { common, json } => {
            let report = cmd_check(&common.scenario, &common.overrides())?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("serializable")
                );
            } else {
                print!("{}", report.to_text());
            }
            Ok(if report.ok() { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Synth { common, gains } => {
            let m = cmd_synth(&common.scenario, &gains, &common.overrides())?;
            for line in &m.provenance {
                println!("{line}");
            }
            println!("gains written to {}", gains.display());
            println!("manifest written to {}", manifest_path(&gains).display());
            Ok(EXIT_OK)
        }
        Command::Run { common, gains, csv } => {
            let out = cmd_run(
                &common.scenario,
                gains.as_deref(),
                csv.as_deref(),
                &common.overrides(),
            )?;
            print!("{}", out.metrics.to_text());
            Ok(if out.metrics.converged {
                EXIT_OK
            } else {
                EXIT_FAILED
            })
        }
        Command::Sweep {
            common,
            mu_grid,
            mu_scale_grid,
            step_grid,
        } => {
            let grid = match (mu_grid, mu_scale_grid, step_grid) {
                (Some(v), _, _) => SweepGrid::Mu(v),
                (_, Some(v), _) => SweepGrid::MuScale(v),
                (_, _, Some(v)) => SweepGrid::Step(v),
                _ => {
                    return Err(CliError::Io(
                        "sweep needs --mu-grid, --mu-scale-grid or --step-grid".into(),
                    ))
                }
            };
            let rows = cmd_sweep(&common.scenario, &grid, &common.overrides())?;
            print!("{}", sweep_table(&rows));
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COOPREG_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
