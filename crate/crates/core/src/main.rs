use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pclab::report::{load_config, load_grid, run_to_dir, sweep_to_dir, ExperimentConfig, ExperimentKind};
use pclab::LabError;

#[derive(Parser)]
#[command(name = "pclab", version, about = "Spectral laboratory for parabolic comparison claims and Galerkin Navier-Stokes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report and CSV files.
    Run {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads for the independent parts of a run.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a config template over a parameter grid.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Validate a config and echo it with defaults filled in.
    Validate { config: PathBuf },
    /// List the experiment kinds.
    ListExperiments,
}

fn fail(e: &LabError) -> ExitCode {
    eprintln!("error: {e}");
    if let LabError::Validation(errs) = e {
        for msg in errs {
            eprintln!("  - {msg}");
        }
    }
    ExitCode::from(e.exit_code() as u8)
}

fn configure(path: &PathBuf, output_dir: &Option<PathBuf>) -> Result<(ExperimentConfig, PathBuf), LabError> {
    let mut config = load_config(path)?;
    if let Some(dir) = output_dir {
        config.output_dir = dir.display().to_string();
    }
    let dir = PathBuf::from(&config.output_dir);
    Ok((config, dir))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output_dir, workers } => {
            let (config, dir) = match configure(&config, &output_dir) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            if let Some(n) = workers {
                // Only fails if a global pool already exists.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
            }
            match run_to_dir(&config, &dir) {
                Ok(report) => {
                    println!("{} {} digest {}", report.id, report.verdict, report.digest);
                    for c in &report.checks {
                        let tag = if c.asserted { if c.holds { "ok" } else { "VIOLATED" } } else { "reported" };
                        println!("  {:<40} {:>24.16e}  [{tag}]", c.name, c.value);
                    }
                    if let Some(e) = &report.error {
                        println!("  error: {e}");
                    }
                    println!("  wrote {}", dir.display());
                    ExitCode::from(report.exit_code as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Sweep { config, grid, output_dir, workers } => {
            let (config, dir) = match configure(&config, &output_dir) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let grid = match load_grid(&grid) {
                Ok(g) => g,
                Err(e) => return fail(&e),
            };
            match sweep_to_dir(&config, &grid, workers, &dir) {
                Ok(result) => {
                    for (p, r) in result.points.iter().zip(&result.reports) {
                        let values: Vec<String> = p.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
                        println!("{} {}", values.join(" "), r.verdict);
                    }
                    println!("wrote {}", dir.join("sweep.csv").display());
                    ExitCode::from(result.exit_code as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(c) => {
                println!("{}", c.to_pretty_json());
                println!("digest {}", c.digest());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<16} {}", k.as_str(), k.description());
            }
            ExitCode::SUCCESS
        }
    }
}
