use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use jrc_cli::{alloc_io, export_af, run_scenario, RunOptions, ScenarioConfig, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "jrcsim", version, about = "mmWave joint radar-communications simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo sweep of a scenario.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Export the ambiguity surface and its zero cuts.
    Af {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Solve a power allocation problem file.
    Alloc {
        problem: PathBuf,
        #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Check a scenario file and print it with defaults filled in.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

impl From<Flags> for RunOptions {
    fn from(f: Flags) -> Self {
        RunOptions { seed: f.seed, trials: f.trials, workers: f.workers, out_dir: f.out_dir }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, flags } => {
            let cfg = ScenarioConfig::load(&config)?;
            let report = run_scenario(&cfg, &flags.into())?;
            for p in &report.points {
                println!(
                    "mux {:>5}%  snr {:>5} dB  rmse range {:.3e} m  ber {:.3e}  failures {}",
                    p.mux_percent, p.snr_db, p.refined.range_m, p.ber, p.failures
                );
            }
            println!("config {}  {:.2} s", &report.config_hash[..12], report.wall_clock_s);
        }
        Command::Af { config, flags } => {
            let cfg = ScenarioConfig::load(&config)?;
            let out = export_af(&cfg, &flags.into())?;
            println!("wrote {}", out.display());
        }
        Command::Alloc { problem, out_dir } => {
            let (path, result) = alloc_io::export_alloc(&problem, &out_dir)?;
            if !result.feasible {
                eprintln!("infeasible: rate floors exceed the budget by {}", result.deficit);
            }
            if let Some(pd) = result.detection_probability {
                println!("p_D = {pd}");
            }
            println!("wrote {}", path.display());
        }
        Command::Validate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            print!("{}", cfg.to_toml());
        }
    }
    Ok(())
}
