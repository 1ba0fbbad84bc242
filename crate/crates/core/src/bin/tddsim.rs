use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tddsim::runner::{cmd_run, cmd_sweep, RunnerError, SweepAxis, SweepSpec, EXIT_OK};

#[derive(Parser)]
#[command(name = "tddsim", version, about = "Dynamic-TDD factory-hall 5G system simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seed and write report.json, latency.csv and frames.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Dotted `key=value` config override, repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Sweep one parameter over seeds 1..=N per point.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// p0_dbm, offered_load, scheduler, selection_mode or seeds
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<String>,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            overrides,
        } => cmd_run(&config, seed, &out, &overrides).map(|line| println!("{line}")),
        Command::Sweep {
            config,
            axis,
            values,
            seeds,
            out,
            overrides,
            workers,
        } => axis
            .parse::<SweepAxis>()
            .and_then(|axis| SweepSpec::new(axis, values, seeds))
            .and_then(|mut spec| {
                spec.overrides = overrides;
                cmd_sweep(&config, &spec, &out, workers)
            })
            .map(|points| {
                for p in points {
                    if let Ok(r) = p.report {
                        println!("{}: {}", p.value, r.summary_line());
                    }
                }
            }),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("tddsim: {e}");
            report_partial(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn report_partial(e: &RunnerError) {
    if let RunnerError::PartialSweep { .. } = e {
        eprintln!("tddsim: see error.txt in the failed point directories");
    }
}
