use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gqhuber::chart::write_chart;
use gqhuber::config::{ExperimentConfig, Plan};
use gqhuber::records::{read_records, Metric};
use gqhuber::runner::{run_plan, write_outputs};
use gqhuber::Error;

const EXIT_INVALID: u8 = 1;
const EXIT_FAILED: u8 = 2;

/// Loss-comparison experiments for distributional RL.
#[derive(Parser)]
#[command(name = "gqhuber", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every arm and seed of an experiment and write its outputs.
    Run {
        config: PathBuf,
        /// Output directory (overrides `out` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Maximum parallel runs (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Number of seeds (overrides `seeds` in the config).
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
    /// Plot one metric of a records file.
    Chart {
        records: PathBuf,
        #[arg(long)]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_plan(path: &Path, seeds: Option<usize>) -> Result<Plan, Error> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(n) = seeds {
        config.seeds = n;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    config.resolve(base)
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_validation() {
        EXIT_INVALID
    } else {
        EXIT_FAILED
    })
}

fn run(
    config: &Path,
    out: Option<PathBuf>,
    workers: Option<usize>,
    seeds: Option<usize>,
) -> ExitCode {
    if workers == Some(0) {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(EXIT_INVALID);
    }
    let plan = match load_plan(config, seeds) {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    let dir = out
        .or_else(|| plan.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    eprintln!(
        "running {} arm(s) x {} seed(s), {} epochs each",
        plan.arms.len(),
        plan.seeds,
        plan.train.epochs
    );
    let output = match run_plan(&plan, workers) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    for (arm, msg) in &output.failures {
        eprintln!("arm {arm} failed: {msg}");
    }
    match write_outputs(&dir, &plan, &output) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => return fail(&e),
    }
    if output.all_failed() {
        eprintln!("error: every arm failed");
        return ExitCode::from(EXIT_FAILED);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seeds,
        } => run(&config, out, workers, seeds),
        Command::Validate { config } => match load_plan(&config, None) {
            Ok(plan) => {
                println!(
                    "ok: {} arm(s), {} seed(s), {} runs",
                    plan.arms.len(),
                    plan.seeds,
                    plan.runs().len()
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Chart {
            records,
            metric,
            out,
        } => {
            let result = read_records(&records).and_then(|rows| {
                let title = metric.label().to_string();
                write_chart(&out, &rows, metric, &title)
            });
            match result {
                Ok(()) => {
                    println!("{}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_INVALID)
                }
            }
        }
    }
}
