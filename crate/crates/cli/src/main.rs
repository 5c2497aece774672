use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use proxlab::harness::{run_experiment, ExperimentConfig, Task, EXIT_ERROR};
use proxlab::ppm::Method;

#[derive(Parser)]
#[command(name = "proxlab", version, about = "Proximal point method experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the exact proximal point method.
    RunPpm(Common),
    /// Run the inexact proximal point method.
    RunIppm(Common),
    /// Run gradient descent.
    RunGd(Common),
    /// Estimate regularity constants.
    Estimate(Common),
    /// Estimate regularity constants and audit their relations.
    Audit(Common),
    /// Write the synthetic data set described by a config.
    GenData(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON); repeat to run several.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    /// Output directory; one subdirectory per config when several are given.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed of every config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of configs run in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn out_dir(common: &Common, cfg: &ExperimentConfig, path: &Path) -> PathBuf {
    let base = common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if common.config.len() > 1 {
        base.join(path.file_stem().unwrap_or_default())
    } else {
        base
    }
}

fn run_one(common: &Common, task: Task, path: &Path) -> i32 {
    let result = ExperimentConfig::load(path).and_then(|mut cfg| {
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        let out = out_dir(common, &cfg, path);
        run_experiment(&cfg, task, &out)
    });
    match result {
        Ok(outcome) => {
            let files: Vec<String> = outcome
                .artifacts
                .iter()
                .map(|p| p.display().to_string())
                .collect();
            let verdict = if outcome.passed {
                "ok"
            } else {
                "bound check failed"
            };
            println!(
                "{}: {verdict} (exit {}) {}",
                path.display(),
                outcome.exit_code,
                files.join(" ")
            );
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("{}: error: {e}", path.display());
            EXIT_ERROR
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, common) = match &cli.command {
        Command::RunPpm(c) => (Task::Solve(Method::Ppm), c),
        Command::RunIppm(c) => (Task::Solve(Method::Ippm), c),
        Command::RunGd(c) => (Task::Solve(Method::Gd), c),
        Command::Estimate(c) => (Task::Estimate, c),
        Command::Audit(c) => (Task::Audit, c),
        Command::GenData(c) => (Task::GenData, c),
    };
    let next = AtomicUsize::new(0);
    let worst = Mutex::new(0);
    let workers = common.jobs.clamp(1, common.config.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = common.config.get(i) else {
                    break;
                };
                let code = run_one(common, task, path);
                let mut w = worst.lock().unwrap();
                *w = (*w).max(code);
            });
        }
    });
    let code = worst.into_inner().unwrap();
    ExitCode::from(code as u8)
}
