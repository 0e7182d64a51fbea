//! `prunability <task> --config <path> [--out <dir>] [--seed <n>]`
//!
//! Tasks: train, spectrum, predict, sweep, verify-escape, report, full.
//! Exit codes: 0 success, 1 config error, 2 stage failure, 3 lock conflict.
//! Log verbosity is read from `PRUNABILITY_LOG` (e.g. `info`, `debug`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;
use prunability_core::pipeline::{run_task, RunConfig, Task, ESCAPE_FILE};
use prunability_core::Error;

#[derive(Parser, Debug)]
#[command(name = "prunability", version, about = "Predict and measure the maximum pruning ratio of a small network")]
struct Cli {
    /// train | spectrum | predict | sweep | verify-escape | report | full
    task: String,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `[run] out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

const CONFIG_ERROR: u8 = 1;
const STAGE_FAILURE: u8 = 2;
const LOCK_CONFLICT: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } => CONFIG_ERROR,
        Error::Locked(_) => LOCK_CONFLICT,
        _ => STAGE_FAILURE,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let task: Task = cli.task.parse()?;
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.task = task;
    let outcome = run_task(&cfg, task)?;
    if let Some(report) = &outcome.report {
        print!("{}", report.to_text());
    } else if outcome.escape.is_some() {
        println!("{}", outcome.out_dir.join(ESCAPE_FILE).display());
    } else {
        println!("{task}: artifacts in {}", outcome.out_dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PRUNABILITY_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
