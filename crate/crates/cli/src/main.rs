use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use contact_cli::{run, CliError, ExperimentConfig, Task, EXIT_ERROR};

/// Runs one contact-dynamics experiment and writes its report.
#[derive(Debug, Parser)]
#[command(name = "contactlab", version, about)]
struct Args {
    /// JSON experiment config.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; overrides `outputs.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Task to run; overrides `task`.
    #[arg(long, value_name = "NAME")]
    task: Option<String>,
    /// Overrides the acceptance tolerance.
    #[arg(long, value_name = "FLOAT")]
    tol: Option<f64>,
    /// Suppress progress and summary output.
    #[arg(long)]
    quiet: bool,
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(t) = &args.task {
        cfg.task = t.parse::<Task>()?;
    }
    if let Some(tol) = args.tol {
        cfg.tolerances.accept = tol;
    }
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.outputs.dir));
    if !args.quiet {
        eprintln!("running task `{}` (config {})", cfg.task, &cfg.hash()[..12]);
    }
    let artifacts = run(&cfg)?;
    artifacts.write(&dir, cfg.outputs.plotdata)?;
    if !args.quiet {
        for f in &artifacts.failures {
            eprintln!("FAIL: {f}");
        }
        eprintln!(
            "{}: report written to {}",
            if artifacts.passed() {
                "pass"
            } else {
                "assertion failure"
            },
            dir.join("report.json").display()
        );
    }
    Ok(artifacts.exit_code())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
