use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gsolve::{parse_config, run, ConfigError, RunConfig, Status, EXIT_CONFIG};

/// Ground-state and sign-changing radial solutions of the gauged Schrodinger equation.
#[derive(Debug, Parser)]
#[command(name = "gsolve", version)]
struct Args {
    /// `key = value` configuration file; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Seed, overriding `rng_seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for independent starts and experiment units.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(args: &Args) -> Result<RunConfig, ConfigError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| ConfigError::Read {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(dir) = &args.output {
        config.output_dir = dir.clone();
    }
    if let Some(seed) = args.seed {
        config.opts.rng_seed = seed;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let config = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("config error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("config error: cannot start {n} threads: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match run(&config) {
        Ok(outcome) => {
            for failure in &outcome.failures {
                eprintln!("{failure}");
            }
            println!("{} {}: {}", config.command, match outcome.status {
                Status::Success => "succeeded",
                Status::ExperimentFailure => "failed",
            }, outcome.report_path.display());
            for path in &outcome.profile_paths {
                println!("profile: {}", path.display());
            }
            ExitCode::from(outcome.status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::ExperimentFailure.exit_code())
        }
    }
}
