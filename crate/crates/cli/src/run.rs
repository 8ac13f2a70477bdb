//! Command dispatch and output files.

use std::fs;
use std::path::{Path, PathBuf};

use gauged_schrodinger::experiments::{
    asymptotics_experiment, continuation, default_schedule, doubling_experiment, multiplicity_sweep,
};
use gauged_schrodinger::{make_grid, solve_ground, solve_nodal, RadialGrid, Solution};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::config::{Command, RunConfig};
use crate::profile::profile_csv;
use crate::verify::verify;

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("cannot serialize the report: {0}")]
    Serialize(#[from] serde_json::Error),

    #[error("cannot build the grid: {0}")]
    Grid(gauged_schrodinger::Error),

    #[error("cannot tabulate profile {name}: {source}")]
    Profile { name: String, source: gauged_schrodinger::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    ExperimentFailure,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::ExperimentFailure => 1,
        }
    }
}

#[derive(Debug, Serialize)]
struct Envelope<'a> {
    command: Command,
    status: Status,
    failures: &'a [String],
    profiles: Vec<&'a str>,
    config: &'a RunConfig,
    report: Value,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: Status,
    /// Human-readable reasons behind an experiment failure.
    pub failures: Vec<String>,
    pub report_path: PathBuf,
    pub profile_paths: Vec<PathBuf>,
}

struct Produced {
    report: Value,
    profiles: Vec<(String, Solution)>,
    failures: Vec<String>,
}

fn produced(report: impl Serialize, profiles: Vec<(String, Solution)>, failures: Vec<String>) -> Result<Produced, RunError> {
    Ok(Produced { report: serde_json::to_value(report)?, profiles, failures })
}

fn failed(message: String) -> Result<Produced, RunError> {
    Ok(Produced { report: Value::Null, profiles: Vec::new(), failures: vec![message] })
}

fn single(name: &str, outcome: gauged_schrodinger::Result<Solution>) -> Result<Produced, RunError> {
    match outcome {
        Ok(s) => produced(&s, vec![(name.to_string(), s.clone())], Vec::new()),
        Err(e) => failed(format!("{name}: {e}")),
    }
}

fn execute(config: &RunConfig, grid: &RadialGrid) -> Result<Produced, RunError> {
    let params = &config.params;
    let opts = &config.opts;
    match config.command {
        Command::Verify => {
            let rep = verify(params, config.r_max, config.n_nodes, opts.eps_cone, opts.rng_seed);
            let failures = rep
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| format!("check {} failed: measured {:e}, threshold {:e} ({})", c.name, c.measured, c.threshold, c.detail))
                .collect();
            produced(&rep, Vec::new(), failures)
        }
        Command::Ground => single("ground", solve_ground(params, grid, opts)),
        Command::Nodal => single("nodal", solve_nodal(params, grid, opts)),
        Command::Continuation => match continuation(params, &default_schedule(), grid, opts) {
            Ok(rep) => {
                let profiles = rep.final_solution.iter().map(|s| ("continuation".to_string(), s.clone())).collect();
                let failures = rep.failure.iter().map(|f| format!("continuation: {f}")).collect();
                produced(&rep, profiles, failures)
            }
            Err(e) => failed(format!("continuation: {e}")),
        },
        Command::Doubling => match doubling_experiment(&config.lambda_list, params, grid, opts) {
            Ok(rep) => {
                let mut profiles = Vec::new();
                let mut failures = Vec::new();
                for row in &rep.rows {
                    if let Some(s) = &row.ground {
                        profiles.push((format!("ground_lambda_{}", row.lambda), s.clone()));
                    }
                    if let Some(s) = &row.nodal {
                        profiles.push((format!("nodal_lambda_{}", row.lambda), s.clone()));
                    }
                    failures.extend(row.errors.iter().map(|e| format!("lambda {}: {e}", row.lambda)));
                }
                produced(&rep, profiles, failures)
            }
            Err(e) => failed(format!("doubling: {e}")),
        },
        Command::Asymptotics => match asymptotics_experiment(&config.lambda_list, params, grid, opts) {
            Ok(rep) => {
                let failures = rep
                    .rows
                    .iter()
                    .filter(|r| r.distance.is_none())
                    .map(|r| format!("lambda {}: {}", r.lambda, r.error.as_deref().unwrap_or("no distance")))
                    .collect();
                produced(&rep, Vec::new(), failures)
            }
            Err(e) => failed(format!("asymptotics: {e}")),
        },
        Command::Multiplicity => {
            match multiplicity_sweep(&config.k_list, config.lambda_small, params, grid, opts) {
                Ok(rep) => {
                    let profiles = rep
                        .distinct
                        .iter()
                        .enumerate()
                        .map(|(i, s)| (format!("solution_{i}_nodes_{}", s.cone.node_count), s.clone()))
                        .collect();
                    let failures = if rep.distinct.is_empty() {
                        vec!["multiplicity: no sign-changing solution found".to_string()]
                    } else {
                        Vec::new()
                    };
                    produced(&rep, profiles, failures)
                }
                Err(e) => failed(format!("multiplicity: {e}")),
            }
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|source| RunError::Write { path: path.to_path_buf(), source })
}

/// Runs the configured command and writes `report.json` plus one CSV per solution
/// into `config.output_dir`.
pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let grid = make_grid(config.r_max, config.n_nodes).map_err(RunError::Grid)?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|source| RunError::Write { path: out.clone(), source })?;
    let result = execute(config, &grid)?;
    let status = if result.failures.is_empty() { Status::Success } else { Status::ExperimentFailure };
    let names: Vec<String> = result.profiles.iter().map(|(n, _)| format!("{n}.csv")).collect();
    let mut profile_paths = Vec::new();
    for ((name, s), file) in result.profiles.iter().zip(&names) {
        let csv = profile_csv(&grid, &s.field).map_err(|source| RunError::Profile { name: name.clone(), source })?;
        let path = out.join(file);
        write(&path, &csv)?;
        profile_paths.push(path);
    }
    let envelope = Envelope {
        command: config.command,
        status,
        failures: &result.failures,
        profiles: names.iter().map(String::as_str).collect(),
        config,
        report: result.report,
    };
    let report_path = out.join(REPORT_FILE);
    let mut json = serde_json::to_string_pretty(&envelope)?;
    json.push('\n');
    write(&report_path, &json)?;
    Ok(RunOutcome { status, failures: result.failures, report_path, profile_paths })
}
