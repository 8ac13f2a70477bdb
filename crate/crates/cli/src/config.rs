//! Flat `key = value` run configuration.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use gauged_schrodinger::radial::MIN_NODES;
use gauged_schrodinger::{FlowOptions, ProblemParams};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Verify,
    Ground,
    Nodal,
    Continuation,
    Doubling,
    Asymptotics,
    Multiplicity,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Verify,
        Command::Ground,
        Command::Nodal,
        Command::Continuation,
        Command::Doubling,
        Command::Asymptotics,
        Command::Multiplicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Ground => "ground",
            Command::Nodal => "nodal",
            Command::Continuation => "continuation",
            Command::Doubling => "doubling",
            Command::Asymptotics => "asymptotics",
            Command::Multiplicity => "multiplicity",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
                format!("expected one of {}, got `{s}`", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub params: ProblemParams,
    pub r_max: f64,
    pub n_nodes: usize,
    pub opts: FlowOptions,
    pub lambda_list: Vec<f64>,
    pub k_list: Vec<usize>,
    pub lambda_small: f64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Verify,
            params: ProblemParams::default(),
            r_max: 40.0,
            n_nodes: 4097,
            opts: FlowOptions::default(),
            lambda_list: vec![10.0, 100.0, 1000.0],
            k_list: vec![2, 3],
            lambda_small: 0.1,
            output_dir: PathBuf::from("gsolve-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: `{key}` already set on line {first}")]
    Duplicate { line: usize, key: String, first: usize },

    #[error("line {line}: {key}: {message}")]
    Value { line: usize, key: String, message: String },

    #[error("{key}: {message}")]
    Default { key: String, message: String },

    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
}

/// Every accepted key, in serialization order.
pub const KEYS: [&str; 26] = [
    "command",
    "omega",
    "lambda",
    "p",
    "gamma",
    "beta",
    "alpha",
    "q",
    "r_max",
    "n_nodes",
    "max_iters",
    "grad_tol",
    "eps_cone",
    "step_init",
    "step_shrink",
    "armijo_c",
    "rng_seed",
    "polish_iters",
    "polish_from",
    "lattice",
    "radii",
    "ground_starts",
    "lambda_list",
    "k_list",
    "lambda_small",
    "output_dir",
];

fn parse_scalar<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("cannot parse `{value}`: {e}"))
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    let inner = value.trim();
    let inner = inner.strip_prefix('[').map_or(inner, |s| s.strip_suffix(']').unwrap_or(s));
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(|item| parse_scalar(item.trim())).collect()
}

fn format_list<T: fmt::Display>(values: &[T]) -> String {
    let items: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    items.join(", ")
}

fn assign(config: &mut RunConfig, key: &str, value: &str) -> Result<(), String> {
    let p = &mut config.params;
    let o = &mut config.opts;
    match key {
        "command" => config.command = value.parse()?,
        "omega" => p.omega = parse_scalar(value)?,
        "lambda" => p.lambda = parse_scalar(value)?,
        "p" => p.p = parse_scalar(value)?,
        "gamma" => p.gamma = parse_scalar(value)?,
        "beta" => p.beta = parse_scalar(value)?,
        "alpha" => p.alpha = parse_scalar(value)?,
        "q" => p.q = parse_scalar(value)?,
        "r_max" => config.r_max = parse_scalar(value)?,
        "n_nodes" => config.n_nodes = parse_scalar(value)?,
        "max_iters" => o.max_iters = parse_scalar(value)?,
        "grad_tol" => o.grad_tol = parse_scalar(value)?,
        "eps_cone" => o.eps_cone = parse_scalar(value)?,
        "step_init" => o.step_init = parse_scalar(value)?,
        "step_shrink" => o.step_shrink = parse_scalar(value)?,
        "armijo_c" => o.armijo_c = parse_scalar(value)?,
        "rng_seed" => o.rng_seed = parse_scalar(value)?,
        "polish_iters" => o.polish_iters = parse_scalar(value)?,
        "polish_from" => o.polish_from = parse_scalar(value)?,
        "lattice" => o.lattice = parse_scalar(value)?,
        "radii" => o.radii = parse_list(value)?,
        "ground_starts" => o.ground_starts = parse_scalar(value)?,
        "lambda_list" => config.lambda_list = parse_list(value)?,
        "k_list" => config.k_list = parse_list(value)?,
        "lambda_small" => config.lambda_small = parse_scalar(value)?,
        "output_dir" => {
            if value.is_empty() {
                return Err("path must not be empty".into());
            }
            config.output_dir = PathBuf::from(value);
        }
        _ => unreachable!("key list and assignments disagree on `{key}`"),
    }
    Ok(())
}

/// Range checks as `(key, message)`, in key order.
fn range_errors(config: &RunConfig) -> Vec<(&'static str, String)> {
    let mut errors = Vec::new();
    if let Err(e) = config.params.validate() {
        let message = e.to_string();
        let key = KEYS
            .iter()
            .find(|k| message.split_whitespace().next() == Some(**k))
            .copied()
            .unwrap_or("omega");
        errors.push((key, message));
    }
    if !(config.r_max > 0.0 && config.r_max.is_finite()) {
        errors.push(("r_max", format!("r_max must be positive and finite, got {}", config.r_max)));
    }
    if config.n_nodes < MIN_NODES {
        errors.push(("n_nodes", format!("n_nodes must be at least {MIN_NODES}, got {}", config.n_nodes)));
    }
    let o = &config.opts;
    let opt_checks: [(&'static str, bool, String); 8] = [
        ("max_iters", o.max_iters >= 1, format!("max_iters must be at least 1, got {}", o.max_iters)),
        ("grad_tol", o.grad_tol > 0.0 && o.grad_tol.is_finite(), format!("grad_tol must be positive, got {}", o.grad_tol)),
        ("eps_cone", o.eps_cone > 0.0 && o.eps_cone < 1.0, format!("eps_cone must lie in (0,1), got {}", o.eps_cone)),
        ("step_init", o.step_init > 0.0 && o.step_init <= 1.0, format!("step_init must lie in (0,1], got {}", o.step_init)),
        ("step_shrink", o.step_shrink > 0.0 && o.step_shrink < 1.0, format!("step_shrink must lie in (0,1), got {}", o.step_shrink)),
        ("armijo_c", o.armijo_c > 0.0 && o.armijo_c < 1.0, format!("armijo_c must lie in (0,1), got {}", o.armijo_c)),
        ("polish_from", o.polish_from > 0.0 && o.polish_from.is_finite(), format!("polish_from must be positive, got {}", o.polish_from)),
        ("lattice", o.lattice >= 2, format!("lattice must be at least 2, got {}", o.lattice)),
    ];
    for (key, ok, message) in opt_checks {
        if !ok {
            errors.push((key, message));
        }
    }
    if o.radii.is_empty() || o.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        errors.push(("radii", "radii must be a nonempty list of positive numbers".into()));
    }
    if o.ground_starts < 1 {
        errors.push(("ground_starts", "ground_starts must be at least 1".into()));
    }
    if config.lambda_list.is_empty() || config.lambda_list.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        errors.push(("lambda_list", "lambda_list must be a nonempty list of positive numbers".into()));
    } else if config.lambda_list.windows(2).any(|w| !(w[1] > w[0])) {
        errors.push(("lambda_list", "lambda_list must be strictly ascending".into()));
    } else if config.command == Command::Asymptotics && config.lambda_list.len() < 3 {
        errors.push(("lambda_list", "asymptotics needs at least 3 values of lambda".into()));
    }
    if config.k_list.is_empty() || config.k_list.iter().any(|k| !(2..=5).contains(k)) {
        errors.push(("k_list", "k_list must be a nonempty list of integers in [2,5]".into()));
    }
    if !(config.lambda_small > 0.0 && config.lambda_small <= 1.0) {
        errors.push(("lambda_small", format!("lambda_small must lie in (0,1], got {}", config.lambda_small)));
    }
    errors
}

/// Parses and validates a configuration; missing keys keep their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    let mut seen: HashMap<&'static str, usize> = HashMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: content.to_string() });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax { line, text: content.to_string() });
        }
        let Some(known) = KEYS.iter().find(|k| **k == key).copied() else {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        };
        if let Some(&first) = seen.get(known) {
            return Err(ConfigError::Duplicate { line, key: key.to_string(), first });
        }
        seen.insert(known, line);
        assign(&mut config, known, value).map_err(|message| ConfigError::Value {
            line,
            key: key.to_string(),
            message,
        })?;
    }
    if let Some((key, message)) = range_errors(&config).into_iter().next() {
        return Err(match seen.get(key) {
            Some(&line) => ConfigError::Value { line, key: key.to_string(), message },
            None => ConfigError::Default { key: key.to_string(), message },
        });
    }
    Ok(config)
}

impl RunConfig {
    /// Every key in `KEYS` order; `parse_config` reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let o = &self.opts;
        let values: [String; 26] = [
            self.command.to_string(),
            p.omega.to_string(),
            p.lambda.to_string(),
            p.p.to_string(),
            p.gamma.to_string(),
            p.beta.to_string(),
            p.alpha.to_string(),
            p.q.to_string(),
            self.r_max.to_string(),
            self.n_nodes.to_string(),
            o.max_iters.to_string(),
            format!("{:e}", o.grad_tol),
            format!("{:e}", o.eps_cone),
            o.step_init.to_string(),
            o.step_shrink.to_string(),
            format!("{:e}", o.armijo_c),
            o.rng_seed.to_string(),
            o.polish_iters.to_string(),
            format!("{:e}", o.polish_from),
            o.lattice.to_string(),
            format_list(&o.radii),
            o.ground_starts.to_string(),
            format_list(&self.lambda_list),
            format_list(&self.k_list),
            self.lambda_small.to_string(),
            self.output_dir.display().to_string(),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
