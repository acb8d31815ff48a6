//! Line-based `key = value` run configuration with `#` comments, strict
//! unknown-key rejection (with a nearest-key suggestion) and per-line error
//! reporting.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::mesh::Bounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Branch,
    Whyburn,
    Verify,
    Eigen,
    Classify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Branch => "branch",
            Command::Whyburn => "whyburn",
            Command::Verify => "verify",
            Command::Eigen => "eigen",
            Command::Classify => "classify",
        }
    }
}

/// Fully validated run description: spec fields, command parameters and
/// output paths. Runs are seed-free and deterministic by construction.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub command: Command,
    pub bounds: Bounds,
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub a: String,
    pub b: String,
    pub eps: f64,
    pub eps_schedule: Option<Vec<f64>>,
    pub gamma_decay: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_window: Option<(f64, f64)>,
    pub ds: f64,
    pub max_points: usize,
    pub newton_tol: f64,
    pub out_csv: Option<PathBuf>,
    pub out_json: Option<PathBuf>,
    pub out_svg: Option<PathBuf>,
    pub dump_solutions: bool,
}

const KNOWN_KEYS: &[&str] = &[
    "command",
    "dim",
    "bounds",
    "n",
    "p",
    "q",
    "a",
    "b",
    "eps",
    "eps_schedule",
    "gamma_decay",
    "lambda",
    "lambda_window",
    "ds",
    "max_points",
    "newton_tol",
    "out_csv",
    "out_json",
    "out_svg",
    "dump_solutions",
];

fn suggestion(key: &str) -> Option<&'static str> {
    KNOWN_KEYS
        .iter()
        .map(|k| (strsim::jaro_winkler(key, k), *k))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .filter(|(score, _)| *score >= 0.7)
        .map(|(_, k)| k)
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|_| {
        Error::Config(format!("line {line}: {key} expects a number, got `{value}`"))
    })
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize> {
    value.trim().parse::<usize>().map_err(|_| {
        Error::Config(format!(
            "line {line}: {key} expects a positive integer, got `{value}`"
        ))
    })
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_f64(line, key, v))
        .collect()
}

/// Parses configuration text into a validated `RunPlan`.
pub fn parse_config(text: &str) -> Result<RunPlan> {
    let mut command = None;
    let mut dim = 1usize;
    let mut bounds_raw: Option<(usize, Vec<f64>)> = None;
    let mut n = 64usize;
    let mut p = None;
    let mut q = None;
    let mut a = None;
    let mut b = None;
    let mut eps = 0.0;
    let mut eps_schedule = None;
    let mut gamma_decay = None;
    let mut lambda = None;
    let mut lambda_window = None;
    let mut ds = 0.01;
    let mut max_points = 500usize;
    let mut newton_tol = 1e-10;
    let mut out_csv = None;
    let mut out_json = None;
    let mut out_svg = None;
    let mut dump_solutions = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {line}: expected `key = value`, got `{content}`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::Config(format!("line {line}: empty value for `{key}`")));
        }
        match key {
            "command" => {
                command = Some(match value {
                    "solve" => Command::Solve,
                    "branch" => Command::Branch,
                    "whyburn" => Command::Whyburn,
                    "verify" => Command::Verify,
                    "eigen" => Command::Eigen,
                    "classify" => Command::Classify,
                    other => {
                        return Err(Error::Config(format!(
                            "line {line}: unknown command `{other}` (expected solve, branch, \
                             whyburn, verify, eigen or classify)"
                        )))
                    }
                });
            }
            "dim" => {
                dim = parse_usize(line, key, value)?;
                if dim != 1 && dim != 2 {
                    return Err(Error::Config(format!("line {line}: dim must be 1 or 2")));
                }
            }
            "bounds" => bounds_raw = Some((line, parse_list(line, key, value)?)),
            "n" => n = parse_usize(line, key, value)?,
            "p" => p = Some(parse_f64(line, key, value)?),
            "q" => q = Some(parse_f64(line, key, value)?),
            "a" => a = Some(value.to_string()),
            "b" => b = Some(value.to_string()),
            "eps" => eps = parse_f64(line, key, value)?,
            "eps_schedule" => eps_schedule = Some(parse_list(line, key, value)?),
            "gamma_decay" => gamma_decay = Some(parse_f64(line, key, value)?),
            "lambda" => lambda = Some(parse_f64(line, key, value)?),
            "lambda_window" => {
                let vals = parse_list(line, key, value)?;
                if vals.len() != 2 || !(vals[0] < vals[1]) {
                    return Err(Error::Config(format!(
                        "line {line}: lambda_window expects `lo, hi` with lo < hi"
                    )));
                }
                lambda_window = Some((vals[0], vals[1]));
            }
            "ds" => ds = parse_f64(line, key, value)?,
            "max_points" => max_points = parse_usize(line, key, value)?,
            "newton_tol" => newton_tol = parse_f64(line, key, value)?,
            "out_csv" => out_csv = Some(PathBuf::from(value)),
            "out_json" => out_json = Some(PathBuf::from(value)),
            "out_svg" => out_svg = Some(PathBuf::from(value)),
            "dump_solutions" => {
                dump_solutions = match value {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(Error::Config(format!(
                            "line {line}: dump_solutions expects true or false"
                        )))
                    }
                };
            }
            other => {
                let hint = suggestion(other)
                    .map(|s| format!("; did you mean `{s}`?"))
                    .unwrap_or_default();
                return Err(Error::Config(format!(
                    "line {line}: unknown key `{other}`{hint}"
                )));
            }
        }
    }

    let command = command.ok_or_else(|| Error::Config("missing required key `command`".into()))?;
    let p = p.ok_or_else(|| Error::Config("missing required key `p`".into()))?;
    let q = q.ok_or_else(|| Error::Config("missing required key `q`".into()))?;
    let a = a.ok_or_else(|| Error::Config("missing required key `a`".into()))?;
    let b = b.ok_or_else(|| Error::Config("missing required key `b`".into()))?;
    if !(p > 2.0) {
        return Err(Error::Config(format!("p = {p}: the convex power requires p > 2")));
    }
    if !(q > 1.0 && q < 2.0) {
        return Err(Error::Config(format!(
            "q = {q}: the concave power requires 1 < q < 2"
        )));
    }
    if !(eps >= 0.0 && eps <= 1.0) {
        return Err(Error::Config(format!("eps = {eps}: must lie in [0, 1]")));
    }
    if !(ds > 0.0) {
        return Err(Error::Config(format!("ds = {ds}: must be positive")));
    }
    if !(newton_tol > 0.0) {
        return Err(Error::Config(format!("newton_tol = {newton_tol}: must be positive")));
    }
    if n < 3 {
        return Err(Error::Config(format!("n = {n}: need at least 3 nodes per side")));
    }
    if max_points < 2 {
        return Err(Error::Config(format!("max_points = {max_points}: need at least 2")));
    }
    let bounds = match bounds_raw {
        None => {
            if dim == 1 {
                Bounds::interval(0.0, 1.0)
            } else {
                Bounds::rectangle((0.0, 1.0), (0.0, 1.0))
            }
        }
        Some((line, vals)) => match (dim, vals.len()) {
            (1, 2) if vals[0] < vals[1] => Bounds::interval(vals[0], vals[1]),
            (2, 4) if vals[0] < vals[1] && vals[2] < vals[3] => {
                Bounds::rectangle((vals[0], vals[1]), (vals[2], vals[3]))
            }
            _ => {
                return Err(Error::Config(format!(
                    "line {line}: bounds expects {} increasing values for dim = {dim}",
                    2 * dim
                )))
            }
        },
    };
    match command {
        Command::Solve | Command::Eigen => {
            if lambda.is_none() {
                return Err(Error::Config(format!(
                    "command {} requires `lambda`",
                    command.name()
                )));
            }
        }
        Command::Branch | Command::Whyburn => {
            if lambda_window.is_none() {
                return Err(Error::Config(format!(
                    "command {} requires `lambda_window`",
                    command.name()
                )));
            }
            if command == Command::Whyburn {
                let sched = eps_schedule.as_deref().unwrap_or(&[]);
                if sched.len() < 2 {
                    return Err(Error::Config(
                        "command whyburn requires `eps_schedule` with at least 2 entries".into(),
                    ));
                }
            }
        }
        Command::Verify | Command::Classify => {}
    }
    Ok(RunPlan {
        command,
        bounds,
        n,
        p,
        q,
        a,
        b,
        eps,
        eps_schedule,
        gamma_decay,
        lambda,
        lambda_window,
        ds,
        max_points,
        newton_tol,
        out_csv,
        out_json,
        out_svg,
        dump_solutions,
    })
}
