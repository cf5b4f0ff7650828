//! Flat `key=value` experiment configuration files.
//!
//! One assignment per line, `#` starts a comment, lists are comma-separated.
//! Unknown keys are rejected; missing keys keep the defaults of
//! [`ExperimentConfig::default`].

use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, Method};

/// Keys accepted in configuration files and `--set` overrides.
pub const KEYS: &[&str] = &[
    "n_tx",
    "n_rx",
    "n_paths",
    "snr_db",
    "snr_reference",
    "channel_gain_db",
    "signal_kind",
    "pilot_sizes",
    "test_len",
    "episodes",
    "tune_episodes",
    "impulse_fraction",
    "impulse_max_amplitude",
    "methods",
    "master_seed",
    "rv_known",
    "kernel",
    "kernel_bw_scale",
    "kernel_bandwidth",
    "kernel_degree",
    "kernel_offset",
    "kernel_smoothness",
    "solver_max_iters",
    "solver_tol",
    "solver_step_init",
];

fn invalid(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::param(key, format!("invalid value '{value}': {why}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| invalid(key, value, e))
}

/// Assign one field from its textual value.
pub fn set_key(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    let v = value.trim();
    match key {
        "n_tx" => cfg.n_tx = num(key, v)?,
        "n_rx" => cfg.n_rx = num(key, v)?,
        "n_paths" => cfg.n_paths = num(key, v)?,
        "snr_db" => cfg.snr_db = num(key, v)?,
        "snr_reference" => cfg.snr_reference = v.parse()?,
        "channel_gain_db" => cfg.channel_gain_db = num(key, v)?,
        "signal_kind" => cfg.signal_kind = v.parse()?,
        "pilot_sizes" => {
            cfg.pilot_sizes = v
                .split(',')
                .map(|p| num::<usize>(key, p.trim()))
                .collect::<Result<_>>()?
        }
        "test_len" => cfg.test_len = num(key, v)?,
        "episodes" => cfg.episodes = num(key, v)?,
        "tune_episodes" => cfg.tune_episodes = num(key, v)?,
        "impulse_fraction" => cfg.impulse_fraction = num(key, v)?,
        "impulse_max_amplitude" => cfg.impulse_max_amplitude = num(key, v)?,
        "methods" => {
            cfg.methods = v
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(Method::parse)
                .collect::<Result<_>>()?
        }
        "master_seed" => cfg.master_seed = num(key, v)?,
        "rv_known" => cfg.rv_known = num(key, v)?,
        "kernel" => cfg.kernel = v.parse()?,
        "kernel_bw_scale" => cfg.kernel_bw_scale = num(key, v)?,
        "kernel_bandwidth" => {
            cfg.kernel_bandwidth = if v == "median" { None } else { Some(num(key, v)?) }
        }
        "kernel_degree" => cfg.kernel_degree = num(key, v)?,
        "kernel_offset" => cfg.kernel_offset = num(key, v)?,
        "kernel_smoothness" => cfg.kernel_smoothness = num(key, v)?,
        "solver_max_iters" => cfg.solver.max_iters = num(key, v)?,
        "solver_tol" => cfg.solver.tol = num(key, v)?,
        "solver_step_init" => cfg.solver.step_init = num(key, v)?,
        _ => return Err(Error::param(key, "unknown configuration key")),
    }
    Ok(())
}

fn split_assignment(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    Some((k.trim(), v.trim()))
}

/// Parse configuration text on top of the defaults, then validate.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_assignment(line).ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected key=value, found '{line}'"),
        })?;
        if seen.iter().any(|s| s == k) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("duplicate key '{k}'"),
            });
        }
        seen.push(k.to_string());
        set_key(&mut cfg, k, v).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Apply a `KEY=VALUE` override and revalidate.
pub fn apply_override(cfg: &mut ExperimentConfig, assignment: &str) -> Result<()> {
    let (k, v) = split_assignment(assignment)
        .ok_or_else(|| Error::param("--set", format!("expected KEY=VALUE, found '{assignment}'")))?;
    set_key(cfg, k, v)?;
    cfg.validate()
}

/// Render a configuration in the file format; parsing the output gives back `cfg`.
pub fn to_config_text(cfg: &ExperimentConfig) -> String {
    let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let methods = cfg.methods.iter().map(Method::spec_string).collect::<Vec<_>>().join(",");
    let bw = cfg
        .kernel_bandwidth
        .map(|b| b.to_string())
        .unwrap_or_else(|| "median".into());
    let lines = [
        ("n_tx", cfg.n_tx.to_string()),
        ("n_rx", cfg.n_rx.to_string()),
        ("n_paths", cfg.n_paths.to_string()),
        ("snr_db", cfg.snr_db.to_string()),
        ("snr_reference", cfg.snr_reference.to_string()),
        ("channel_gain_db", cfg.channel_gain_db.to_string()),
        ("signal_kind", cfg.signal_kind.to_string()),
        ("pilot_sizes", list(&cfg.pilot_sizes)),
        ("test_len", cfg.test_len.to_string()),
        ("episodes", cfg.episodes.to_string()),
        ("tune_episodes", cfg.tune_episodes.to_string()),
        ("impulse_fraction", cfg.impulse_fraction.to_string()),
        ("impulse_max_amplitude", cfg.impulse_max_amplitude.to_string()),
        ("methods", methods),
        ("master_seed", cfg.master_seed.to_string()),
        ("rv_known", cfg.rv_known.to_string()),
        ("kernel", cfg.kernel.to_string()),
        ("kernel_bw_scale", cfg.kernel_bw_scale.to_string()),
        ("kernel_bandwidth", bw),
        ("kernel_degree", cfg.kernel_degree.to_string()),
        ("kernel_offset", cfg.kernel_offset.to_string()),
        ("kernel_smoothness", cfg.kernel_smoothness.to_string()),
        ("solver_max_iters", cfg.solver.max_iters.to_string()),
        ("solver_tol", cfg.solver.tol.to_string()),
        ("solver_step_init", cfg.solver.step_init.to_string()),
    ];
    lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}
