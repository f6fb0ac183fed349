//! Sandbox run configuration: `key = value` lines, `#` comments.
//!
//! Paths are resolved relative to the configuration file so scenario files
//! can ship next to the models they reference. The controller command line
//! may use `$SELF` for the path of the running executable, which is how the
//! bundled demonstration controllers are addressed.

use crate::syntax::ast::VarName;
use num_rational::BigRational;
use num_traits::Signed;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SandboxConfig {
    /// The verified model the monitors came from.
    pub model: PathBuf,
    /// Compiled controller-monitor artifact.
    pub controller_monitor: PathBuf,
    /// Compiled model-monitor artifact.
    pub model_monitor: PathBuf,
    /// Verified fallback program source; must be discrete and deterministic.
    pub fallback: String,
    /// Reality's deviation from the model, as a discrete deterministic
    /// program applied after actuation (e.g. damping on ground contact).
    pub plant_override: Option<String>,
    /// Simulated seconds per control cycle.
    pub period: BigRational,
    /// Integration step for the plant.
    pub step: BigRational,
    pub max_cycles: u32,
    /// Controller command line, whitespace-split; `$SELF` expands later.
    pub controller: Vec<String>,
    /// Variables the controller may propose values for.
    pub controller_writes: Vec<VarName>,
    /// Per-cycle reply deadline.
    pub timeout_ms: u64,
    /// Initial plant state.
    pub init: Vec<(VarName, BigRational)>,
    /// Stop at the first model-monitor violation instead of flagging it.
    pub halt_on_violation: bool,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    NotKeyValue { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: cannot read `{key}`: {reason}")]
    BadValue { line: usize, key: String, reason: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
}

pub fn parse_config_file(path: &Path) -> Result<SandboxConfig, ConfigError> {
    let src = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_source(base, &src)
}

/// Parses configuration text, resolving relative paths against `base`.
pub fn parse_config_source(base: &Path, src: &str) -> Result<SandboxConfig, ConfigError> {
    let mut model = None;
    let mut controller_monitor = None;
    let mut model_monitor = None;
    let mut fallback = None;
    let mut plant_override = None;
    let mut period = None;
    let mut step = None;
    let mut max_cycles = None;
    let mut controller = None;
    let mut controller_writes = None;
    let mut timeout_ms = None;
    let mut init = None;
    let mut halt_on_violation = None;

    for (ix, raw) in src.lines().enumerate() {
        let line = ix + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let (key, value) = text.split_once('=').ok_or(ConfigError::NotKeyValue { line })?;
        let (key, value) = (key.trim(), value.trim());
        // `init = x = 1, v = 0` splits at the first `=`; the value keeps the
        // rest.
        let bad = |reason: String| ConfigError::BadValue {
            line,
            key: key.to_string(),
            reason,
        };
        let rational = |v: &str| {
            BigRational::from_str(v).map_err(|e| bad(e.to_string()))
        };
        macro_rules! put {
            ($slot:ident, $val:expr) => {{
                if $slot.is_some() {
                    return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
                }
                $slot = Some($val);
            }};
        }
        match key {
            "model" => put!(model, base.join(value)),
            "controller_monitor" => put!(controller_monitor, base.join(value)),
            "model_monitor" => put!(model_monitor, base.join(value)),
            "fallback" => put!(fallback, value.to_string()),
            "plant_override" => put!(plant_override, value.to_string()),
            "period" => put!(period, positive_rational(value).map_err(bad)?),
            "step" => put!(step, positive_rational(value).map_err(bad)?),
            "max_cycles" => {
                put!(max_cycles, value.parse::<u32>().map_err(|e| bad(e.to_string()))?)
            }
            "controller" => {
                let argv: Vec<String> = value.split_whitespace().map(String::from).collect();
                if argv.is_empty() {
                    return Err(bad("empty command line".to_string()));
                }
                put!(controller, argv)
            }
            "controller_writes" => {
                let vars: Vec<VarName> = value
                    .split(',')
                    .map(|v| v.trim())
                    .filter(|v| !v.is_empty())
                    .map(VarName::new)
                    .collect();
                put!(controller_writes, vars)
            }
            "timeout_ms" => {
                put!(timeout_ms, value.parse::<u64>().map_err(|e| bad(e.to_string()))?)
            }
            "init" => {
                let mut pairs = Vec::new();
                for item in value.split(',') {
                    let (x, q) = item
                        .split_once('=')
                        .ok_or_else(|| bad(format!("expected `var = value` in `{item}`")))?;
                    pairs.push((VarName::new(x.trim()), rational(q.trim())?));
                }
                put!(init, pairs)
            }
            "halt_on_violation" => {
                let flag = match value {
                    "true" => true,
                    "false" => false,
                    other => return Err(bad(format!("expected true or false, got `{other}`"))),
                };
                put!(halt_on_violation, flag)
            }
            other => {
                return Err(ConfigError::UnknownKey { line, key: other.to_string() });
            }
        }
    }

    Ok(SandboxConfig {
        model: model.ok_or(ConfigError::Missing("model"))?,
        controller_monitor: controller_monitor
            .ok_or(ConfigError::Missing("controller_monitor"))?,
        model_monitor: model_monitor.ok_or(ConfigError::Missing("model_monitor"))?,
        fallback: fallback.ok_or(ConfigError::Missing("fallback"))?,
        plant_override,
        period: period.ok_or(ConfigError::Missing("period"))?,
        step: step.unwrap_or_else(|| BigRational::new(1.into(), 64.into())),
        max_cycles: max_cycles.ok_or(ConfigError::Missing("max_cycles"))?,
        controller: controller.ok_or(ConfigError::Missing("controller"))?,
        controller_writes: controller_writes.ok_or(ConfigError::Missing("controller_writes"))?,
        timeout_ms: timeout_ms.unwrap_or(1000),
        init: init.ok_or(ConfigError::Missing("init"))?,
        halt_on_violation: halt_on_violation.unwrap_or(false),
    })
}

fn positive_rational(v: &str) -> Result<BigRational, String> {
    let q = BigRational::from_str(v).map_err(|e| e.to_string())?;
    if q.is_positive() {
        Ok(q)
    } else {
        Err(format!("`{q}` is not positive"))
    }
}

/// Expands `$SELF` in a controller command line to the given executable.
pub fn expand_self(argv: &[String], self_path: &Path) -> Vec<String> {
    argv.iter()
        .map(|arg| {
            if arg == "$SELF" {
                self_path.display().to_string()
            } else {
                arg.clone()
            }
        })
        .collect()
}
