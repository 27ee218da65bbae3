//! Structured configuration files.
//!
//! A config file is TOML. Every section is optional: values given in a file
//! are merged over the shipped defaults (`config/default.toml`), key by key.
//! Tables carrying a `kind` tag (noise models, distributions, tasks) are
//! replaced wholesale rather than merged. Unknown keys are rejected.
//!
//! The `[env]` section is merged over the default environment of the
//! selected `[task]` rather than over a fixed default.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::control::ControllerGains;
use crate::dynamics::{QuadParams, SimConfig};
use crate::env::{EnvConfig, TaskSpec};
use crate::sensing::ImuNoise;

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub quad: QuadParams,
    pub sim: SimConfig,
    pub gains: ControllerGains,
    pub imu: ImuNoise,
    #[serde(default)]
    pub task: TaskSpec,
    #[serde(default)]
    pub env: EnvConfig,
}

fn defaults() -> &'static Config {
    static DEFAULTS: OnceLock<Config> = OnceLock::new();
    DEFAULTS.get_or_init(|| Config::from_toml_str("").expect("shipped default config must parse"))
}

impl Default for Config {
    fn default() -> Self {
        defaults().clone()
    }
}

/// Recursively overlay `over` onto `base`.
pub(crate) fn merge_tables(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !o.contains_key("kind") => {
                merge_tables(b, o)
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

pub(crate) fn parse_table(text: &str) -> Result<toml::Table, ConfigError> {
    text.parse::<toml::Table>()
        .map_err(|e| ConfigError::Parse(e.to_string()))
}

pub(crate) fn read_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let mut base = parse_table(DEFAULT_CONFIG)?;
        let mut user = parse_table(text)?;
        let user_env = user.remove("env");
        merge_tables(&mut base, user);
        let task: TaskSpec = match base.get("task") {
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| ConfigError::Parse(format!("task: {e}")))?,
            None => TaskSpec::default(),
        };
        let mut env = toml::Table::try_from(task.default_env())
            .map_err(|e| ConfigError::Parse(e.to_string()))?;
        match user_env {
            Some(toml::Value::Table(t)) => merge_tables(&mut env, t),
            Some(_) => return Err(ConfigError::Parse("`env` must be a table".into())),
            None => {}
        }
        base.insert("env".into(), toml::Value::Table(env));
        let cfg: Config = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_toml_str(&read_file(path.as_ref())?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.quad.validate()?;
        self.sim.validate()?;
        self.gains.validate()?;
        self.imu.validate().map_err(|e| ConfigError::Invalid {
            field: "imu".into(),
            reason: e.to_string(),
        })?;
        self.task.validate()?;
        self.env.validate()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
