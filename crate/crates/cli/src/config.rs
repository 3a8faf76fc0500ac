//! Flat key=value configuration file and flag/config/default resolution.
//!
//! Flags always win over config values; every resolved setting is echoed in
//! the run summary so the effective configuration is auditable.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

pub const CONFIG_ENV_VAR: &str = "CULTURANK_CONFIG";

const KNOWN_KEYS: [&str; 19] = [
    "records",
    "neighborhoods",
    "census",
    "taxonomy",
    "lexgraph",
    "edges",
    "titles",
    "stoplist",
    "decisions",
    "labels",
    "out_dir",
    "workers",
    "depth",
    "cooccur_threshold",
    "agreement_threshold",
    "local_mode",
    "local_days",
    "fence_multiplier",
    "monthly_denominator",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Loads a config file if a path is given (flag first, then the
    /// CULTURANK_CONFIG environment variable). Unknown keys are rejected.
    pub fn load(flag: Option<&Path>) -> Result<Config> {
        let path = match flag {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from),
        };
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let content = std::fs::read_to_string(&path)
            .with_context(|| format!("failed to read config file {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (i, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected key=value", path.display(), i + 1);
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                bail!("{}:{}: unknown config key {:?}", path.display(), i + 1, key);
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Tracks the effective settings of a run for the summary echo.
#[derive(Debug, Default)]
pub struct Effective {
    values: BTreeMap<String, serde_json::Value>,
}

impl Effective {
    pub fn record(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.values
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }
}

/// Resolves one setting: flag, then config key, then default.
pub struct Resolver<'c> {
    pub config: &'c Config,
    pub effective: Effective,
}

impl<'c> Resolver<'c> {
    pub fn new(config: &'c Config) -> Self {
        Resolver {
            config,
            effective: Effective::default(),
        }
    }

    pub fn required_path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        let value = flag
            .or_else(|| self.config.get(key).map(PathBuf::from))
            .ok_or_else(|| {
                anyhow!(
                    "missing required input {key:?}: pass --{} or set {key}= in the config",
                    key.replace('_', "-")
                )
            })?;
        // Inputs are validated up front, before any stage writes output.
        if !value.exists() {
            return Err(anyhow::Error::new(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("input {key} not found: {}", value.display()),
            )));
        }
        self.effective.record(key, value.display().to_string());
        Ok(value)
    }

    pub fn optional_path(&mut self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        let value = flag.or_else(|| self.config.get(key).map(PathBuf::from));
        if let Some(v) = &value {
            self.effective.record(key, v.display().to_string());
        }
        value
    }

    pub fn u64_value(&mut self, key: &str, flag: Option<u64>, default: u64) -> Result<u64> {
        let value = match flag {
            Some(v) => v,
            None => match self.config.get(key) {
                Some(raw) => raw
                    .parse()
                    .map_err(|_| anyhow!("config key {key}={raw:?} is not an integer"))?,
                None => default,
            },
        };
        self.effective.record(key, value);
        Ok(value)
    }

    pub fn u32_value(&mut self, key: &str, flag: Option<u32>, default: u32) -> Result<u32> {
        Ok(self.u64_value(key, flag.map(u64::from), u64::from(default))? as u32)
    }

    pub fn f64_value(&mut self, key: &str, flag: Option<f64>, default: f64) -> Result<f64> {
        let value = match flag {
            Some(v) => v,
            None => match self.config.get(key) {
                Some(raw) => raw
                    .parse()
                    .map_err(|_| anyhow!("config key {key}={raw:?} is not a number"))?,
                None => default,
            },
        };
        if value < 0.0 {
            bail!("{key} must be non-negative, got {value}");
        }
        self.effective.record(key, value);
        Ok(value)
    }

    pub fn string_value(&mut self, key: &str, flag: Option<String>, default: &str) -> String {
        let value = flag
            .or_else(|| self.config.get(key).map(String::from))
            .unwrap_or_else(|| default.to_string());
        self.effective.record(key, value.clone());
        value
    }
}
