//! Run configuration: `key = value` files merged with command-line flags.
//!
//! File keys are the flag names without the leading dashes. Underscores
//! are accepted in place of hyphens (`t_birth` and `t-birth` are the same
//! key). Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "LAMOT_CONFIG";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("{path}:{line}: unknown key `{key}`")]
    UnknownKey {
        path: String,
        line: usize,
        key: String,
    },
    #[error("{path}:{line}: key `{key}` given twice")]
    Duplicate {
        path: String,
        line: usize,
        key: String,
    },
    #[error("missing required setting `{0}`")]
    Missing(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    Invalid {
        key: String,
        value: String,
        reason: String,
    },
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
}

pub fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-")
}

/// Where a setting came from; used in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    File,
    Flag,
}

/// Validated string settings of one subcommand.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, (String, Origin)>,
}

impl RunConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a config file body; every key must be in `allowed`.
    pub fn parse_file(text: &str, path: &str, allowed: &[&str]) -> Result<Self, ConfigError> {
        let mut cfg = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                path: path.into(),
                line,
            })?;
            let key = normalize_key(k);
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    path: path.into(),
                    line,
                });
            }
            if !allowed.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey {
                    path: path.into(),
                    line,
                    key,
                });
            }
            if cfg.values.contains_key(&key) {
                return Err(ConfigError::Duplicate {
                    path: path.into(),
                    line,
                    key,
                });
            }
            cfg.values.insert(key, (v.trim().to_string(), Origin::File));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: shown.clone(),
            reason: e.to_string(),
        })?;
        Self::parse_file(&text, &shown, allowed)
    }

    /// Config path from the flag, else from [`CONFIG_ENV`].
    pub fn default_path(flag: Option<&str>) -> Option<PathBuf> {
        flag.map(PathBuf::from).or_else(|| {
            std::env::var_os(CONFIG_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
    }

    /// Flags win over file values.
    pub fn set_flag(&mut self, key: &str, value: impl Into<String>) {
        self.values
            .insert(normalize_key(key), (value.into(), Origin::Flag));
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    pub fn origin(&self, key: &str) -> Option<Origin> {
        self.values.get(key).map(|(_, o)| *o)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::Missing(key.into()))
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::Invalid {
                    key: key.into(),
                    value: v.into(),
                    reason: e.to_string(),
                })
            })
            .transpose()
    }

    pub fn get_or<T>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list; empty items are rejected.
    pub fn list<T>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse::<T>().map_err(|e| ConfigError::Invalid {
                    key: key.into(),
                    value: v.into(),
                    reason: if item.is_empty() {
                        "empty list item".into()
                    } else {
                        format!("`{item}`: {e}")
                    },
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    pub fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            key: key.into(),
            value: self.raw(key).unwrap_or_default().into(),
            reason: reason.into(),
        }
    }
}
