// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

/// Keys a config file may set. `_` and `-` are interchangeable.
pub const KNOWN_KEYS: &[&str] = &[
    "corpus",
    "format",
    "index",
    "scorer",
    "pairs",
    "queries",
    "qrels",
    "run",
    "output",
    "pseudo-queries",
    "ratio",
    "unsupervised",
    "order",
    "smoothing",
    "overlap-threshold",
    "min-substring-len",
    "max-substring-len",
    "beam-size",
    "beam-sizes",
    "views",
    "query-length-bias",
    "candidate-factor",
    "top-k",
    "transform",
    "length-exponent",
    "view-weights",
    "metrics",
    "seed",
    "workers",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    path: PathBuf,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| CliError::Config(format!("{}:{}: {msg}", path.display(), i + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(bad(&format!("unknown key {key:?}")));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(bad(&format!("duplicate key {key:?}")));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            values,
        })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse().map_err(|e| {
                    CliError::Config(format!("{}: bad value for {key}: {e}", self.path.display()))
                })
            })
            .transpose()
    }

    /// Flag value if given, else the config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    /// Like [`pick`](Self::pick) with no default.
    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn require_path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
        self.pick_opt(flag, key)?
            .ok_or_else(|| CliError::Usage(format!("--{key} is required (flag or config file)")))
    }
}
