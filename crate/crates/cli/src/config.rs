//! Layered `key=value` settings: defaults, then a config file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::ValueEnum;

use nestner::crf::{Optimizer, TrainConfig};

use crate::io::TextOptions;

pub const DEFAULT_EMBEDDING_DIM: usize = 25;
pub const DEFAULT_SEGMENTER: &str = "presegmented";

/// Keys that may appear without a default.
const OPTIONAL_KEYS: [&str; 4] = ["clusters", "embeddings", "embedding_dim", "template"];

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

impl From<bool> for OnOff {
    fn from(b: bool) -> Self {
        if b {
            OnOff::On
        } else {
            OnOff::Off
        }
    }
}

impl fmt::Display for OnOff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OnOff::On => "on",
            OnOff::Off => "off",
        })
    }
}

impl FromStr for OnOff {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "on" | "true" | "1" => Ok(OnOff::On),
            "off" | "false" | "0" => Ok(OnOff::Off),
            _ => Err(format!("expected on or off, got `{s}`")),
        }
    }
}

fn defaults() -> BTreeMap<String, String> {
    let t = TrainConfig::default();
    [
        ("strategy", "joint".to_string()),
        ("l2_sigma", t.l2_sigma.to_string()),
        ("max_iterations", t.max_iterations.to_string()),
        ("convergence_tol", t.convergence_tol.to_string()),
        ("optimizer", t.optimizer.to_string()),
        ("learning_rate", t.learning_rate.to_string()),
        ("lbfgs_history", t.lbfgs_history.to_string()),
        ("min_feature_count", t.min_feature_count.to_string()),
        ("sent_seg", OnOff::On.to_string()),
        ("segmenter", DEFAULT_SEGMENTER.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Defaults, overridden by `config` (if any), overridden by the flags that were given.
    pub fn resolve(config: Option<&Path>, flags: Vec<(&str, Option<String>)>) -> Result<Self> {
        let mut values = defaults();
        let known = |k: &str| values.contains_key(k) || OPTIONAL_KEYS.contains(&k);
        let mut from_file = Vec::new();
        if let Some(path) = config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (n, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    UsageError(format!("{}:{}: expected key=value", path.display(), n + 1))
                })?;
                let k = k.trim();
                if !known(k) {
                    return Err(UsageError(format!(
                        "{}:{}: unknown key `{k}`",
                        path.display(),
                        n + 1
                    ))
                    .into());
                }
                from_file.push((k.to_string(), v.trim().to_string()));
            }
        }
        values.extend(from_file);
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        Ok(Settings { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| UsageError(format!("bad value for {key}: `{v}` ({e})")).into())
            })
            .transpose()
    }

    fn require<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        Ok(self.parse(key)?.expect("key has a default"))
    }

    pub fn with(&self, key: &str, value: String) -> Self {
        let mut s = self.clone();
        s.values.insert(key.to_string(), value);
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn echo(&self) -> Vec<String> {
        self.iter().map(|(k, v)| format!("{k}={v}")).collect()
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let config = TrainConfig {
            l2_sigma: self.require("l2_sigma")?,
            max_iterations: self.require("max_iterations")?,
            convergence_tol: self.require("convergence_tol")?,
            optimizer: self.require::<Optimizer>("optimizer")?,
            learning_rate: self.require("learning_rate")?,
            lbfgs_history: self.require("lbfgs_history")?,
            min_feature_count: self.require("min_feature_count")?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn text_options(&self) -> Result<TextOptions> {
        Ok(TextOptions {
            sent_seg: Some(self.require("sent_seg")?),
            segmenter: self.get("segmenter").map(str::to_string),
        })
    }
}
