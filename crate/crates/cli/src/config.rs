//! TOML configuration with one section per command.
//!
//! ```toml
//! seed = 7
//! out_dir = "runs/mmsbm"
//! workers = 1
//!
//! [validate]
//! preset = "mmsbm-3"
//! method = "ase-knn"
//! k = 5
//! ```
//!
//! Keys inside a section use the long flag names with `_` for `-`. A flag
//! given on the command line replaces the value from the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Default, Deserialize)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(flatten)]
    pub sections: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn section(&self, name: &str) -> Option<&Value> {
        self.sections.get(name)
    }
}

/// Overlay the non-null fields of `cli` onto the config `section` and
/// deserialize the result. Keys that `T` does not know are rejected.
pub fn resolve<T>(cli: &T, section: Option<&Value>, name: &str) -> Result<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let known = match serde_json::to_value(T::default())? {
        Value::Object(m) => m,
        _ => bail!("internal: [{name}] arguments do not serialize to a table"),
    };
    let mut merged = match section {
        None => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => bail!("config section [{name}] must be a table"),
    };
    if let Some(bad) = merged.keys().find(|k| !known.contains_key(*k)) {
        bail!("unknown key `{bad}` in config section [{name}]");
    }
    if let Value::Object(flags) = serde_json::to_value(cli)? {
        for (k, v) in flags {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).with_context(|| format!("invalid settings for [{name}]"))
}
