//! key=value configuration files: '#' comments, strict key checking
//! (unknown keys are errors, so typos never silently fall back to defaults).

use lvlab_core::error::{Error, Result};
use std::collections::HashMap;
use std::path::Path;

/// Every key any subcommand understands.
const KNOWN_KEYS: [&str; 21] = [
    "alarm", "ceiling", "chi", "cutoff", "delta", "eps", "kind", "m", "moduli", "moments", "n",
    "q", "seed", "sigma", "sigma_grid", "source", "t", "t_end", "t_start", "t_step", "threads",
];

#[derive(Debug, Default)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("config {}: {e}", path.display()))
        })?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!(
                    "config {} line {}: expected key=value, got {raw:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::InvalidInput(format!(
                    "config {} line {}: unknown key {key:?}",
                    path.display(),
                    lineno + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidInput(format!("config key {key}: cannot parse value {v:?}"))
            }),
        }
    }
}
