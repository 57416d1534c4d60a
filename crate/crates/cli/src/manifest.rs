use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Record written next to every command's outputs; enough to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    /// Directory relative paths in `args` resolve against.
    pub working_dir: PathBuf,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    /// Unix seconds.
    pub timestamp: u64,
    /// Resolved scheme, model and configuration values.
    pub settings: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, args: &[String]) -> Self {
        RunManifest {
            tool: env!("CARGO_BIN_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args: args.to_vec(),
            working_dir: std::env::current_dir().unwrap_or_default(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            settings: BTreeMap::new(),
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.settings.insert(key.into(), value.to_string());
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing run manifest")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut m = RunManifest::new("simulate", &["simulate".into(), "--seed".into(), "3".into()]);
        m.seed = Some(3);
        m.setting("n", 10);
        m.inputs.push("a.csv".into());
        let back: RunManifest = toml::from_str(&m.to_toml().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
