use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use bevloc::evalkit::hex_digest;

use crate::error::{CliError, CliResult};

/// Provenance record written before a command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    /// Input path to sha256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            config_hash,
            inputs: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = fs::read(path)
            .map_err(bevloc::Error::from)
            .map_err(CliError::input(format!("reading {}", path.display())))?;
        self.inputs.insert(path.display().to_string(), hex_digest(&bytes));
        Ok(())
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut body = serde_json::to_vec_pretty(self)
            .map_err(bevloc::Error::from)
            .map_err(CliError::runtime("serializing manifest"))?;
        body.push(b'\n');
        fs::write(path, body)
            .map_err(bevloc::Error::from)
            .map_err(CliError::runtime(format!("writing {}", path.display())))
    }
}
