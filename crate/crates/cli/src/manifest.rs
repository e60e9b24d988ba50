use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance attached to every emitted document.
///
/// Wall time is only present when explicitly requested so that identical
/// runs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub config: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            config: Value::Object(Default::default()),
            seed: None,
            tool_version: TOOL_VERSION.to_string(),
            wall_seconds: None,
        }
    }

    pub fn input(mut self, role: &str, path: &Path) -> Self {
        self.inputs.insert(role.to_string(), path.display().to_string());
        self
    }

    pub fn config(mut self, config: Value) -> Self {
        self.config = config;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}
