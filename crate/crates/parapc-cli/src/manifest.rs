//! Run manifest written alongside every output so any result can be
//! reproduced from its inputs, configuration, and seed.

use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub input: Option<String>,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_truncated: Option<bool>,
    pub outputs: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
}

pub struct ManifestBuilder {
    command: String,
    input: Option<String>,
    seed: Option<u64>,
    config: serde_json::Value,
    depth_truncated: Option<bool>,
    outputs: Vec<String>,
    started_at: String,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            input: None,
            seed: None,
            config: serde_json::Value::Null,
            depth_truncated: None,
            outputs: Vec::new(),
            started_at: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.input = Some(path.display().to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn config(mut self, config: impl Serialize) -> Self {
        self.config = serde_json::to_value(config).expect("config serializes");
        self
    }

    pub fn depth_truncated(mut self, truncated: bool) -> Self {
        self.depth_truncated = Some(truncated);
        self
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes `manifest.json` into `dir` with the finish timestamp taken
    /// now.
    pub fn write(self, dir: &Path) -> Result<(), CliError> {
        let manifest = RunManifest {
            tool: "parapc",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            input: self.input,
            seed: self.seed,
            config: self.config,
            depth_truncated: self.depth_truncated,
            outputs: self.outputs,
            started_at: self.started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
        };
        let path = dir.join("manifest.json");
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, body + "\n")
            .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
    }
}
