//! Run manifests: every command writes a JSON sidecar with all resolved
//! parameters so the run can be reproduced bit for bit from the inputs.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub parameters: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, input: Option<&Path>, parameters: serde_json::Value) -> Self {
        RunManifest {
            tool: "slci",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            input: input.map(Path::to_path_buf),
            outputs: Vec::new(),
            parameters,
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Write next to the primary output as `<output>.manifest.json`.
    pub fn write_sidecar(&self, primary: &Path) -> anyhow::Result<PathBuf> {
        let mut name = primary.as_os_str().to_os_string();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let body = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, body.as_bytes())
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(path)
    }
}
