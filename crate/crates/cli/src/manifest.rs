use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::failure::Failure;

pub const FILE_NAME: &str = "manifest.json";

/// Written next to every run's outputs. `argv` is enough to reproduce the
/// data files; `elapsed_ms` is the only field that changes between runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub elapsed_ms: u64,
    /// File names relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub diagnostics: Value,
}

impl RunManifest {
    pub fn new(command: &str, params: Value, argv: &[String], seed: Option<u64>) -> Self {
        RunManifest {
            command: command.into(),
            params,
            argv: argv.to_vec(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            elapsed_ms: 0,
            outputs: Vec::new(),
            diagnostics: Value::Null,
        }
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path.display(), e))?;
        serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
    }
}
