use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command run, written next to its artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub case_path: Option<String>,
    pub overrides: BTreeMap<String, String>,
    pub output_dir: String,
    pub exit_status: u8,
    /// Files written to `output_dir`, by name.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        case_path: Option<&Path>,
        overrides: BTreeMap<String, String>,
        output_dir: &Path,
        exit_status: u8,
        artifacts: Vec<String>,
    ) -> Self {
        Self {
            command: command.to_string(),
            case_path: case_path.map(|p| p.display().to_string()),
            overrides,
            output_dir: output_dir.display().to_string(),
            exit_status,
            artifacts,
        }
    }

    pub(crate) fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Input(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
