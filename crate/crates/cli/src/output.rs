//! Artifact directories and their manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    /// Arguments after the program name, config-file values included.
    pub argv: Vec<String>,
    /// Parameters after defaults and presets are applied.
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Files of one run, collected so the manifest can list them.
pub struct Artifacts {
    dir: PathBuf,
    manifest: ExperimentManifest,
}

impl Artifacts {
    pub fn create(root: &Path, subcommand: &str, argv: Vec<String>) -> Result<Self> {
        let dir = root.join(subcommand);
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Runtime(format!("creating {}: {e}", dir.display())))?;
        Ok(Artifacts {
            dir,
            manifest: ExperimentManifest {
                tool: env!("CARGO_BIN_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                subcommand: subcommand.to_string(),
                argv,
                parameters: serde_json::Value::Null,
                seed: None,
                outputs: Vec::new(),
                note: None,
            },
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    pub fn parameters<T: Serialize>(&mut self, params: &T, seed: Option<u64>) -> Result<()> {
        self.manifest.parameters = serde_json::to_value(params)?;
        self.manifest.seed = seed;
        Ok(())
    }

    pub fn note(&mut self, note: &str) {
        self.manifest.note = Some(note.to_string());
    }

    /// Record a file written by other code.
    pub fn track(&mut self, file: &str) {
        if !self.manifest.outputs.iter().any(|f| f == file) {
            self.manifest.outputs.push(file.to_string());
        }
    }

    pub fn text(&mut self, file: &str, body: &str) -> Result<()> {
        let path = self.path(file);
        fs::write(&path, body)
            .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))?;
        self.track(file);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, file: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(file, &body)
    }

    /// Write the manifest as it stands; `finish` rewrites it.
    pub fn checkpoint(&mut self) -> Result<()> {
        self.track("manifest.json");
        let manifest = self.manifest.clone();
        self.json("manifest.json", &manifest)
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.checkpoint()?;
        Ok(self.dir)
    }
}
