use std::path::{Path, PathBuf};
use std::time::Instant;

use honeycomb_bloch::io::write_json;
use honeycomb_bloch::Result;
use serde::{Deserialize, Serialize};

/// Provenance record written beside every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Resolved arguments, including the full training config where relevant.
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
    pub seed: Option<u64>,
}

pub struct Run {
    started: Instant,
    manifest: RunManifest,
}

impl Run {
    pub fn start(subcommand: &str, config: serde_json::Value) -> Self {
        Run {
            started: Instant::now(),
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                subcommand: subcommand.to_string(),
                config,
                inputs: Vec::new(),
                outputs: Vec::new(),
                duration_seconds: 0.0,
                seed: None,
            },
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.manifest.inputs.push(p.display().to_string());
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn set_config(&mut self, config: serde_json::Value) {
        self.manifest.config = config;
    }

    /// Records `out` and writes the manifest beside it: `<out>.manifest.json`
    /// for files, `<out>/run.json` for checkpoint directories.
    pub fn finish(mut self, out: &Path) -> Result<()> {
        self.manifest.outputs.push(out.display().to_string());
        self.manifest.duration_seconds = self.started.elapsed().as_secs_f64();
        write_json(&manifest_path(out), &self.manifest)
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("run.json")
    } else {
        let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        out.with_file_name(name)
    }
}
