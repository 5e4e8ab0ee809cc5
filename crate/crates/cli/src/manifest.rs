use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::args::{Command, Format};

/// Everything needed to redo a run. Input paths are absolute; output
/// paths are relative to the output directory, which is not recorded, so a
/// rerun elsewhere produces an identical manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Subcommand path, e.g. `analyze avar`.
    pub command: String,
    pub seed: u64,
    pub format: Format,
    /// Fully resolved arguments.
    pub params: Command,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing run manifest {}", path.display()))
    }
}

pub fn manifest_file_name(stem: &str) -> String {
    format!("{stem}.manifest.json")
}
