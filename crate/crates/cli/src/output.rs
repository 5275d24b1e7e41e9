//! Output-directory resolution, atomic file writes, and run manifests.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliError;

/// Environment variable overriding the default output root.
pub const OUT_ENV: &str = "MEST_OUT";

/// Precedence: `--out` flag, then `MEST_OUT`, then `./mest-out`.
pub fn resolve_out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("mest-out"))
}

/// Write bytes to `path` atomically (temp file in the same directory, then
/// rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let parent = path
        .parent()
        .ok_or_else(|| CliError::io(format!("no parent directory for {}", path.display())))?;
    std::fs::create_dir_all(parent).map_err(|e| CliError::io(e.to_string()))?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| CliError::io(e.to_string()))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub subcommand: String,
    pub config_path: String,
    /// Verbatim config file contents at run time.
    pub config_snapshot: String,
    pub tool_version: String,
    pub master_seed: u64,
    /// Subcommand-specific resolved values (block sizes, paths, hashes).
    pub resolved: serde_json::Value,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        config_path: &Path,
        config_snapshot: String,
        master_seed: u64,
        started_unix: u64,
    ) -> Self {
        Self {
            schema_version: 1,
            subcommand: subcommand.to_string(),
            config_path: config_path.display().to_string(),
            config_snapshot,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            resolved: serde_json::Value::Null,
            started_unix,
            finished_unix: 0,
        }
    }

    pub fn finish(mut self, resolved: serde_json::Value) -> Self {
        self.resolved = resolved;
        self.finished_unix = unix_now();
        self
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        let bytes = serde_json::to_vec_pretty(self).map_err(|e| CliError::io(e.to_string()))?;
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}
