use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;
pub const OUT_DIR_ENV: &str = "NPVO_OUT_DIR";

/// Everything needed to repeat a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format_version: u32,
    pub subcommand: String,
    /// Config file or bundled scenario the run started from.
    pub source: String,
    /// Fully resolved config, stored next to the manifest.
    pub config_file: String,
    pub output_dir: PathBuf,
    pub seed: u64,
    #[serde(default)]
    pub predictor: Option<String>,
    #[serde(default)]
    pub strict: bool,
    pub tool_version: String,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = crate::config::read(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        let version = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .unwrap_or(0);
        if version == 0 || version > MANIFEST_FORMAT_VERSION as u64 {
            return Err(CliError::Invalid(format!(
                "{}: manifest format_version {version} is not supported (newest is {MANIFEST_FORMAT_VERSION})",
                path.display()
            )));
        }
        serde_json::from_value(value)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }
}

pub fn default_out(run_name: &str) -> PathBuf {
    let root =
        std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("npvo-out"), PathBuf::from);
    root.join(run_name)
}

/// Files are written into a sibling staging directory and moved into place
/// with one rename, so readers never see a half-written run.
pub struct StagedDir {
    staging: PathBuf,
    target: PathBuf,
    force: bool,
}

impl StagedDir {
    pub fn new(target: PathBuf, force: bool) -> Result<Self, CliError> {
        if target.exists() && !force {
            return Err(CliError::Invalid(format!(
                "{} already exists; pass --force to replace it",
                target.display()
            )));
        }
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)
            .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        let name = target.file_name().ok_or_else(|| {
            CliError::Invalid(format!("{} is not a directory name", target.display()))
        })?;
        let staging = parent.join(format!(
            ".{}.partial-{}",
            name.to_string_lossy(),
            std::process::id()
        ));
        if staging.exists() {
            fs::remove_dir_all(&staging)
                .map_err(|e| CliError::Io(format!("{}: {e}", staging.display())))?;
        }
        fs::create_dir(&staging)
            .map_err(|e| CliError::Io(format!("{}: {e}", staging.display())))?;
        Ok(StagedDir {
            staging,
            target,
            force,
        })
    }

    pub fn target(&self) -> &Path {
        &self.target
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.staging.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn commit(self) -> Result<PathBuf, CliError> {
        if self.target.exists() {
            if !self.force {
                return Err(CliError::Invalid(format!(
                    "{} appeared during the run",
                    self.target.display()
                )));
            }
            fs::remove_dir_all(&self.target)
                .map_err(|e| CliError::Io(format!("{}: {e}", self.target.display())))?;
        }
        fs::rename(&self.staging, &self.target)
            .map_err(|e| CliError::Io(format!("{}: {e}", self.target.display())))?;
        Ok(self.target.clone())
    }
}

impl Drop for StagedDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.staging);
    }
}

/// Single-file variant of the same rule.
pub fn write_file(path: &Path, contents: &str, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Invalid(format!(
            "{} already exists; pass --force to replace it",
            path.display()
        )));
    }
    let tmp = path.with_extension(format!("partial-{}", std::process::id()));
    fs::write(&tmp, contents).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
