//! Run-directory ownership and metadata.

use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::io;

pub const LOCK_FILE: &str = "run.lock";
pub const FAILED_FILE: &str = "FAILED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// SHA-256 of `config.json`.
    pub config_sha256: String,
    pub status: String,
    pub failed_stage: Option<String>,
}

/// Exclusive handle on a run directory, released on drop.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    info: RunInfo,
    stage: Option<String>,
    locked: bool,
}

impl RunDir {
    /// Lock `root`, store the configuration and clear any earlier failure
    /// marker.
    pub fn acquire(root: &Path, command: &str, cfg: &PipelineConfig) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => writeln!(f, "{}", std::process::id()).with_context(|| format!("writing {}", lock.display()))?,
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                bail!("{} is locked by another run (remove {} if that run is gone)", root.display(), lock.display())
            }
            Err(e) => return Err(e).with_context(|| format!("creating {}", lock.display())),
        }
        let mut run = RunDir {
            root: root.to_path_buf(),
            info: RunInfo {
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                seed: cfg.seed,
                config_sha256: String::new(),
                status: "running".into(),
                failed_stage: None,
            },
            stage: None,
            locked: true,
        };
        let failed = root.join(FAILED_FILE);
        if failed.exists() {
            fs::remove_file(&failed).with_context(|| format!("removing {}", failed.display()))?;
        }
        let mut text = serde_json::to_string_pretty(cfg)?;
        text.push('\n');
        fs::write(root.join("config.json"), &text).with_context(|| format!("writing config copy in {}", root.display()))?;
        run.info.config_sha256 = io::sha256_hex(&[text.as_bytes()]);
        run.write_info()?;
        Ok(run)
    }

    pub fn enter(&mut self, stage: &str) {
        self.stage = Some(stage.into());
    }

    fn write_info(&self) -> Result<()> {
        io::write_json(&self.root.join("run.json"), &self.info)
    }

    pub fn finish(mut self) -> Result<()> {
        self.info.status = "complete".into();
        self.write_info()?;
        self.release()
    }

    /// Leave a `FAILED` marker naming the stage; outputs already written stay
    /// in place but are partial.
    pub fn fail(mut self, err: &anyhow::Error) -> Result<()> {
        let stage = self.stage.clone().unwrap_or_else(|| "setup".into());
        self.info.status = "failed".into();
        self.info.failed_stage = Some(stage.clone());
        fs::write(self.root.join(FAILED_FILE), format!("stage: {stage}\nerror: {err:#}\n"))?;
        self.write_info()?;
        self.release()
    }

    fn release(&mut self) -> Result<()> {
        if self.locked {
            self.locked = false;
            let lock = self.root.join(LOCK_FILE);
            fs::remove_file(&lock).with_context(|| format!("removing {}", lock.display()))?;
        }
        Ok(())
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        let _ = self.release();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_acquire_is_refused_until_release() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::default();
        let first = RunDir::acquire(dir.path(), "pipeline", &cfg).unwrap();
        assert!(RunDir::acquire(dir.path(), "pipeline", &cfg).is_err());
        first.finish().unwrap();
        assert!(!dir.path().join(LOCK_FILE).exists());
        let info: RunInfo = io::read_json(&dir.path().join("run.json")).unwrap();
        assert_eq!(info.status, "complete");
        RunDir::acquire(dir.path(), "pipeline", &cfg).unwrap();
    }

    #[test]
    fn failure_names_the_stage() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDir::acquire(dir.path(), "pipeline", &PipelineConfig::default()).unwrap();
        run.enter("geodesic");
        run.fail(&anyhow::anyhow!("graph has 2 components")).unwrap();
        let text = fs::read_to_string(dir.path().join(FAILED_FILE)).unwrap();
        assert!(text.contains("stage: geodesic"));
        let info: RunInfo = io::read_json(&dir.path().join("run.json")).unwrap();
        assert_eq!(info.failed_stage.as_deref(), Some("geodesic"));
    }
}
