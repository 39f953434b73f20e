//! Output files: every JSON document carries the config hash and constants mode.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qsteer_core::Trajectory;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    status: &'a str,
    tool_version: &'a str,
    config_hash: String,
    constants_mode: qsteer_core::ConstantsMode,
    config: &'a RunConfig,
    result: T,
}

pub struct Output {
    pub dir: PathBuf,
}

impl Output {
    pub fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, command: &str, status: &str, cfg: &RunConfig, result: T) -> Result<PathBuf> {
        let env = Envelope {
            command,
            status,
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.hash(),
            constants_mode: cfg.constants_mode,
            config: cfg,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        let path = self.path(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Trajectory CSV; failed runs end with a `# FAILED:` line.
    pub fn write_trajectory(&self, name: &str, traj: &Trajectory, failure: Option<&str>) -> Result<PathBuf> {
        let path = self.path(name);
        let mut f = std::io::BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        traj.write_csv(&mut f)?;
        if let Some(msg) = failure {
            writeln!(f, "# FAILED: {msg}")?;
        }
        f.flush()?;
        Ok(path)
    }
}

pub fn resolve_dir(flag: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("QSTEER_OUT") {
        return PathBuf::from(p);
    }
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("qsteer-out"))
}
