//! CSV tables and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use volterra_clt_core::Trajectory;

use crate::config::RawConfig;
use crate::RunError;

/// Shortest round-trip text for a float, switching to exponent form for
/// very small or large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

/// Tracks every file written below the output directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    /// Write a CSV table at `name` (relative, `/`-separated).
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for row in rows {
            w.write_record(row).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_trajectory(&mut self, name: &str, traj: &Trajectory) -> Result<(), RunError> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=traj.dim()).map(|c| format!("v_{c}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = (0..traj.len())
            .map(|j| {
                let mut r = vec![fmt_f64(traj.grid().node(j))];
                r.extend(traj.at(j).iter().map(|v| fmt_f64(*v)));
                r
            })
            .collect();
        self.write_csv(name, &header, &rows)
    }

    fn checksums(&self) -> Result<BTreeMap<String, String>, RunError> {
        self.written
            .iter()
            .map(|name| {
                let path = self.root.join(name);
                let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
                Ok((name.clone(), hex::encode(Sha256::digest(&bytes))))
            })
            .collect()
    }

    /// Write `manifest.toml` via a temporary file and a rename.
    pub fn write_manifest(&self, config: &RawConfig, started_unix_ms: u64) -> Result<PathBuf, RunError> {
        let manifest = Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.master_seed.unwrap_or_default(),
            started_unix_ms,
            finished_unix_ms: unix_ms(),
            checksums: self.checksums()?,
            config: config.clone(),
        };
        let text = toml::to_string(&manifest).map_err(|e| RunError::Io(format!("manifest: {e}")))?;
        let tmp = self.root.join(".manifest.toml.tmp");
        let dest = self.root.join("manifest.toml");
        let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        f.write_all(text.as_bytes()).and_then(|_| f.sync_all()).map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, &dest).map_err(|e| io_err(&dest, e))?;
        Ok(dest)
    }
}

#[derive(Debug, Serialize)]
struct Manifest {
    version: String,
    master_seed: u64,
    started_unix_ms: u64,
    finished_unix_ms: u64,
    checksums: BTreeMap<String, String>,
    config: RawConfig,
}

pub fn unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}
