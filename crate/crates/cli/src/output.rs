//! Single writer for the output directory and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Everything about a run that is not part of the deterministic payload.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub seed: u64,
    pub jobs: usize,
    pub config: &'a RunConfig,
    /// Cells per axis of every grid actually solved on.
    pub grids: Vec<Vec<usize>>,
    /// Seconds per operation.
    pub wall_clock: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub files: Vec<FileRecord>,
}

pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(OutputDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(FileRecord {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), CliError> {
        let mut text = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
        text.push(b'\n');
        self.write(name, &text)
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(std::io::Error::other)?;
        for row in rows {
            w.write_record(row).map_err(std::io::Error::other)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        self.write(name, &bytes)
    }

    /// Write the manifest, referencing every file written so far.
    pub fn finish(self, mut manifest: RunManifest<'_>) -> Result<PathBuf, CliError> {
        manifest.files = self.files;
        let mut text = serde_json::to_vec_pretty(&manifest).map_err(std::io::Error::other)?;
        text.push(b'\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text)?;
        Ok(path)
    }
}

/// Shortest round-tripping decimal form, empty for missing values.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_hash_of_written_bytes() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path()).unwrap();
        out.csv("a.csv", &["x".into()], &[vec!["1".into()]]).unwrap();
        assert_eq!(out.files[0].sha256, hex::encode(Sha256::digest(b"x\n1\n")));
        assert_eq!(fs::read(tmp.path().join("a.csv")).unwrap(), b"x\n1\n");
    }

    #[test]
    fn cells_round_trip() {
        for v in [0.1, -2.0, 1e-300, 1.0 / 3.0] {
            assert_eq!(cell(Some(v)).parse::<f64>().unwrap(), v);
        }
        assert_eq!(cell(None), "");
    }
}
