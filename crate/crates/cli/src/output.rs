//! CSV tables, the run manifest and file bookkeeping.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

/// Full double precision: 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Column-major table with a header row.
#[derive(Debug, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub config: RunConfig,
    pub files: Vec<FileEntry>,
    pub summary: serde_json::Value,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Output directory plus the list of data files written so far.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
    plots: Vec<PathBuf>,
    summary: serde_json::Map<String, serde_json::Value>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::config("out", format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), plots: Vec::new(), summary: Default::default() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> Result<PathBuf, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.files.push(FileEntry { name: name.to_string(), sha256: hex(&Sha256::digest(bytes)) });
        Ok(path)
    }

    /// SVG files are not hashed: they are derived from the CSVs.
    pub fn write_plot(&mut self, name: &str, svg: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        std::fs::write(&path, svg)?;
        self.plots.push(path.clone());
        Ok(path)
    }

    pub fn note(&mut self, key: &str, value: serde_json::Value) {
        self.summary.insert(key.to_string(), value);
    }

    pub fn finish(self, config: &RunConfig) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: config.experiment.name().to_string(),
            seed: config.seed,
            config: config.clone(),
            files: self.files,
            summary: serde_json::Value::Object(self.summary),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(self.dir.join(MANIFEST_NAME), text)?;
        std::fs::write(self.dir.join("config.txt"), config.to_flat())?;
        Ok(manifest)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Names of files whose hashes differ or that appear in only one manifest.
pub fn changed_files(a: &Manifest, b: &Manifest) -> Vec<String> {
    let mut out: Vec<String> = a
        .files
        .iter()
        .filter(|f| !b.files.contains(f))
        .chain(b.files.iter().filter(|f| !a.files.contains(f)))
        .map(|f| f.name.clone())
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::config("manifest", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config("manifest", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        let s = num(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(opt(None), "");
    }
}
