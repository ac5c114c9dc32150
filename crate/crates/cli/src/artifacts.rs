//! CSV tables, the run manifest and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::failure::{Failure, Outcome};

/// Shortest decimal string that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// A CSV table whose first column is the config hash.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    hash: String,
}

impl Table {
    pub fn new(name: &str, hash: &str, columns: &[&str]) -> Self {
        let mut header = vec!["config_hash".to_string()];
        header.extend(columns.iter().map(|c| c.to_string()));
        Self {
            name: name.to_string(),
            header,
            rows: Vec::new(),
            hash: hash.to_string(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len() + 1, self.header.len(), "row width for {}", self.name);
        let mut full = Vec::with_capacity(self.header.len());
        full.push(self.hash.clone());
        full.extend(row);
        self.rows.push(full);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema: &'static str,
    pub command: String,
    pub config_path: String,
    pub config_hash: String,
    pub library_version: &'static str,
    pub cli_version: &'static str,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub started_unix_seconds: u64,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<String>,
}

/// Writes `bytes` to `dir/name` through a temporary file in `dir`.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Outcome<PathBuf> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(dir.display(), e))?;
    tmp.write_all(bytes).map_err(|e| Failure::io(target.display(), e))?;
    tmp.as_file().sync_all().map_err(|e| Failure::io(target.display(), e))?;
    tmp.persist(&target)
        .map_err(|e| Failure::io(target.display(), e.error))?;
    Ok(target)
}

/// Output of one command, written only after the command succeeds.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub files: Vec<(String, Vec<u8>)>,
    pub seeds: Vec<u64>,
}

impl Artifacts {
    pub fn is_empty(&self) -> bool {
        self.tables.is_empty() && self.files.is_empty()
    }

    /// Writes every artifact, then the manifest, and returns the written paths.
    pub fn write(self, dir: &Path, mut manifest: Manifest) -> Outcome<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir.display(), e))?;
        let mut written = Vec::new();
        for t in &self.tables {
            let name = format!("{}.csv", t.name);
            written.push(write_atomic(dir, &name, &t.to_bytes())?);
            manifest.artifacts.push(name);
        }
        for (name, bytes) in &self.files {
            written.push(write_atomic(dir, name, bytes)?);
            manifest.artifacts.push(name.clone());
        }
        manifest.seeds = self.seeds;
        let json = serde_json::to_vec_pretty(&manifest).expect("manifests serialize");
        written.push(write_atomic(dir, "manifest.json", &json)?);
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 0.311278124459133, 1e-300, 2.5e20, 0.0, -0.0] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(num(0.5), "0.5");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn tables_lead_with_the_hash() {
        let mut t = Table::new("x", "abc", &["a", "b"]);
        t.push(vec!["1".into(), "two, quoted".into()]);
        let text = String::from_utf8(t.to_bytes()).unwrap();
        assert_eq!(text, "config_hash,a,b\nabc,1,\"two, quoted\"\n");
    }

    #[test]
    fn atomic_write_replaces_the_file() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "f.txt", b"one").unwrap();
        write_atomic(dir.path(), "f.txt", b"two").unwrap();
        assert_eq!(std::fs::read(dir.path().join("f.txt")).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
