//! Result tables: plot-ready CSV plus a metadata sidecar, written
//! atomically so readers never observe a half-written file.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// Run provenance, written next to the CSV. Everything except the
/// wall-clock field is sufficient to reproduce the CSV bit-identically.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub scenario: String,
    pub base_seed: u64,
    pub replications: u64,
    pub toolkit_version: String,
    pub wall_clock_unix_seconds: f64,
    pub params: toml::Table,
}

impl Metadata {
    pub fn new(scenario: &str, base_seed: u64, replications: u64, params: toml::Table) -> Self {
        Metadata {
            scenario: scenario.to_string(),
            base_seed,
            replications,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0),
            params,
        }
    }
}

/// An ordered-schema result table; every row conforms to the schema.
#[derive(Debug, Clone)]
pub struct ResultTable {
    schema: Vec<String>,
    rows: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new(schema: &[&str], metadata: Metadata) -> Self {
        ResultTable {
            schema: schema.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            metadata,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.schema.len(), "row does not conform to the schema");
        self.rows.push(row);
    }

    pub fn extend(&mut self, rows: Vec<Vec<f64>>) {
        for row in rows {
            self.push(row);
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// The CSV bytes: header plus one line per row. Floats use Rust's
    /// shortest round-trip formatting, so identical values always give
    /// identical bytes.
    pub fn csv_bytes(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.schema.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes `results.csv` and `metadata.json` under `dir` via a
    /// temp-file-and-rename pair, creating the directory if needed.
    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join("results.csv");
        write_atomic(&csv_path, self.csv_bytes().as_bytes())?;
        let meta = serde_json::to_string_pretty(&self.metadata).map_err(io::Error::other)?;
        write_atomic(&dir.join("metadata.json"), meta.as_bytes())?;
        Ok(csv_path)
    }

    /// Preserves whatever completed before a runtime failure as
    /// `results.csv.partial` (plus its metadata sidecar).
    pub fn write_partial(&self, dir: &Path) -> io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join("results.csv.partial");
        write_atomic(&csv_path, self.csv_bytes().as_bytes())?;
        let meta = serde_json::to_string_pretty(&self.metadata).map_err(io::Error::other)?;
        write_atomic(&dir.join("metadata.json.partial"), meta.as_bytes())?;
        Ok(csv_path)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
