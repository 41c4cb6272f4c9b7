//! Run artifacts: CSV tables, JSON summaries and the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;

/// One CSV cell.
#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(i64),
    U(u64),
    B(bool),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

/// Formats a float with 17 significant digits, which round-trips exactly.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format_float(*v),
            Cell::I(v) => v.to_string(),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }
}

/// A table whose rows are all prefixed with `config_hash, replica_start, replica_end`.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    rows: Vec<(u64, u64, Vec<Cell>)>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    /// Adds a row computed from replicas `start..end`.
    pub fn push(&mut self, replicas: (u64, u64), cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push((replicas.0, replicas.1, cells));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, config_hash: &str) -> String {
        let mut out = String::from("config_hash,replica_start,replica_end");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (a, b, cells) in &self.rows {
            let _ = write!(out, "{config_hash},{a},{b}");
            for c in cells {
                out.push(',');
                out.push_str(&c.render());
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub kind: String,
    pub seed: u64,
    pub generator: String,
    pub version: String,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    pub warnings: Vec<String>,
    pub tables: Vec<String>,
    pub snapshots: Vec<String>,
}

/// Collects everything a run writes, then flushes it in one place.
pub struct RunOutput {
    pub dir: PathBuf,
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
    pub warnings: Vec<String>,
    pub snapshots: Vec<String>,
    stages: Vec<StageTiming>,
    clock: Instant,
}

impl RunOutput {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            tables: Vec::new(),
            summary: serde_json::Value::Null,
            warnings: Vec::new(),
            snapshots: Vec::new(),
            stages: Vec::new(),
            clock: Instant::now(),
        }
    }

    /// Runs `f` and records its duration under `stage`.
    pub fn stage<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.stages.push(StageTiming { stage: stage.into(), seconds: t.elapsed().as_secs_f64() });
        out
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }

    pub fn finish(self, hash: &str, kind: &str, seed: u64, workers: usize) -> Result<RunManifest> {
        fs::create_dir_all(&self.dir)?;
        let mut names = Vec::new();
        for t in &self.tables {
            let name = format!("{}.csv", t.name);
            fs::write(self.dir.join(&name), t.render(hash))?;
            names.push(name);
        }
        fs::write(self.dir.join("summary.json"), serde_json::to_string_pretty(&self.summary)? + "\n")?;
        let manifest = RunManifest {
            config_hash: hash.into(),
            kind: kind.into(),
            seed,
            generator: crate::rng::RngStream::new(seed, 0).algorithm().into(),
            version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            workers,
            wall_clock_seconds: self.clock.elapsed().as_secs_f64(),
            stages: self.stages,
            warnings: self.warnings,
            tables: names,
            snapshots: self.snapshots,
        };
        fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(manifest)
    }
}
