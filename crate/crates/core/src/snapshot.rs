//! Flat binary snapshots: little-endian `f64` values in dense index order
//! next to a JSON sidecar describing geometry and provenance.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub sides: Vec<usize>,
    pub offset: Vec<i64>,
    /// What the values are, e.g. `gff-dirichlet` or `green-column`.
    pub kind: String,
    pub parameters: serde_json::Value,
    pub generator: Option<String>,
    pub seed: Option<u64>,
    pub replica: Option<u64>,
    pub len: usize,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

pub fn write_snapshot(stem: &Path, values: &[f64], meta: &SnapshotMeta) -> Result<()> {
    if meta.len != values.len() {
        return Err(Error::LengthMismatch { expected: meta.len, got: values.len() });
    }
    let (bin, json) = paths(stem);
    let mut w = BufWriter::new(fs::File::create(bin)?);
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    fs::write(json, serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

pub fn read_snapshot(stem: &Path) -> Result<(Vec<f64>, SnapshotMeta)> {
    let (bin, json) = paths(stem);
    let meta: SnapshotMeta = serde_json::from_str(&fs::read_to_string(json)?)?;
    let mut bytes = Vec::new();
    fs::File::open(bin)?.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * meta.len {
        return Err(Error::LengthMismatch { expected: 8 * meta.len, got: bytes.len() });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((values, meta))
}

impl SnapshotMeta {
    pub fn for_box(lattice: &LatticeBox, kind: &str, len: usize) -> Self {
        Self {
            sides: lattice.sides().to_vec(),
            offset: lattice.offset().to_vec(),
            kind: kind.to_string(),
            parameters: serde_json::Value::Null,
            generator: None,
            seed: None,
            replica: None,
            len,
        }
    }

    pub fn lattice(&self) -> Result<LatticeBox> {
        LatticeBox::new(&self.sides, &self.offset)
    }
}
