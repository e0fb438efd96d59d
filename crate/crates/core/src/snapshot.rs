//! Field snapshots: a JSON header next to a raw little-endian `f64` payload.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub shape: Vec<usize>,
    pub h: f64,
    pub origin: Vec<f64>,
    /// Payload file name, relative to the header.
    pub data: String,
    pub dtype: String,
}

fn stem_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = if path.extension().is_some_and(|e| e == "json" || e == "bin") {
        path.with_extension("")
    } else {
        path.to_path_buf()
    };
    let mut json = stem.clone().into_os_string();
    json.push(".json");
    let mut bin = stem.into_os_string();
    bin.push(".bin");
    (json.into(), bin.into())
}

/// Writes `<stem>.json` and `<stem>.bin`; returns the header path.
pub fn write_snapshot(field: &Field, path: &Path) -> Result<PathBuf> {
    let (json, bin) = stem_paths(path);
    if let Some(dir) = json.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let g = field.grid();
    let header = SnapshotHeader {
        shape: g.shape().to_vec(),
        h: g.h(),
        origin: g.origin().to_vec(),
        data: bin
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        dtype: "f64-le".into(),
    };
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes)?;
    fs::write(&json, serde_json::to_string_pretty(&header)?)?;
    Ok(json)
}

/// Reads a snapshot given either the header path or the common stem.
pub fn read_snapshot(path: &Path) -> Result<Field> {
    let (json, _) = stem_paths(path);
    let header: SnapshotHeader = serde_json::from_str(&fs::read_to_string(&json)?)?;
    if header.dtype != "f64-le" {
        return Err(Error::Validation(format!("unsupported snapshot dtype {}", header.dtype)));
    }
    let grid = Grid::new(header.shape, header.h, header.origin)?;
    let bin = json.with_file_name(&header.data);
    let bytes = fs::read(&bin)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Validation(format!(
            "snapshot payload has {} bytes, expected {}",
            bytes.len(),
            8 * grid.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Field::from_values(grid, values)
}
