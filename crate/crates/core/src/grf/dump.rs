//! Binary field dump: a 32-byte header followed by little-endian `f64`
//! samples in row-major order. Physical metadata lives in a JSON sidecar
//! next to the dump (`<path>.json`).
//!
//! ```text
//! offset  size  field
//!      0     4  magic "EXTF"
//!      4     2  version (u16 LE, currently 1)
//!      6     2  dim (u16 LE, 2 or 3)
//!      8     4  side N (u32 LE)
//!     12    20  reserved, zero
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::FieldGrid;
use crate::error::{Error, Result};
use crate::Dim;

pub const MAGIC: &[u8; 4] = b"EXTF";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

/// Metadata stored alongside a field dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub dim: usize,
    pub side: usize,
    pub box_size: f64,
    pub rs: f64,
    pub seed: u64,
    pub stream: u64,
}

pub fn encode_field(field: &FieldGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(field.dim.as_usize() as u16).to_le_bytes());
    out.extend_from_slice(&(field.side as u32).to_le_bytes());
    out.resize(HEADER_LEN, 0);
    for v in &field.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a dump into `(dim, side, values)`.
pub fn decode_field(bytes: &[u8]) -> Result<(Dim, usize, Vec<f64>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "field dump is {} bytes, shorter than its header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic, expected \"EXTF\"".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported field dump version {version}"
        )));
    }
    let dim = match u16::from_le_bytes([bytes[6], bytes[7]]) {
        2 => Dim::Two,
        3 => Dim::Three,
        d => return Err(Error::Format(format!("unsupported dimension {d}"))),
    };
    let side = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
    let cells = side
        .checked_pow(dim.as_usize() as u32)
        .ok_or_else(|| Error::Format(format!("grid side {side} overflows")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != cells * 8 {
        return Err(Error::Format(format!(
            "expected {} bytes of samples for side {side}, found {}",
            cells * 8,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((dim, side, values))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the binary dump and its sidecar.
pub fn write_field(path: &Path, field: &FieldGrid) -> Result<()> {
    fs::write(path, encode_field(field))?;
    let sidecar = FieldSidecar {
        dim: field.dim.as_usize(),
        side: field.side,
        box_size: field.box_size,
        rs: field.rs_applied,
        seed: field.seed,
        stream: field.stream,
    };
    fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(&sidecar)? + "\n",
    )?;
    Ok(())
}

/// Reads a dump. Without a sidecar the box size defaults to the pixel count.
pub fn read_field(path: &Path) -> Result<FieldGrid> {
    let (dim, side, values) = decode_field(&fs::read(path)?)?;
    let sc = sidecar_path(path);
    let meta = if sc.exists() {
        let meta: FieldSidecar = serde_json::from_slice(&fs::read(sc)?)?;
        if meta.dim != dim.as_usize() || meta.side != side {
            return Err(Error::Format(
                "sidecar disagrees with the dump header".into(),
            ));
        }
        Some(meta)
    } else {
        None
    };
    let box_size = meta.as_ref().map_or(side as f64, |m| m.box_size);
    let mut field = FieldGrid::from_values(dim, side, box_size, values)?;
    if let Some(m) = meta {
        field.rs_applied = m.rs;
        field.seed = m.seed;
        field.stream = m.stream;
    }
    Ok(field)
}
