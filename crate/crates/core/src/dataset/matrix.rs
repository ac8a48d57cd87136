//! Binary matrix file.
//!
//! ```text
//! [0..8]    magic "SSEVMAT1"
//! [8..12]   rows  u32 LE
//! [12..16]  cols  u32 LE
//! [16..]    rows*cols f32 LE, row-major
//! [..]      rows label bytes (0 or 1)
//! ```
//!
//! Row ids are not part of the format; they travel in a sidecar text file
//! with one id per line.

use std::path::Path;

use super::FeatureVector;
use crate::error::{Error, Result};

pub const MATRIX_MAGIC: &[u8; 8] = b"SSEVMAT1";
const HEADER_LEN: usize = 16;

pub fn encode_matrix(vectors: &[FeatureVector]) -> Result<Vec<u8>> {
    let cols = vectors.first().map_or(0, |v| v.values.len());
    if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.values.len() != cols) {
        return Err(Error::Dimension(format!(
            "row {i} has {} columns, expected {cols}",
            v.values.len()
        )));
    }
    if let Some(v) = vectors.iter().find(|v| v.label > 1) {
        return Err(Error::Format(format!("label {} is not binary", v.label)));
    }
    let rows = u32::try_from(vectors.len()).map_err(|_| Error::Dimension("too many rows".into()))?;
    let cols32 = u32::try_from(cols).map_err(|_| Error::Dimension("too many columns".into()))?;
    let mut buf = Vec::with_capacity(HEADER_LEN + vectors.len() * (cols * 4 + 1));
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols32.to_le_bytes());
    for v in vectors {
        for x in &v.values {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    buf.extend(vectors.iter().map(|v| v.label));
    Ok(buf)
}

/// Decodes a matrix; row ids are set to the row index.
pub fn decode_matrix(bytes: &[u8]) -> Result<Vec<FeatureVector>> {
    if bytes.len() < 8 {
        return Err(Error::Truncated(format!("{} bytes, header needs {HEADER_LEN}", bytes.len())));
    }
    if &bytes[..8] != MATRIX_MAGIC {
        if &bytes[..7] == b"SSEVMAT" {
            let found = bytes[7].wrapping_sub(b'0');
            return Err(Error::Version {
                expected: 1,
                found: u32::from(found),
            });
        }
        return Err(Error::Format("bad matrix magic".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated(format!("{} bytes, header needs {HEADER_LEN}", bytes.len())));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let (rows, cols) = (word(8), word(12));
    let payload = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(rows))
        .ok_or_else(|| Error::Dimension(format!("{rows}x{cols} overflows")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() < payload {
        return Err(Error::Truncated(format!(
            "{rows}x{cols} matrix needs {payload} payload bytes, found {}",
            body.len()
        )));
    }
    if body.len() > payload {
        return Err(Error::Dimension(format!(
            "{} trailing bytes after a {rows}x{cols} matrix",
            body.len() - payload
        )));
    }
    let (data, labels) = body.split_at(rows * cols * 4);
    let mut out = Vec::with_capacity(rows);
    for (r, &label) in labels.iter().enumerate() {
        if label > 1 {
            return Err(Error::Format(format!("row {r} label {label} is not binary")));
        }
        let row = &data[r * cols * 4..(r + 1) * cols * 4];
        out.push(FeatureVector {
            id: r.to_string(),
            values: row
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
                .collect(),
            label,
        });
    }
    Ok(out)
}

pub fn write_matrix(vectors: &[FeatureVector], path: &Path) -> Result<()> {
    let bytes = encode_matrix(vectors)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Vec<FeatureVector>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes)
}

pub fn write_ids(vectors: &[FeatureVector], path: &Path) -> Result<()> {
    let text: String = vectors.iter().map(|v| format!("{}\n", v.id)).collect();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Replaces the index ids of `vectors` with those in the sidecar file.
pub fn read_ids(vectors: &mut [FeatureVector], path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ids: Vec<&str> = text.lines().collect();
    if ids.len() != vectors.len() {
        return Err(Error::Dimension(format!(
            "{} ids for {} matrix rows",
            ids.len(),
            vectors.len()
        )));
    }
    for (v, id) in vectors.iter_mut().zip(ids) {
        v.id = id.to_string();
    }
    Ok(())
}
