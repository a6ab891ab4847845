//! `LBL1` label files: ASCII `LBL1`, count (u32 LE), class count `k`
//! (u32 LE), then `count` 1-based labels as u32 LE.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LBL1";

pub fn encode(labels: &[usize], k: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * labels.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(labels.len() as u32).to_le_bytes());
    out.extend_from_slice(&(k as u32).to_le_bytes());
    for &y in labels {
        out.extend_from_slice(&(y as u32).to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<(Vec<usize>, usize)> {
    let err = |offset: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        offset: offset as u64,
        reason,
    };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(err(0, "bad magic: expected LBL1".into()));
    }
    if bytes.len() < 12 {
        return Err(err(bytes.len(), "truncated header".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let k = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = 12 + 4 * n;
    if bytes.len() < expected {
        return Err(err(bytes.len(), format!("truncated: {n} labels need {expected} bytes")));
    }
    if bytes.len() > expected {
        return Err(err(expected, "trailing bytes after labels".into()));
    }
    let labels = bytes[12..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    Ok((labels, k))
}

pub fn read(path: impl AsRef<Path>) -> Result<(Vec<usize>, usize)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

pub fn write(path: impl AsRef<Path>, labels: &[usize], k: usize) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(labels, k)).map_err(|e| Error::io(path, e))
}
