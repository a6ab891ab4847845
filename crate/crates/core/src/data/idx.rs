//! IDX containers (the MNIST distribution format), big-endian headers.
//!
//! Images: magic `0x00000803`, count, rows, cols, then one unsigned byte per
//! pixel. Labels: magic `0x00000801`, count, then one byte per label.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Header fields of an IDX file, as reported by `idx-inspect`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdxHeader {
    pub magic: u32,
    pub kind: &'static str,
    pub count: u32,
    pub rows: Option<u32>,
    pub cols: Option<u32>,
    pub payload_bytes: u64,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn err(&self, offset: usize, reason: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            offset: offset as u64,
            reason: reason.into(),
        }
    }

    fn u32_be(&mut self, field: &str) -> Result<u32> {
        let end = self.pos + 4;
        if end > self.bytes.len() {
            return Err(self.err(
                self.bytes.len(),
                format!("truncated: file ends inside the {field} field"),
            ));
        }
        let v = u32::from_be_bytes(self.bytes[self.pos..end].try_into().unwrap());
        self.pos = end;
        Ok(v)
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let v = self.u32_be("magic")?;
        if v != expected {
            return Err(self.err(
                0,
                format!("bad magic: expected {expected:#010x}, found {v:#010x}"),
            ));
        }
        Ok(())
    }

    fn payload(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(self.err(
                self.bytes.len(),
                format!(
                    "truncated: payload needs {len} bytes from offset {}, file has {}",
                    self.pos,
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Parses an image file into an `n x (rows*cols)` matrix scaled to `[0, 1]`.
pub fn parse_images(bytes: &[u8], path: &Path) -> Result<(Matrix, u32, u32)> {
    let mut r = Reader { bytes, pos: 0, path };
    r.magic(IMAGES_MAGIC)?;
    let n = r.u32_be("image count")? as usize;
    let rows = r.u32_be("row count")?;
    let cols = r.u32_be("column count")?;
    let d = rows as usize * cols as usize;
    let pixels = r.payload(n * d)?;
    let data = pixels.iter().map(|&b| b as f64 / 255.0).collect();
    Ok((Matrix::from_parts(n, d, data), rows, cols))
}

/// Parses a label file into raw 0-based byte labels.
pub fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let mut r = Reader { bytes, pos: 0, path };
    r.magic(LABELS_MAGIC)?;
    let n = r.u32_be("label count")? as usize;
    Ok(r.payload(n)?.to_vec())
}

/// Loads an image/label IDX pair. Labels are shifted to `1..=k` where `k` is
/// the largest byte label plus one.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let (x, _, _) = parse_images(&read_file(ip)?, ip)?;
    let raw = parse_labels(&read_file(lp)?, lp)?;
    if raw.len() != x.rows() {
        return Err(Error::Parse {
            path: lp.to_path_buf(),
            offset: 4,
            reason: format!(
                "count mismatch: {} labels for {} images",
                raw.len(),
                x.rows()
            ),
        });
    }
    let k = raw.iter().copied().max().map_or(1, |m| m as usize + 1);
    let labels = raw.iter().map(|&b| b as usize + 1).collect();
    Dataset::new(x, labels, k)
}

/// Reads just the header of either IDX kind.
pub fn inspect(path: impl AsRef<Path>) -> Result<IdxHeader> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    let magic = r.u32_be("magic")?;
    let count = r.u32_be("count")?;
    let (kind, rows, cols, item) = match magic {
        IMAGES_MAGIC => {
            let rows = r.u32_be("row count")?;
            let cols = r.u32_be("column count")?;
            ("images", Some(rows), Some(cols), rows as u64 * cols as u64)
        }
        LABELS_MAGIC => ("labels", None, None, 1),
        other => {
            return Err(r.err(0, format!("bad magic: {other:#010x} is not an IDX image or label file")))
        }
    };
    let payload_bytes = count as u64 * item;
    r.payload(payload_bytes as usize)?;
    Ok(IdxHeader {
        magic,
        kind,
        count,
        rows,
        cols,
        payload_bytes,
    })
}

/// Serializes features (expected in `[0, 1]`) and labels back to IDX bytes.
pub fn encode(ds: &Dataset, rows: u32, cols: u32) -> Result<(Vec<u8>, Vec<u8>)> {
    let d = ds.features().cols();
    if rows as usize * cols as usize != d {
        return Err(Error::dim(format!("{rows}x{cols} images do not have {d} pixels")));
    }
    if ds.num_classes() > 256 {
        return Err(Error::param("IDX labels hold at most 256 classes"));
    }
    let n = ds.len() as u32;
    let mut images = Vec::with_capacity(16 + ds.len() * d);
    for v in [IMAGES_MAGIC, n, rows, cols] {
        images.extend_from_slice(&v.to_be_bytes());
    }
    images.extend(
        ds.features()
            .data()
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
    );
    let mut labels = Vec::with_capacity(8 + ds.len());
    for v in [LABELS_MAGIC, n] {
        labels.extend_from_slice(&v.to_be_bytes());
    }
    labels.extend(ds.labels().iter().map(|&y| (y - 1) as u8));
    Ok((images, labels))
}

pub fn write_idx(
    ds: &Dataset,
    rows: u32,
    cols: u32,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    let (images, labels) = encode(ds, rows, cols)?;
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    fs::write(ip, images).map_err(|e| Error::io(ip, e))?;
    fs::write(lp, labels).map_err(|e| Error::io(lp, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two 2x2 images and labels (3, 0), written out byte by byte.
    fn fixture() -> (Vec<u8>, Vec<u8>) {
        let images = vec![
            0, 0, 8, 3, // magic
            0, 0, 0, 2, // n
            0, 0, 0, 2, // rows
            0, 0, 0, 2, // cols
            0, 255, 51, 102, // image 1
            255, 255, 0, 0, // image 2
        ];
        let labels = vec![0, 0, 8, 1, 0, 0, 0, 2, 3, 0];
        (images, labels)
    }

    fn write_pair(dir: &Path, images: &[u8], labels: &[u8]) -> (std::path::PathBuf, std::path::PathBuf) {
        let ip = dir.join("img.idx");
        let lp = dir.join("lbl.idx");
        fs::write(&ip, images).unwrap();
        fs::write(&lp, labels).unwrap();
        (ip, lp)
    }

    #[test]
    fn parses_hand_built_pair() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = fixture();
        let (ip, lp) = write_pair(dir.path(), &images, &labels);
        let ds = load_idx(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.features().cols(), 4);
        assert_eq!(ds.features().row(0), &[0.0, 1.0, 0.2, 0.4]);
        assert_eq!(ds.labels(), &[4, 1]);
        assert_eq!(ds.num_classes(), 4);
    }

    #[test]
    fn truncated_and_bad_magic_report_offsets() {
        let dir = tempfile::tempdir().unwrap();
        let (mut images, labels) = fixture();
        images.truncate(22);
        let (ip, lp) = write_pair(dir.path(), &images, &labels);
        match load_idx(&ip, &lp).unwrap_err() {
            Error::Parse { offset, reason, .. } => {
                assert_eq!(offset, 22);
                assert!(reason.starts_with("truncated"));
            }
            e => panic!("unexpected {e}"),
        }

        let (mut images, labels) = fixture();
        images.truncate(10);
        let (ip, lp) = write_pair(dir.path(), &images, &labels);
        assert!(matches!(load_idx(&ip, &lp), Err(Error::Parse { offset: 10, .. })));

        let (mut images, labels) = fixture();
        images[3] = 1;
        let (ip, lp) = write_pair(dir.path(), &images, &labels);
        match load_idx(&ip, &lp).unwrap_err() {
            Error::Parse { offset, reason, .. } => {
                assert_eq!(offset, 0);
                assert!(reason.starts_with("bad magic"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn count_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let (images, _) = fixture();
        let labels = vec![0, 0, 8, 1, 0, 0, 0, 1, 3];
        let (ip, lp) = write_pair(dir.path(), &images, &labels);
        match load_idx(&ip, &lp).unwrap_err() {
            Error::Parse { reason, .. } => assert!(reason.starts_with("count mismatch")),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn encode_reproduces_the_original_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = fixture();
        let (ip, lp) = write_pair(dir.path(), &images, &labels);
        let ds = load_idx(&ip, &lp).unwrap();
        let (i2, l2) = encode(&ds, 2, 2).unwrap();
        assert_eq!(i2, images);
        assert_eq!(l2, labels);
        let h = inspect(&ip).unwrap();
        assert_eq!((h.kind, h.count, h.rows, h.payload_bytes), ("images", 2, Some(2), 8));
    }
}
