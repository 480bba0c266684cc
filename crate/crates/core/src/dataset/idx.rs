//! The big-endian idx container used by the MNIST distribution.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn header(bytes: &[u8], words: usize) -> Result<Vec<u32>> {
    if bytes.len() < words * 4 {
        return Err(Error::Truncated {
            expected: words * 4,
            actual: bytes.len(),
        });
    }
    Ok(bytes[..words * 4]
        .chunks_exact(4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

fn check_magic(bytes: &[u8], expected: u32, kind: &str) -> Result<()> {
    let magic = header(bytes, 1)?[0];
    if magic != expected {
        return Err(Error::Format(format!(
            "bad idx {kind} magic 0x{magic:08x}, expected 0x{expected:08x}"
        )));
    }
    Ok(())
}

fn payload(bytes: &[u8], offset: usize, len: usize) -> Result<&[u8]> {
    let expected = offset + len;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    Ok(&bytes[offset..expected])
}

/// Loads an unsigned-byte rank-3 idx file. Pixels map to reals in `[0, 255]`
/// without rescaling, each image flattened row-major.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Dataset> {
    let bytes = read_file(path.as_ref())?;
    check_magic(&bytes, IMAGES_MAGIC, "image")?;
    let head = header(&bytes, 4)?;
    let (n, rows, cols) = (head[1] as usize, head[2] as usize, head[3] as usize);
    let d = rows * cols;
    let pixels = payload(&bytes, 16, n * d)?;
    Dataset::new(pixels.iter().map(|&b| f64::from(b)).collect(), n, d)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u32>> {
    let bytes = read_file(path.as_ref())?;
    check_magic(&bytes, LABELS_MAGIC, "label")?;
    let head = header(&bytes, 2)?;
    let n = head[1] as usize;
    if n == 0 {
        return Err(Error::Format("idx label file holds no labels".into()));
    }
    Ok(payload(&bytes, 8, n)?.iter().map(|&b| u32::from(b)).collect())
}

pub fn write_idx_images(path: impl AsRef<Path>, rows: usize, cols: usize, images: &[u8]) -> Result<()> {
    let d = rows * cols;
    if d == 0 || images.len() % d != 0 {
        return Err(Error::invalid("image buffer is not a whole number of images"));
    }
    let mut out = Vec::with_capacity(16 + images.len());
    for word in [IMAGES_MAGIC, (images.len() / d) as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    out.extend_from_slice(images);
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_single_image() {
        let f = tempfile::NamedTempFile::new().unwrap();
        write_idx_images(f.path(), 2, 2, &[0, 1, 2, 255]).unwrap();
        let ds = load_idx_images(f.path()).unwrap();
        assert_eq!((ds.len(), ds.dim()), (1, 4));
        assert_eq!(ds.point(0), &[0.0, 1.0, 2.0, 255.0]);
        assert!(ds.labels().is_none());
    }

    #[test]
    fn magic_matches_published_header_bytes() {
        // Leading bytes of the published train-images file.
        let f = tempfile::NamedTempFile::new().unwrap();
        write_idx_images(f.path(), 28, 28, &[0u8; 784]).unwrap();
        let bytes = std::fs::read(f.path()).unwrap();
        assert_eq!(&bytes[..4], &[0x00, 0x00, 0x08, 0x03]);
        assert_eq!(&bytes[8..16], &[0, 0, 0, 28, 0, 0, 0, 28]);
    }

    #[test]
    fn wrong_magic_is_format_error() {
        let f = tempfile::NamedTempFile::new().unwrap();
        write_idx_labels(f.path(), &[1, 2]).unwrap();
        assert!(matches!(load_idx_images(f.path()), Err(Error::Format(_))));
        let g = tempfile::NamedTempFile::new().unwrap();
        write_idx_images(g.path(), 1, 1, &[3]).unwrap();
        assert!(matches!(load_idx_labels(g.path()), Err(Error::Format(_))));
    }

    #[test]
    fn truncation_reports_byte_counts() {
        let f = tempfile::NamedTempFile::new().unwrap();
        write_idx_images(f.path(), 2, 2, &[0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        let bytes = std::fs::read(f.path()).unwrap();
        std::fs::write(f.path(), &bytes[..bytes.len() - 3]).unwrap();
        match load_idx_images(f.path()) {
            Err(Error::Truncated { expected, actual }) => assert_eq!((expected, actual), (24, 21)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn labels_round_trip_and_empty_rejected() {
        let f = tempfile::NamedTempFile::new().unwrap();
        write_idx_labels(f.path(), &[5, 0, 4, 1, 9]).unwrap();
        assert_eq!(load_idx_labels(f.path()).unwrap(), vec![5, 0, 4, 1, 9]);
        write_idx_labels(f.path(), &[]).unwrap();
        assert!(load_idx_labels(f.path()).is_err());
    }
}
