//! EMB1, a minimal binary interchange format for embedding matrices.
//!
//! Layout: the ASCII magic `EMB1`, a little-endian u32 row count, a
//! little-endian u32 dimension, then `count * dim` little-endian f32 values
//! in row-major order. Labels travel separately as a single-column CSV of
//! integers, one row per embedding.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EMB1";

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), reason: reason.into() }
}

/// Writes a matrix (rows = embeddings) as EMB1. Values are stored as f32.
pub fn write_embeddings(path: impl AsRef<Path>, matrix: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let (n, d) = (matrix.nrows(), matrix.ncols());
    if n == 0 || d == 0 {
        return Err(format_err(path, "refusing to write an empty embedding matrix"));
    }
    if n > u32::MAX as usize || d > u32::MAX as usize {
        return Err(format_err(path, "matrix too large for EMB1 header"));
    }
    let mut buf = Vec::with_capacity(12 + n * d * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(d as u32).to_le_bytes());
    for i in 0..n {
        for j in 0..d {
            buf.extend_from_slice(&(matrix[(i, j)] as f32).to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Reads an EMB1 file into an f64 matrix.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 12 {
        return Err(format_err(path, format!("header needs 12 bytes, file has {}", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(format_err(path, format!("bad magic {:?}, expected {MAGIC:?}", &bytes[0..4])));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if n == 0 || d == 0 {
        return Err(format_err(path, format!("degenerate shape {n} x {d}")));
    }
    let expected = 12 + n * d * 4;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!("truncated or padded: expected {expected} bytes for {n} x {d}, got {}", bytes.len()),
        ));
    }
    let mut matrix = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            let off = 12 + (i * d + j) * 4;
            let v = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            matrix[(i, j)] = v as f64;
        }
    }
    Ok(matrix)
}

/// Writes class labels as a single-column CSV of integers.
pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 4);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a single-column CSV of integer labels.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let v: usize = trimmed
            .parse()
            .map_err(|_| format_err(path, format!("line {}: not an integer: {trimmed:?}", lineno + 1)))?;
        labels.push(v);
    }
    if labels.is_empty() {
        return Err(format_err(path, "no labels found"));
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless_for_f32_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.emb1");
        // values chosen to be exactly representable in f32
        let m = DMatrix::from_fn(7, 3, |i, j| {
            f32::from_bits(0x3f80_0000 + (i * 3 + j) as u32 * 12345) as f64
        });
        write_embeddings(&path, &m).unwrap();
        let back = read_embeddings(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn header_is_as_documented() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.emb1");
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        write_embeddings(&path, &m).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"EMB1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 12 + 16);
        assert_eq!(f32::from_le_bytes(bytes[12..16].try_into().unwrap()), 1.0);
        assert_eq!(f32::from_le_bytes(bytes[24..28].try_into().unwrap()), 4.0);
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();

        let bad_magic = dir.path().join("bad_magic.emb1");
        fs::write(&bad_magic, b"NOPE\x01\x00\x00\x00\x01\x00\x00\x00\x00\x00\x80\x3f").unwrap();
        let err = read_embeddings(&bad_magic).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");

        let truncated = dir.path().join("trunc.emb1");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"EMB1");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&[0u8; 8]); // 8 of the 24 payload bytes
        fs::write(&truncated, &bytes).unwrap();
        let err = read_embeddings(&truncated).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 36 bytes") && msg.contains("got 20"), "{msg}");

        let short = dir.path().join("short.emb1");
        fs::write(&short, b"EMB1\x01").unwrap();
        assert!(read_embeddings(&short).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        let labels = vec![0usize, 3, 1, 1, 9];
        write_labels(&path, &labels).unwrap();
        assert_eq!(read_labels(&path).unwrap(), labels);

        fs::write(&path, "1\nx\n").unwrap();
        assert!(read_labels(&path).is_err());
    }
}
