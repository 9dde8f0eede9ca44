//! Versioned binary snapshots of a complex field.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes  "SOLCKPT\0"
//! version    u32
//! run id     u32 length + UTF-8 bytes
//! t          f64
//! dim        u32
//! per axis   f64 extent, u64 points
//! count      u64
//! samples    count × (f64 re, f64 im), row-major
//! checksum   u64, first 8 bytes of SHA-256 over everything above
//! ```

use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use soliton_core::{ComplexField, SpatialGrid};

pub const MAGIC: &[u8; 8] = b"SOLCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub run_id: String,
    pub field: ComplexField,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("unsupported checkpoint version {found} (this build reads version {VERSION})")]
    UnsupportedVersion { found: u32 },
}

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let grid = ck.field.grid();
    let mut out = Vec::with_capacity(64 + 16 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(ck.run_id.len() as u32).to_le_bytes());
    out.extend_from_slice(ck.run_id.as_bytes());
    out.extend_from_slice(&ck.field.time().to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for axis in 0..grid.dim() {
        out.extend_from_slice(&grid.extent(axis).to_le_bytes());
        out.extend_from_slice(&(grid.points_on(axis) as u64).to_le_bytes());
    }
    out.extend_from_slice(&(grid.len() as u64).to_le_bytes());
    for z in ck.field.samples() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    let sum = checksum(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(CheckpointError::Corrupt(format!("truncated while reading {what}")));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(CheckpointError::Corrupt("bad magic; not a checkpoint file".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion { found: version });
    }
    let id_len = r.u32("run id length")? as usize;
    let run_id = std::str::from_utf8(r.take(id_len, "run id")?)
        .map_err(|_| CheckpointError::Corrupt("run id is not UTF-8".into()))?
        .to_string();
    let t = r.f64("time")?;
    let dim = r.u32("dimension")? as usize;
    if !(1..=3).contains(&dim) {
        return Err(CheckpointError::Corrupt(format!("dimension {dim} out of range")));
    }
    let mut extents = Vec::with_capacity(dim);
    let mut points = Vec::with_capacity(dim);
    for _ in 0..dim {
        extents.push(r.f64("extent")?);
        points.push(r.u64("point count")? as usize);
    }
    let grid = SpatialGrid::new(extents, points)
        .map_err(|e| CheckpointError::Corrupt(format!("grid descriptor: {e}")))?;
    let count = r.u64("sample count")? as usize;
    if count != grid.len() {
        return Err(CheckpointError::Corrupt(format!(
            "sample count {count} does not match the grid ({})",
            grid.len()
        )));
    }
    let payload = r.take(count.checked_mul(16).unwrap_or(usize::MAX), "samples")?;
    let body_end = r.pos;
    let stored = r.u64("checksum")?;
    if r.pos != bytes.len() {
        return Err(CheckpointError::Corrupt(format!(
            "{} trailing bytes after the checksum",
            bytes.len() - r.pos
        )));
    }
    if checksum(&bytes[..body_end]) != stored {
        return Err(CheckpointError::Corrupt("checksum mismatch".into()));
    }
    let samples = payload
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    let field = ComplexField::new(grid, samples, t)
        .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    Ok(Checkpoint { run_id, field })
}

pub fn save(ck: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, encode(ck)).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let grid = SpatialGrid::new(vec![10.0, 4.0], vec![16, 32]).unwrap();
        let field = ComplexField::from_fn(grid, |x| Complex64::new(x[0].sin(), x[1] * 1e-300)).with_time(1.25);
        Checkpoint {
            run_id: "abc".into(),
            field,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = sample();
        let back = decode(&encode(&ck)).unwrap();
        assert_eq!(back, ck);
    }

    #[test]
    fn flipped_bit_is_caught() {
        let mut bytes = encode(&sample());
        let n = bytes.len();
        bytes[n / 2] ^= 1;
        assert!(matches!(decode(&bytes), Err(CheckpointError::Corrupt(m)) if m.contains("checksum")));
    }

    #[test]
    fn every_truncation_is_caught() {
        let bytes = encode(&sample());
        for cut in [0, 7, 12, 30, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode(&bytes[..cut]), Err(CheckpointError::Corrupt(_))), "cut {cut}");
        }
    }
}
