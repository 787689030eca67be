//! `HKTF` checkpoints: magic, `u32` version, `u8` n, `u8` active count,
//! `u16` size per active axis, `f64` time, `u64` step, then the field values
//! as row-major `f64`. Everything little-endian.

use std::path::Path;

use thiserror::Error;

use super::write_atomic;
use crate::field::{ScalarField, TorusGrid};

pub const MAGIC: &[u8; 4] = b"HKTF";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint: bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported checkpoint version {0} (expected {VERSION})")]
    UnsupportedVersion(u32),
    #[error("checkpoint truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("checkpoint has {found} trailing bytes")]
    Trailing { found: usize },
    #[error("checkpoint grid (n = {n}, sizes {sizes:?}) does not match the configured grid")]
    GridMismatch { n: u8, sizes: Vec<u16> },
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub n: u8,
    pub sizes: Vec<u16>,
    pub t: f64,
    pub step: u64,
    pub values: Vec<f64>,
}

impl Checkpoint {
    pub fn from_field(phi: &ScalarField, t: f64, step: u64) -> Self {
        let grid = phi.grid();
        Checkpoint {
            n: grid.n() as u8,
            sizes: grid.sizes().iter().map(|&s| s as u16).collect(),
            t,
            step,
            values: phi.values().to_vec(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 + 2 + 2 * self.sizes.len() + 16 + 8 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.n);
        out.push(self.sizes.len() as u8);
        for s in &self.sizes {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic(magic));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let n = r.take(1)?[0];
        let count = r.take(1)?[0] as usize;
        let sizes: Vec<u16> = (0..count)
            .map(|_| r.take(2).map(|b| u16::from_le_bytes(b.try_into().expect("2 bytes"))))
            .collect::<Result<_, _>>()?;
        let t = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let step = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let payload_len = sizes
            .iter()
            .try_fold(8usize, |acc, &s| acc.checked_mul(s as usize))
            .ok_or(CheckpointError::Truncated {
                expected: usize::MAX,
                found: bytes.len(),
            })?;
        let payload = r.take(payload_len)?;
        if r.pos != bytes.len() {
            return Err(CheckpointError::Trailing {
                found: bytes.len() - r.pos,
            });
        }
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Checkpoint {
            n,
            sizes,
            t,
            step,
            values,
        })
    }

    /// The stored field on `grid`, which must have the same shape.
    pub fn field(&self, grid: &TorusGrid) -> Result<ScalarField, CheckpointError> {
        let same = grid.n() == self.n as usize
            && grid.sizes().len() == self.sizes.len()
            && grid.sizes().iter().zip(&self.sizes).all(|(&a, &b)| a == b as usize);
        if !same {
            return Err(CheckpointError::GridMismatch {
                n: self.n,
                sizes: self.sizes.clone(),
            });
        }
        Ok(ScalarField::new(grid, self.values.clone()).expect("length follows from sizes"))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.saturating_add(k);
        if end > self.bytes.len() {
            return Err(CheckpointError::Truncated {
                expected: end,
                found: self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<(), CheckpointError> {
    write_atomic(path, &checkpoint.to_bytes())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Coord;

    fn sample() -> (TorusGrid, Checkpoint) {
        let grid = TorusGrid::new(2, vec![Coord::new(0, 0), Coord::new(3, 1)], vec![8, 4]).unwrap();
        let phi = ScalarField::from_fn(&grid, |x| (x[0] + 0.3).sin() * 1e-3 + x[1].cos() / 7.0);
        (grid.clone(), Checkpoint::from_field(&phi, 12.625, 4242))
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (grid, ck) = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.hktf");
        save_checkpoint(&path, &ck).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.step, 4242);
        assert_eq!(back.t.to_bits(), ck.t.to_bits());
        let a: Vec<u64> = ck.values.iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.field(&grid).unwrap().values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, 4 + 4 + 2 + 4 + 16 + 8 * 32);
    }

    #[test]
    fn corrupted_magic() {
        let (_, ck) = sample();
        let mut bytes = ck.to_bytes();
        bytes[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(CheckpointError::BadMagic(_))));
        let mut bytes = ck.to_bytes();
        bytes[4] = 2;
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(CheckpointError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn one_value_short() {
        let (_, ck) = sample();
        let bytes = ck.to_bytes();
        let cut = &bytes[..bytes.len() - 8];
        assert!(matches!(
            Checkpoint::from_bytes(cut),
            Err(CheckpointError::Truncated { .. })
        ));
    }

    #[test]
    fn grid_shape_is_checked() {
        let (_, ck) = sample();
        let other = TorusGrid::full(1, 4).unwrap();
        assert!(matches!(ck.field(&other), Err(CheckpointError::GridMismatch { .. })));
    }
}
