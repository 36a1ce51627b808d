//! Binary checkpoints: magic "LNDAU1", a little-endian payload (grid
//! descriptor, time, step, mass ledgers, u samples) and a trailing CRC-32 of
//! the payload. Round-trip restore is bit-exact.

use crate::error::{Error, Result};
use crate::fields::{CartesianGrid3, Field, RadialGrid};
use crate::io::config::GridSpec;

use std::path::Path;

pub const MAGIC: &[u8; 6] = b"LNDAU1";

const KIND_RADIAL: u8 = 0;
const KIND_BOX3: u8 = 1;

/// Grid-agnostic checkpoint payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub grid: GridSpec,
    pub t: f64,
    pub step: u64,
    /// Initial mass of the run (kappa and the bounds reference it).
    pub mass0: f64,
    /// Cumulative clipped mass up to this state.
    pub clipped_mass: f64,
    pub values: Vec<f64>,
}

/// CRC-32 (IEEE 802.3, reflected, polynomial 0xEDB88320).
pub fn crc32(bytes: &[u8]) -> u32 {
    let mut crc: u32 = 0xFFFF_FFFF;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::with_capacity(64 + 8 * self.values.len());
        match &self.grid {
            GridSpec::Radial { r_max, n } => {
                payload.push(KIND_RADIAL);
                payload.extend_from_slice(&(*n as u64).to_le_bytes());
                payload.extend_from_slice(&r_max.to_le_bytes());
            }
            GridSpec::Box3 { half_width, n } => {
                payload.push(KIND_BOX3);
                payload.extend_from_slice(&(*n as u64).to_le_bytes());
                payload.extend_from_slice(&half_width.to_le_bytes());
            }
        }
        payload.extend_from_slice(&self.t.to_le_bytes());
        payload.extend_from_slice(&self.step.to_le_bytes());
        payload.extend_from_slice(&self.mass0.to_le_bytes());
        payload.extend_from_slice(&self.clipped_mass.to_le_bytes());
        for v in &self.values {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        let mut out = Vec::with_capacity(6 + payload.len() + 4);
        out.extend_from_slice(MAGIC);
        let crc = crc32(&payload);
        out.extend_from_slice(&payload);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 6 + 4 || &bytes[..6] != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let payload = &bytes[6..bytes.len() - 4];
        let stored_crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
        if crc32(payload) != stored_crc {
            return Err(Error::Checkpoint("checksum mismatch".into()));
        }
        let mut cur = payload;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(Error::Checkpoint("truncated payload".into()));
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        let kind = take(1)?[0];
        let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let extent = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let grid = match kind {
            KIND_RADIAL => GridSpec::Radial { r_max: extent, n },
            KIND_BOX3 => GridSpec::Box3 { half_width: extent, n },
            other => return Err(Error::Checkpoint(format!("unknown grid kind {other}"))),
        };
        let t = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let step = u64::from_le_bytes(take(8)?.try_into().unwrap());
        let mass0 = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let clipped_mass = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let count = match grid {
            GridSpec::Radial { n, .. } => n,
            GridSpec::Box3 { n, .. } => n * n * n,
        };
        let raw = take(8 * count)?;
        if !cur.is_empty() {
            return Err(Error::Checkpoint("trailing bytes in payload".into()));
        }
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { grid, t, step, mass0, clipped_mass, values })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }

    pub fn radial_field(&self) -> Result<Field<RadialGrid>> {
        match self.grid {
            GridSpec::Radial { r_max, n } => {
                Field::new(RadialGrid::new(r_max, n)?, self.values.clone())
            }
            _ => Err(Error::Checkpoint("checkpoint holds a box grid".into())),
        }
    }

    pub fn box_field(&self) -> Result<Field<CartesianGrid3>> {
        match self.grid {
            GridSpec::Box3 { half_width, n } => {
                Field::new(CartesianGrid3::new(half_width, n)?, self.values.clone())
            }
            _ => Err(Error::Checkpoint("checkpoint holds a radial grid".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crc32_known_vector() {
        // CRC-32 of "123456789" is 0xCBF43926.
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let ck = Checkpoint {
            grid: GridSpec::Radial { r_max: 8.0, n: 16 },
            t: 0.125,
            step: 42,
            mass0: 1.0 + 1e-13,
            clipped_mass: 3.5e-17,
            values: (0..16).map(|i| (i as f64).sin() * 1e-3).collect(),
        };
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(ck, back);
        assert_eq!(bytes, back.to_bytes());
    }

    #[test]
    fn corruption_is_detected() {
        let ck = Checkpoint {
            grid: GridSpec::Box3 { half_width: 2.0, n: 16 },
            t: 0.0,
            step: 0,
            mass0: 1.0,
            clipped_mass: 0.0,
            values: vec![0.5; 16 * 16 * 16],
        };
        let mut bytes = ck.to_bytes();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x01;
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(Error::Checkpoint(msg)) if msg.contains("checksum")
        ));
    }
}
