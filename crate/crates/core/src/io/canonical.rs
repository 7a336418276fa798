//! The canonical dataset container (`.skel`).
//!
//! ```text
//! magic        4 bytes  "SKEL"
//! version      u32      1
//! num_joints   u32
//! coord_dim    u32      2 or 3
//! num_classes  u32
//! class names  num_classes x (u32 byte length, UTF-8 bytes)
//! num_samples  u32
//! samples      num_samples x (
//!                u32 id length, UTF-8 id,
//!                u32 label, u32 frame count,
//!                frames * num_joints * coord_dim f32 coordinates,
//!                  frame-major, then joint, then coordinate)
//! checksum     32 bytes SHA-256 of every preceding byte
//! ```
//!
//! All integers and floats are little-endian.

use std::path::Path;

use super::binfmt::{open_container, Writer};
use super::dataset::{CanonicalDataset, Sample};
use crate::error::{Error, Result};
use crate::skeleton::SkeletonSequence;

pub const CANONICAL_MAGIC: &[u8; 4] = b"SKEL";
pub const CANONICAL_VERSION: u32 = 1;

pub fn encode_canonical(data: &CanonicalDataset) -> Result<Vec<u8>> {
    let mut w = Writer::default();
    w.bytes(CANONICAL_MAGIC);
    w.u32(CANONICAL_VERSION);
    w.usize(data.num_joints())?;
    w.usize(data.coord_dim())?;
    w.usize(data.num_classes())?;
    for name in data.label_names() {
        w.str(name)?;
    }
    w.usize(data.len())?;
    for s in data.samples() {
        w.str(&s.id)?;
        w.usize(s.label)?;
        w.usize(s.sequence.len())?;
        w.f32s(s.sequence.as_slice());
    }
    Ok(w.finish())
}

pub fn decode_canonical(bytes: &[u8]) -> Result<CanonicalDataset> {
    let mut r = open_container(bytes, CANONICAL_MAGIC, CANONICAL_VERSION, "canonical dataset")?;
    let num_joints = r.usize()?;
    let coord_dim = r.usize()?;
    let num_classes = r.usize()?;
    let mut names = Vec::with_capacity(num_classes.min(1 << 16));
    for _ in 0..num_classes {
        names.push(r.str()?);
    }
    let num_samples = r.usize()?;
    let mut samples = Vec::with_capacity(num_samples.min(1 << 16));
    for _ in 0..num_samples {
        let id = r.str()?;
        let label = r.usize()?;
        let frames = r.usize()?;
        let n = frames
            .checked_mul(num_joints)
            .and_then(|v| v.checked_mul(coord_dim))
            .ok_or_else(|| Error::Corrupt(format!("sample `{id}` size overflows")))?;
        let coords = r.f32s(n)?;
        let sequence = SkeletonSequence::new(num_joints, coord_dim, coords)
            .map_err(|e| Error::InvalidInput(format!("sample `{id}`: {e}")))?;
        samples.push(Sample { id, label, sequence });
    }
    if !r.is_at_end() {
        return Err(Error::Corrupt("trailing bytes after the last sample".into()));
    }
    CanonicalDataset::new(names, num_joints, coord_dim, samples)
}

pub fn save_canonical(data: &CanonicalDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_canonical(data)?).map_err(|e| Error::io(path, e))
}

/// Reads and validates a canonical dataset; nothing is returned unless the whole file is valid.
pub fn load_canonical(path: impl AsRef<Path>) -> Result<CanonicalDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_canonical(&bytes)
}
