use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::skeleton::SkeletonSequence;

/// Frames kept when subsampling `len` frames at `ratio`: `ceil(ratio * len)`.
pub fn subsample_count(len: usize, ratio: f64) -> usize {
    // Guard the ceiling against products like 0.9 * 100 = 90.00000000000001.
    let raw = ratio * len as f64;
    let k = (raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize;
    k.min(len)
}

/// Keeps a uniformly random, temporally ordered subset of `ceil(ratio * L)` frames.
///
/// Deterministic for a given `seed`. `ratio == 1` returns the input unchanged.
pub fn augment_subsample(seq: &SkeletonSequence, ratio: f64, seed: u64) -> Result<SkeletonSequence> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subsample ratio must be in (0, 1], got {ratio}"
        )));
    }
    let len = seq.len();
    let keep = subsample_count(len, ratio);
    if keep < 2 {
        return Err(Error::InvalidArgument(format!(
            "ratio {ratio} keeps {keep} of {len} frames, need at least 2"
        )));
    }
    if keep == len {
        return Ok(seq.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, len, keep).into_vec();
    picked.sort_unstable();
    let mut data = Vec::with_capacity(keep * seq.frame_width());
    for i in picked {
        data.extend_from_slice(seq.frame(i));
    }
    SkeletonSequence::new(seq.num_joints(), seq.coord_dim(), data)
}
