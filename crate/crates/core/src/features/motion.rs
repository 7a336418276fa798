use super::Matrix;
use crate::error::{Error, Result};
use crate::skeleton::SkeletonSequence;

/// Number of motion rows produced for a sequence of `len` frames.
///
/// Stride 1 yields `len - 1` rows. Stride 2 starts at every other frame
/// (`0, 2, 4, ...`) while a frame two steps ahead exists, which is `K/2 - 1`
/// rows for an even length `K`.
pub fn motion_rows(len: usize, stride: usize) -> usize {
    match stride {
        1 => len.saturating_sub(1),
        2 => len.saturating_sub(1) / 2,
        _ => 0,
    }
}

/// Temporal coordinate differences `S[k + stride] - S[k]`, one flattened row per start frame.
pub fn compute_motion(seq: &SkeletonSequence, stride: usize) -> Result<Matrix> {
    if stride != 1 && stride != 2 {
        return Err(Error::InvalidArgument(format!(
            "motion stride must be 1 or 2, got {stride}"
        )));
    }
    let rows = motion_rows(seq.len(), stride);
    if rows == 0 {
        return Err(Error::InvalidInput(format!(
            "{} frames are too few for stride-{stride} motion",
            seq.len()
        )));
    }
    let width = seq.frame_width();
    let mut out = Matrix::zeros(rows, width);
    for r in 0..rows {
        let start = r * stride;
        let (a, b) = (seq.frame(start), seq.frame(start + stride));
        for ((o, &next), &cur) in out.row_mut(r).iter_mut().zip(b).zip(a) {
            *o = next - cur;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_counts() {
        assert_eq!(motion_rows(32, 1), 31);
        assert_eq!(motion_rows(32, 2), 15);
        assert_eq!(motion_rows(4, 2), 1);
    }

    #[test]
    fn bad_stride() {
        let s = SkeletonSequence::new(2, 2, vec![0.0; 16]).unwrap();
        assert!(matches!(compute_motion(&s, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(compute_motion(&s, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn two_frames_have_no_fast_motion() {
        let s = SkeletonSequence::new(2, 2, vec![0.0; 8]).unwrap();
        assert!(compute_motion(&s, 2).is_err());
        assert_eq!(compute_motion(&s, 1).unwrap().rows(), 1);
    }
}
