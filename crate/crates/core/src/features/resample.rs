use super::Matrix;
use crate::error::{Error, Result};
use crate::skeleton::SkeletonSequence;

/// Linearly resamples a `T x D` series to `target_len` rows.
///
/// Output row `t` samples the input at continuous index `t (T-1) / (target_len-1)`,
/// so the first and last rows are copied exactly. Columns are independent.
pub fn resample_linear(series: &Matrix, target_len: usize) -> Result<Matrix> {
    let len = series.rows();
    if len == 0 {
        return Err(Error::InvalidInput("cannot resample an empty series".into()));
    }
    if target_len == 0 {
        return Err(Error::InvalidArgument("target length must be >= 1".into()));
    }
    if target_len == len {
        return Ok(series.clone());
    }
    let mut out = Matrix::zeros(target_len, series.cols());
    if target_len == 1 || len == 1 {
        for t in 0..target_len {
            out.row_mut(t).copy_from_slice(series.row(0));
        }
        return Ok(out);
    }
    let scale = (len - 1) as f64 / (target_len - 1) as f64;
    for t in 0..target_len {
        let pos = t as f64 * scale;
        let lo = (pos.floor() as usize).min(len - 1);
        let frac = pos - lo as f64;
        if lo == len - 1 || frac == 0.0 {
            out.row_mut(t).copy_from_slice(series.row(lo));
            continue;
        }
        let (a, b) = (series.row(lo), series.row(lo + 1));
        for ((o, &x0), &x1) in out.row_mut(t).iter_mut().zip(a).zip(b) {
            *o = (x0 as f64 + frac * (x1 as f64 - x0 as f64)) as f32;
        }
    }
    Ok(out)
}

/// Resamples the flattened joint trajectory of `seq` to exactly `frames` frames.
pub fn resample_sequence(seq: &SkeletonSequence, frames: usize) -> Result<SkeletonSequence> {
    if frames < 2 {
        return Err(Error::InvalidArgument(format!(
            "a sequence needs at least 2 frames, asked for {frames}"
        )));
    }
    if frames == seq.len() {
        return Ok(seq.clone());
    }
    let m = Matrix::new(seq.len(), seq.frame_width(), seq.as_slice().to_vec())?;
    let r = resample_linear(&m, frames)?;
    SkeletonSequence::new(seq.num_joints(), seq.coord_dim(), r.into_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint() {
        let m = Matrix::new(2, 1, vec![0.0, 2.0]).unwrap();
        assert_eq!(resample_linear(&m, 3).unwrap().as_slice(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn identity_and_single_row() {
        let m = Matrix::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(resample_linear(&m, 3).unwrap(), m);
        assert_eq!(resample_linear(&m, 1).unwrap().as_slice(), &[1.0, 2.0]);
        let one = Matrix::new(1, 2, vec![7.0, 8.0]).unwrap();
        assert_eq!(resample_linear(&one, 3).unwrap().as_slice(), &[7.0, 8.0, 7.0, 8.0, 7.0, 8.0]);
    }

    #[test]
    fn errors() {
        let m = Matrix::new(0, 2, vec![]).unwrap();
        assert!(resample_linear(&m, 3).is_err());
        let m = Matrix::new(1, 1, vec![0.0]).unwrap();
        assert!(resample_linear(&m, 0).is_err());
    }

    #[test]
    fn two_frames_to_three() {
        let s = SkeletonSequence::new(2, 2, vec![0.0, 0.0, 2.0, 2.0, 4.0, 2.0, 0.0, 6.0]).unwrap();
        let r = resample_sequence(&s, 3).unwrap();
        assert_eq!(r.frame(1), &[2.0, 1.0, 1.0, 4.0]);
    }
}
