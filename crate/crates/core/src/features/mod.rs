//! Per-frame input features: joint collection distances and two-scale motion.
//!
//! A raw sequence of arbitrary length is resampled to `K` frames, then turned
//! into a [`FeatureBundle`] with three row-major matrices:
//!
//! | stream | shape              |
//! |--------|--------------------|
//! | jcd    | `K x N(N-1)/2`     |
//! | slow   | `K x N*d`          |
//! | fast   | `K/2 x N*d`        |

mod augment;
mod jcd;
mod motion;
mod resample;

pub use augment::{augment_subsample, subsample_count};
pub use jcd::{compute_jcd, jcd_dim, jcd_into};
pub use motion::{compute_motion, motion_rows};
pub use resample::{resample_linear, resample_sequence};

use crate::error::{Error, Result};
use crate::skeleton::SkeletonSequence;

/// Default temporal length every sequence is resampled to.
pub const DEFAULT_FRAMES: usize = 32;

/// Dense row-major `rows x cols` matrix of features.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }
}

/// The three model inputs computed from one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub jcd: Matrix,
    pub slow: Matrix,
    pub fast: Matrix,
}

impl FeatureBundle {
    /// Temporal length `K` of the jcd and slow streams.
    pub fn frames(&self) -> usize {
        self.jcd.rows()
    }
}

/// Resamples `seq` to `frames` frames and computes all three feature streams.
pub fn build_feature_bundle(seq: &SkeletonSequence, frames: usize) -> Result<FeatureBundle> {
    if frames < 4 || frames % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "frame count must be even and >= 4, got {frames}"
        )));
    }
    let seq = resample_sequence(seq, frames)?;

    let width = jcd_dim(seq.num_joints());
    let mut jcd = Matrix::zeros(frames, width);
    for (k, frame) in seq.frames().enumerate() {
        jcd_into(frame, seq.coord_dim(), jcd.row_mut(k));
    }

    let slow = resample_linear(&compute_motion(&seq, 1)?, frames)?;
    let fast = resample_linear(&compute_motion(&seq, 2)?, frames / 2)?;
    Ok(FeatureBundle { jcd, slow, fast })
}
