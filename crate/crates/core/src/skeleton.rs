//! Skeleton containers: a single frame of joints and an ordered sequence of frames.
//!
//! Coordinates are stored flat, joint-major then coordinate-major, so a frame
//! of `N` joints in `d` dimensions is `[x1, y1, (z1), x2, y2, (z2), ...]`.

use crate::error::{Error, Result};

/// One frame: `N >= 2` joints sharing a coordinate dimensionality of 2 or 3.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFrame {
    coord_dim: usize,
    coords: Vec<f32>,
}

impl JointFrame {
    /// Builds a frame from per-joint coordinate vectors.
    pub fn new<J: AsRef<[f32]>>(joints: &[J]) -> Result<Self> {
        let Some(first) = joints.first() else {
            return Err(Error::InvalidInput("frame has no joints".into()));
        };
        let coord_dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(joints.len() * coord_dim);
        for (i, j) in joints.iter().enumerate() {
            let j = j.as_ref();
            if j.len() != coord_dim {
                return Err(Error::InvalidInput(format!(
                    "joint {i} has {} coordinates, joint 0 has {coord_dim}",
                    j.len()
                )));
            }
            coords.extend_from_slice(j);
        }
        Self::from_flat(coord_dim, coords)
    }

    pub fn from_flat(coord_dim: usize, coords: Vec<f32>) -> Result<Self> {
        check_coord_dim(coord_dim)?;
        if coords.len() % coord_dim != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates is not a multiple of coord_dim {coord_dim}",
                coords.len()
            )));
        }
        if coords.len() / coord_dim < 2 {
            return Err(Error::InvalidInput("a frame needs at least 2 joints".into()));
        }
        check_finite(&coords)?;
        Ok(Self { coord_dim, coords })
    }

    pub fn num_joints(&self) -> usize {
        self.coords.len() / self.coord_dim
    }

    pub fn coord_dim(&self) -> usize {
        self.coord_dim
    }

    pub fn coords(&self) -> &[f32] {
        &self.coords
    }

    pub fn joint(&self, i: usize) -> &[f32] {
        &self.coords[i * self.coord_dim..(i + 1) * self.coord_dim]
    }
}

/// An ordered sequence of `L >= 2` frames with a fixed joint count and dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    num_joints: usize,
    coord_dim: usize,
    data: Vec<f32>,
}

impl SkeletonSequence {
    /// Builds a sequence from flat row-major data of shape `L x N x d`.
    pub fn new(num_joints: usize, coord_dim: usize, data: Vec<f32>) -> Result<Self> {
        check_coord_dim(coord_dim)?;
        if num_joints < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 joints, got {num_joints}"
            )));
        }
        let width = num_joints * coord_dim;
        if data.len() % width != 0 {
            return Err(Error::InvalidInput(format!(
                "{} values do not form whole frames of {num_joints}x{coord_dim}",
                data.len()
            )));
        }
        if data.len() / width < 2 {
            return Err(Error::InvalidInput(format!(
                "sequence needs at least 2 frames, got {}",
                data.len() / width
            )));
        }
        check_finite(&data)?;
        Ok(Self {
            num_joints,
            coord_dim,
            data,
        })
    }

    pub fn from_frames(frames: &[JointFrame]) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::InvalidInput("sequence has no frames".into()));
        };
        let (n, d) = (first.num_joints(), first.coord_dim());
        let mut data = Vec::with_capacity(frames.len() * n * d);
        for (i, f) in frames.iter().enumerate() {
            if f.num_joints() != n || f.coord_dim() != d {
                return Err(Error::InvalidInput(format!(
                    "frame {i} is {}x{}, frame 0 is {n}x{d}",
                    f.num_joints(),
                    f.coord_dim()
                )));
            }
            data.extend_from_slice(f.coords());
        }
        Self::new(n, d, data)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.frame_width()
    }

    /// Always false for a constructed sequence; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn num_joints(&self) -> usize {
        self.num_joints
    }

    pub fn coord_dim(&self) -> usize {
        self.coord_dim
    }

    /// Number of scalars per frame, `N * d`.
    pub fn frame_width(&self) -> usize {
        self.num_joints * self.coord_dim
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        let w = self.frame_width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.frame_width())
    }

    pub fn joint_frame(&self, i: usize) -> JointFrame {
        JointFrame {
            coord_dim: self.coord_dim,
            coords: self.frame(i).to_vec(),
        }
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// Applies `f` to every joint position (a `coord_dim` slice) in place.
    pub fn map_joints(&self, mut f: impl FnMut(&mut [f32])) -> Result<Self> {
        let mut data = self.data.clone();
        for joint in data.chunks_exact_mut(self.coord_dim) {
            f(joint);
        }
        Self::new(self.num_joints, self.coord_dim, data)
    }
}

fn check_coord_dim(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("coord_dim must be 2 or 3, got {d}")))
    }
}

fn check_finite(values: &[f32]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!(
            "non-finite coordinate at flat index {i}"
        ))),
        None => Ok(()),
    }
}
