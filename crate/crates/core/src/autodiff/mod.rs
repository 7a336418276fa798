//! A small dense-tensor engine with reverse-mode differentiation.
//!
//! The operator set is exactly what the action-recognition network needs:
//! 1D convolution, pair max-pooling, global average pooling, dense layers,
//! leaky ReLU, batch normalization, dropout, channel concatenation and a
//! softmax cross-entropy loss, plus `mul`/`sum` for building test objectives.
//!
//! Computation is recorded on a [`Graph`] (the tape). Every op appends a node;
//! nodes only remember what backward needs when at least one input requires a
//! gradient, so inference through the same API carries no saved activations.
//! The temporal axis is the row axis and channels are the last axis:
//! sequences are `[batch, time, channels]`.
//!
//! Everything is generic over [`Scalar`] so the same code runs in `f32` for
//! production and `f64` for finite-difference checks.

mod gradcheck;
mod graph;
mod kernels;
mod tensor;

pub use gradcheck::{finite_diff_check, GradCheckReport};
pub use graph::{Gradients, Graph, RunningStats, Var};
pub use tensor::Tensor;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point element type of the engine (`f32` or `f64`).
pub trait Scalar:
    num_traits::Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn of(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn of(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn of(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}
