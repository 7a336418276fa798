//! Skeleton-based action recognition with a compact double-feature,
//! double-motion 1D-CNN.
//!
//! The pipeline:
//!
//! 1. [`skeleton`] holds raw joint sequences (2D or 3D).
//! 2. [`features`] resamples them to a fixed length and derives joint
//!    collection distances plus slow and fast global motion.
//! 3. [`model`] embeds the three streams, runs a temporal CNN backbone and
//!    classifies, on top of the [`autodiff`] tensor engine.
//! 4. [`train`] fits the model with Adam and evaluates it.
//! 5. [`io`] reads SHREC'17 and the canonical dataset container and stores weights.
//! 6. [`bench`] measures inference throughput.

pub mod autodiff;
pub mod bench;
pub mod cli;
pub mod error;
pub mod features;
pub mod io;
pub mod model;
pub mod skeleton;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
pub use features::{build_feature_bundle, FeatureBundle, Matrix};
pub use model::{DdNet, ModelConfig, Streams};
pub use skeleton::{JointFrame, SkeletonSequence};
