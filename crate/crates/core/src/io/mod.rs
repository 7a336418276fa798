//! Dataset ingestion and model persistence.

mod binfmt;
mod canonical;
mod dataset;
mod shrec;
mod weights;

pub use canonical::{
    decode_canonical, encode_canonical, load_canonical, save_canonical, CANONICAL_MAGIC, CANONICAL_VERSION,
};
pub use dataset::{CanonicalDataset, Sample};
pub use shrec::{parse_shrec, read_skeleton_file, LabelMode, GESTURE_NAMES, SHREC_COORD_DIM, SHREC_JOINTS};
pub use weights::{decode_weights, encode_weights, load_weights, save_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};
