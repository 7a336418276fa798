//! Weight files (`.ddnw`).
//!
//! ```text
//! magic      4 bytes "DDNW"
//! version    u32 = 1
//! config     u32 filters, u32 num_joints, u32 coord_dim, u32 frames,
//!            u32 num_classes, u8 stream mask (1 = jcd, 2 = slow, 4 = fast),
//!            f64 leaky_slope, f64 dropout_rate, f64 bn_epsilon, f64 bn_momentum
//! entries    u32 count, then per entry:
//!            u32 name length, UTF-8 name, u32 rank, rank x u32 dims,
//!            prod(dims) x f32 values
//! checksum   32 bytes SHA-256 of every preceding byte
//! ```
//!
//! Entry names are the model's parameter names; batch-norm running statistics
//! follow as `<layer>.running_mean` and `<layer>.running_var`.

use std::path::Path;

use indexmap::IndexMap;

use super::binfmt::{open_container, Writer};
use crate::autodiff::{RunningStats, Tensor};
use crate::error::{Error, Result};
use crate::model::{DdNet, ModelConfig, Streams};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"DDNW";
pub const WEIGHTS_VERSION: u32 = 1;

const RUNNING_MEAN: &str = ".running_mean";
const RUNNING_VAR: &str = ".running_var";

pub fn encode_weights(model: &DdNet) -> Result<Vec<u8>> {
    let c = model.config();
    let mut w = Writer::default();
    w.bytes(WEIGHTS_MAGIC);
    w.u32(WEIGHTS_VERSION);
    for v in [c.filters, c.num_joints, c.coord_dim, c.frames, c.num_classes] {
        w.usize(v)?;
    }
    w.u8(c.streams.bits());
    for v in [c.leaky_slope, c.dropout_rate, c.bn_epsilon, c.bn_momentum] {
        w.f64(v);
    }
    w.usize(model.params().len() + 2 * model.running_stats().len())?;
    let mut entry = |name: &str, shape: &[usize], data: &[f32]| -> Result<()> {
        w.str(name)?;
        w.usize(shape.len())?;
        for &d in shape {
            w.usize(d)?;
        }
        w.f32s(data);
        Ok(())
    };
    for (name, t) in model.params() {
        entry(name, t.shape(), t.data())?;
    }
    for (name, s) in model.running_stats() {
        entry(&format!("{name}{RUNNING_MEAN}"), &[s.mean.len()], &s.mean)?;
        entry(&format!("{name}{RUNNING_VAR}"), &[s.var.len()], &s.var)?;
    }
    Ok(w.finish())
}

pub fn decode_weights(bytes: &[u8]) -> Result<DdNet> {
    let mut r = open_container(bytes, WEIGHTS_MAGIC, WEIGHTS_VERSION, "weight file")?;
    let mut ints = [0usize; 5];
    for v in &mut ints {
        *v = r.usize()?;
    }
    let [filters, num_joints, coord_dim, frames, num_classes] = ints;
    let streams = Streams::from_bits(r.u8()?).ok_or_else(|| Error::Corrupt("invalid stream mask".into()))?;
    let config = ModelConfig {
        filters,
        num_joints,
        coord_dim,
        frames,
        num_classes,
        streams,
        leaky_slope: r.f64()?,
        dropout_rate: r.f64()?,
        bn_epsilon: r.f64()?,
        bn_momentum: r.f64()?,
    };
    config
        .validate()
        .map_err(|e| Error::Incompatible(format!("embedded config is invalid: {e}")))?;

    let count = r.usize()?;
    let mut params = IndexMap::new();
    let mut means = IndexMap::new();
    let mut vars = IndexMap::new();
    for _ in 0..count {
        let name = r.str()?;
        let rank = r.usize()?;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(r.usize()?);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::Corrupt(format!("entry `{name}` size overflows")))?;
        let data = r.f32s(n)?;
        if let Some(layer) = name.strip_suffix(RUNNING_MEAN) {
            means.insert(layer.to_string(), data);
        } else if let Some(layer) = name.strip_suffix(RUNNING_VAR) {
            vars.insert(layer.to_string(), data);
        } else {
            let t = Tensor::new(shape, data).map_err(|e| Error::Corrupt(format!("entry `{name}`: {e}")))?;
            params.insert(name, t);
        }
    }
    if !r.is_at_end() {
        return Err(Error::Corrupt("trailing bytes after the last entry".into()));
    }
    let mut stats = IndexMap::new();
    for (layer, mean) in means {
        let var = vars
            .swap_remove(&layer)
            .ok_or_else(|| Error::Incompatible(format!("`{layer}` has a running mean but no running variance")))?;
        stats.insert(layer, RunningStats { mean, var });
    }
    if let Some(layer) = vars.keys().next() {
        return Err(Error::Incompatible(format!("`{layer}` has a running variance but no running mean")));
    }
    DdNet::from_parts(config, params, stats)
}

pub fn save_weights(model: &DdNet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_weights(model)?).map_err(|e| Error::io(path, e))
}

/// Loads a model; the file alone determines the architecture.
pub fn load_weights(path: impl AsRef<Path>) -> Result<DdNet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes)
}
