//! The double-feature, double-motion network.
//!
//! ```text
//! jcd  [K,   N(N-1)/2] -> embed (pooled)   -> [K/2, f] -+
//! slow [K,   N*d]      -> embed (pooled)   -> [K/2, f] -+-> concat [K/2, 3f]
//! fast [K/2, N*d]      -> embed (unpooled) -> [K/2, f] -+
//!
//! concat -> 2 x conv(3, 2f) -> pool -> 2 x conv(3, 4f) -> pool -> 2 x conv(3, 8f)
//!        -> global average pool -> dropout -> fc(128) -> fc(classes)
//! ```
//!
//! An embedding is `conv(1, 2f) -> conv(3, f) -> conv(1, f)`. Every conv is
//! followed by batch norm and leaky ReLU.

mod config;
mod layout;

pub use config::{ModelConfig, Stream, Streams, HIDDEN_UNITS};
pub use layout::param_count;

use std::sync::Arc;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Graph, RunningStats, Scalar, Tensor, Var};
use crate::error::{Error, Result};
use crate::features::FeatureBundle;
use layout::{Init, Layout, BACKBONE_BLOCKS, EMBED_LAYERS};

/// Alias for the production (32-bit) network.
pub type DdNetModel = DdNet<f32>;

/// Network weights, batch-norm running statistics and the config fixing their shapes.
#[derive(Debug, Clone)]
pub struct DdNet<T: Scalar = f32> {
    config: ModelConfig,
    params: IndexMap<String, Arc<Tensor<T>>>,
    stats: IndexMap<String, RunningStats<T>>,
}

/// Forward-pass mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, dropout with the given mask seed.
    Train { dropout_seed: u64 },
    /// Running statistics, no dropout.
    Infer,
}

/// Graph handles for every parameter, in parameter order.
#[derive(Debug, Clone)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    /// Wraps existing handles, one per parameter in parameter order. Lets a
    /// caller run the network on parameter values other than the model's own.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        Self { vars }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Batched network inputs: `jcd [B, K, J]`, `slow [B, K, D]`, `fast [B, K/2, D]`.
#[derive(Debug, Clone)]
pub struct Inputs<T = f32> {
    pub jcd: Tensor<T>,
    pub slow: Tensor<T>,
    pub fast: Tensor<T>,
}

impl<T: Scalar> Inputs<T> {
    pub fn batch(&self) -> usize {
        self.jcd.shape()[0]
    }

    pub fn get(&self, s: Stream) -> &Tensor<T> {
        match s {
            Stream::Jcd => &self.jcd,
            Stream::Slow => &self.slow,
            Stream::Fast => &self.fast,
        }
    }

    pub fn cast<U: Scalar>(&self) -> Inputs<U> {
        Inputs {
            jcd: self.jcd.cast(),
            slow: self.slow.cast(),
            fast: self.fast.cast(),
        }
    }
}

impl Inputs<f32> {
    /// Stacks feature bundles into batch tensors, checking them against `cfg`.
    pub fn from_bundles<'a>(bundles: impl IntoIterator<Item = &'a FeatureBundle>, cfg: &ModelConfig) -> Result<Self> {
        let (k, j, d) = (cfg.frames, cfg.jcd_dim(), cfg.motion_dim());
        let (mut jcd, mut slow, mut fast) = (Vec::new(), Vec::new(), Vec::new());
        let mut batch = 0;
        for b in bundles {
            if b.jcd.shape() != (k, j) || b.slow.shape() != (k, d) || b.fast.shape() != (k / 2, d) {
                return Err(Error::Shape(format!(
                    "bundle shapes {:?}/{:?}/{:?} do not match config ({k}, {j}) / ({k}, {d}) / ({}, {d})",
                    b.jcd.shape(),
                    b.slow.shape(),
                    b.fast.shape(),
                    k / 2
                )));
            }
            jcd.extend_from_slice(b.jcd.as_slice());
            slow.extend_from_slice(b.slow.as_slice());
            fast.extend_from_slice(b.fast.as_slice());
            batch += 1;
        }
        if batch == 0 {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        Ok(Self {
            jcd: Tensor::new(vec![batch, k, j], jcd)?,
            slow: Tensor::new(vec![batch, k, d], slow)?,
            fast: Tensor::new(vec![batch, k / 2, d], fast)?,
        })
    }
}

/// Graph handles produced by a forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: Var,
    /// Embedding output of each enabled stream, `[B, K/2, filters]`.
    pub embeddings: Vec<(Stream, Var)>,
    /// Concatenated embeddings, `[B, K/2, streams * filters]`.
    pub concat: Var,
}

impl DdNet<f32> {
    /// Glorot-uniform weights, zero biases and shifts, unit scales. Deterministic per seed.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = IndexMap::with_capacity(layout.params.len());
        for spec in layout.params {
            let n: usize = spec.shape.iter().product();
            let data = match spec.init {
                Init::Zeros => vec![0.0; n],
                Init::Ones => vec![1.0; n],
                Init::Glorot { fan_in, fan_out } => {
                    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    (0..n).map(|_| rng.gen_range(-limit..limit) as f32).collect()
                }
            };
            params.insert(spec.name, Arc::new(Tensor::new(spec.shape, data)?));
        }
        let stats = layout
            .norms
            .into_iter()
            .map(|(name, ch)| (name, RunningStats::new(ch)))
            .collect();
        Ok(Self { config, params, stats })
    }
}

impl<T: Scalar> DdNet<T> {
    /// Assembles a network from stored tensors, checking names and shapes against `config`.
    pub fn from_parts(
        config: ModelConfig,
        mut params: IndexMap<String, Tensor<T>>,
        mut stats: IndexMap<String, RunningStats<T>>,
    ) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut ordered = IndexMap::with_capacity(layout.params.len());
        for spec in &layout.params {
            let t = params
                .swap_remove(&spec.name)
                .ok_or_else(|| Error::Incompatible(format!("missing parameter `{}`", spec.name)))?;
            if t.shape() != spec.shape.as_slice() {
                return Err(Error::Incompatible(format!(
                    "parameter `{}` has shape {:?}, config implies {:?}",
                    spec.name,
                    t.shape(),
                    spec.shape
                )));
            }
            ordered.insert(spec.name.clone(), Arc::new(t));
        }
        if let Some(extra) = params.keys().next() {
            return Err(Error::Incompatible(format!("unexpected parameter `{extra}`")));
        }
        let mut ordered_stats = IndexMap::with_capacity(layout.norms.len());
        for (name, ch) in &layout.norms {
            let s = stats
                .swap_remove(name)
                .ok_or_else(|| Error::Incompatible(format!("missing running stats for `{name}`")))?;
            if s.mean.len() != *ch || s.var.len() != *ch {
                return Err(Error::Incompatible(format!("running stats for `{name}` are not {ch} wide")));
            }
            ordered_stats.insert(name.clone(), s);
        }
        if let Some(extra) = stats.keys().next() {
            return Err(Error::Incompatible(format!("unexpected running stats `{extra}`")));
        }
        Ok(Self {
            config,
            params: ordered,
            stats: ordered_stats,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn num_parameters(&self) -> usize {
        self.params.values().map(|t| t.len()).sum()
    }

    pub fn params(&self) -> impl ExactSizeIterator<Item = (&str, &Tensor<T>)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v.as_ref()))
    }

    /// Mutable parameter access, in parameter order.
    pub fn params_mut(&mut self) -> impl ExactSizeIterator<Item = (&str, &mut Tensor<T>)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), Arc::make_mut(v)))
    }

    pub fn param(&self, name: &str) -> Option<&Tensor<T>> {
        self.params.get(name).map(Arc::as_ref)
    }

    pub fn running_stats(&self) -> impl ExactSizeIterator<Item = (&str, &RunningStats<T>)> {
        self.stats.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn cast<U: Scalar>(&self) -> DdNet<U> {
        DdNet {
            config: self.config.clone(),
            params: self
                .params
                .iter()
                .map(|(k, v)| (k.clone(), Arc::new(v.cast())))
                .collect(),
            stats: self.stats.iter().map(|(k, v)| (k.clone(), v.cast())).collect(),
        }
    }

    /// Places every parameter on `g` (sharing storage).
    pub fn bind(&self, g: &mut Graph<T>, requires_grad: bool) -> Bound {
        Bound {
            vars: self
                .params
                .values()
                .map(|t| g.leaf_shared(Arc::clone(t), requires_grad))
                .collect(),
        }
    }

    /// Runs the network. Train mode updates the batch-norm running statistics.
    pub fn forward(&mut self, g: &mut Graph<T>, bound: &Bound, inputs: &Inputs<T>, mode: Mode) -> Result<Forward> {
        let norm = match mode {
            Mode::Train { .. } => Norm::Train {
                stats: Some(&mut self.stats),
            },
            Mode::Infer => Norm::Infer { stats: &self.stats },
        };
        let dropout = match mode {
            Mode::Train { dropout_seed } => Some(dropout_seed),
            Mode::Infer => None,
        };
        Ctx::new(&self.config, &self.params, bound, norm)?.network(g, inputs, dropout)
    }

    /// Train-mode forward that leaves the running statistics untouched.
    pub fn forward_train_frozen(&self, g: &mut Graph<T>, bound: &Bound, inputs: &Inputs<T>, dropout_seed: u64) -> Result<Forward> {
        Ctx::new(&self.config, &self.params, bound, Norm::Train { stats: None })?.network(g, inputs, Some(dropout_seed))
    }

    /// Inference-mode forward; takes `&self` so it can run concurrently.
    pub fn forward_infer(&self, g: &mut Graph<T>, bound: &Bound, inputs: &Inputs<T>) -> Result<Forward> {
        Ctx::new(&self.config, &self.params, bound, Norm::Infer { stats: &self.stats })?.network(g, inputs, None)
    }

    /// Applies one embedding branch in inference mode. `x` is `[B, T, D]`
    /// with `T = K` for the pooled streams and `T = K/2` for the fast stream.
    pub fn embed_stream(&self, g: &mut Graph<T>, bound: &Bound, stream: Stream, x: Var) -> Result<Var> {
        Ctx::new(&self.config, &self.params, bound, Norm::Infer { stats: &self.stats })?.embed(g, stream, x)
    }

    /// Inference logits `[B, classes]` without recording gradients.
    pub fn logits(&self, inputs: &Inputs<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false);
        let out = self.forward_infer(&mut g, &bound, inputs)?;
        Ok(g.value(out.logits).clone())
    }
}

impl DdNet<f32> {
    /// Most likely class (ties to the lowest id) and the softmax distribution.
    pub fn predict(&self, bundle: &FeatureBundle) -> Result<(usize, Vec<f32>)> {
        let inputs = Inputs::from_bundles([bundle], &self.config)?;
        let logits = self.logits(&inputs)?;
        let probs = softmax(logits.data());
        Ok((argmax(&probs), probs))
    }

    /// Predicted class of every row of `inputs`.
    pub fn predict_classes(&self, inputs: &Inputs<f32>) -> Result<Vec<usize>> {
        let logits = self.logits(inputs)?;
        Ok(logits.data().chunks_exact(self.config.num_classes).map(argmax).collect())
    }
}

pub fn softmax(logits: &[f32]) -> Vec<f32> {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f64> = logits.iter().map(|&v| ((v - max) as f64).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|&e| (e / total) as f32).collect()
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

enum Norm<'a, T: Scalar> {
    Train {
        stats: Option<&'a mut IndexMap<String, RunningStats<T>>>,
    },
    Infer {
        stats: &'a IndexMap<String, RunningStats<T>>,
    },
}

struct Ctx<'a, T: Scalar> {
    cfg: &'a ModelConfig,
    params: &'a IndexMap<String, Arc<Tensor<T>>>,
    bound: &'a Bound,
    norm: Norm<'a, T>,
}

impl<'a, T: Scalar> Ctx<'a, T> {
    fn new(
        cfg: &'a ModelConfig,
        params: &'a IndexMap<String, Arc<Tensor<T>>>,
        bound: &'a Bound,
        norm: Norm<'a, T>,
    ) -> Result<Self> {
        if bound.vars.len() != params.len() {
            return Err(Error::Shape(format!(
                "bound {} parameters, model has {}",
                bound.vars.len(),
                params.len()
            )));
        }
        Ok(Self {
            cfg,
            params,
            bound,
            norm,
        })
    }

    fn var(&self, name: &str) -> Var {
        let i = self
            .params
            .get_index_of(name)
            .unwrap_or_else(|| panic!("layout has no parameter `{name}`"));
        self.bound.vars[i]
    }

    fn conv_norm_act(&mut self, g: &mut Graph<T>, x: Var, conv: &str, norm: &str) -> Result<Var> {
        let y = g.conv1d(x, self.var(&format!("{conv}.w")), None)?;
        let gamma = self.var(&format!("{norm}.gamma"));
        let beta = self.var(&format!("{norm}.beta"));
        let eps = T::of(self.cfg.bn_epsilon);
        let y = match &mut self.norm {
            Norm::Train { stats } => {
                let momentum = T::of(self.cfg.bn_momentum);
                let update = stats.as_deref_mut().map(|s| (s.get_mut(norm).expect("stats follow layout"), momentum));
                g.batch_norm_train(y, gamma, beta, eps, update)?
            }
            Norm::Infer { stats } => g.batch_norm_infer(y, gamma, beta, &stats[norm], eps)?,
        };
        Ok(g.leaky_relu(y, T::of(self.cfg.leaky_slope)))
    }

    fn embed(&mut self, g: &mut Graph<T>, stream: Stream, x: Var) -> Result<Var> {
        if !self.cfg.streams.contains(stream) {
            return Err(Error::Config(format!("stream {stream:?} is disabled in this model")));
        }
        let k = self.cfg.frames;
        let want_t = if stream.pooled() { k } else { k / 2 };
        let want = [g.value(x).shape()[0], want_t, self.cfg.input_dim(stream)];
        if g.value(x).shape() != want {
            return Err(Error::Shape(format!(
                "{stream:?} stream input {:?}, expected {want:?}",
                g.value(x).shape()
            )));
        }
        let p = stream.prefix();
        let mut h = x;
        for (i, (conv, _)) in EMBED_LAYERS.iter().enumerate() {
            h = self.conv_norm_act(g, h, &format!("{p}.{conv}"), &format!("{p}.bn{}", i + 1))?;
        }
        if stream.pooled() {
            h = g.maxpool1d(h)?;
        }
        Ok(h)
    }

    fn network(mut self, g: &mut Graph<T>, inputs: &Inputs<T>, dropout: Option<u64>) -> Result<Forward> {
        let mut embeddings = Vec::with_capacity(3);
        for s in self.cfg.streams.enabled() {
            let x = g.constant(inputs.get(s).clone());
            embeddings.push((s, self.embed(g, s, x)?));
        }
        let parts: Vec<Var> = embeddings.iter().map(|e| e.1).collect();
        let concat = g.concat_channels(&parts)?;

        let mut h = concat;
        for block in 1..=BACKBONE_BLOCKS {
            for j in 1..=2 {
                let name = format!("backbone.block{block}");
                h = self.conv_norm_act(g, h, &format!("{name}.conv{j}"), &format!("{name}.bn{j}"))?;
            }
            if block < BACKBONE_BLOCKS {
                h = g.maxpool1d(h)?;
            }
        }
        h = g.global_avg_pool(h)?;
        if let Some(seed) = dropout {
            h = g.dropout(h, self.cfg.dropout_rate, seed)?;
        }
        h = g.dense(h, self.var("head.fc1.w"), self.var("head.fc1.b"))?;
        h = g.leaky_relu(h, T::of(self.cfg.leaky_slope));
        let logits = g.dense(h, self.var("head.fc2.w"), self.var("head.fc2.b"))?;
        Ok(Forward {
            logits,
            embeddings,
            concat,
        })
    }
}
