use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernels::{self, ConvDims};
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Graph`]. Only meaningful for the graph that created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Exponential moving statistics of a batch-norm layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats<T = f32> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Scalar> RunningStats<T> {
    /// Mean 0 and variance 1 for every channel.
    pub fn new(channels: usize) -> Self {
        Self {
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    pub fn cast<U: Scalar>(&self) -> RunningStats<U> {
        RunningStats {
            mean: self.mean.iter().map(|v| U::of(v.as_f64())).collect(),
            var: self.var.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

enum Op<T> {
    Leaf,
    Conv1d {
        x: Var,
        w: Var,
        b: Option<Var>,
        dims: ConvDims,
    },
    MaxPool {
        x: Var,
        arg: Vec<u32>,
    },
    GlobalAvgPool {
        x: Var,
        time: usize,
    },
    Dense {
        x: Var,
        w: Var,
        b: Var,
        c_in: usize,
        c_out: usize,
    },
    LeakyRelu {
        x: Var,
        slope: T,
    },
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<T>,
        inv_std: Vec<T>,
        train: bool,
    },
    Concat {
        parts: Vec<(Var, usize)>,
    },
    Dropout {
        x: Var,
        mask: Vec<T>,
    },
    SoftmaxCrossEntropy {
        logits: Var,
        probs: Vec<T>,
        labels: Vec<usize>,
    },
    Mul {
        a: Var,
        b: Var,
    },
    Sum {
        x: Var,
    },
}

struct Node<T> {
    value: Arc<Tensor<T>>,
    op: Op<T>,
    requires_grad: bool,
}

/// Append-only tape of tensor operations.
///
/// Nodes are stored in creation order, which is a topological order, and
/// [`Graph::backward`] walks them in reverse. A graph is single-threaded;
/// build one per thread for concurrent work.
pub struct Graph<T = f32> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds an input tensor. Gradients are computed for it iff `requires_grad`.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.leaf_shared(Arc::new(value), requires_grad)
    }

    /// Like [`Graph::leaf`] but shares storage with the caller (no copy).
    pub fn leaf_shared(&mut self, value: Arc<Tensor<T>>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Arc<Tensor<T>>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn output(&mut self, shape: Vec<usize>, data: Vec<T>, inputs: &[Var], op: impl FnOnce() -> Op<T>) -> Var {
        let rg = inputs.iter().any(|&v| self.requires_grad(v));
        let op = if rg { op() } else { Op::Leaf };
        self.push(Arc::new(Tensor::from_parts(shape, data)), op, rg)
    }

    /// "Same"-padded 1D convolution. `x: [B, T, Cin]`, `w: [k, Cin, Cout]` with odd `k`, `b: [Cout]`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let (xs, ws) = (self.value(x).shape(), self.value(w).shape());
        let [batch, time, c_in] = dims3(xs, "conv1d input")?;
        let [kernel, w_in, c_out] = dims3(ws, "conv1d weight")?;
        if w_in != c_in || kernel % 2 == 0 {
            return Err(Error::Shape(format!(
                "conv1d weight {ws:?} incompatible with input {xs:?} (kernel must be odd)"
            )));
        }
        if let Some(b) = b {
            expect_shape(self.value(b), &[c_out], "conv1d bias")?;
        }
        let dims = ConvDims {
            batch,
            time,
            c_in,
            c_out,
            kernel,
        };
        let mut out = vec![T::zero(); batch * time * c_out];
        kernels::conv1d_forward(
            self.value(x).data(),
            self.value(w).data(),
            b.map(|b| self.value(b).data()),
            dims,
            &mut out,
        );
        let mut inputs = vec![x, w];
        inputs.extend(b);
        Ok(self.output(vec![batch, time, c_out], out, &inputs, || Op::Conv1d { x, w, b, dims }))
    }

    /// Max over non-overlapping time pairs: `[B, T, C] -> [B, T/2, C]`, odd tail dropped.
    pub fn maxpool1d(&mut self, x: Var) -> Result<Var> {
        let [batch, time, ch] = dims3(self.value(x).shape(), "maxpool1d input")?;
        if time < 2 {
            return Err(Error::Shape(format!("maxpool1d needs T >= 2, got {time}")));
        }
        let mut out = vec![T::zero(); batch * (time / 2) * ch];
        let arg = kernels::maxpool_forward(self.value(x).data(), batch, time, ch, &mut out);
        Ok(self.output(vec![batch, time / 2, ch], out, &[x], || Op::MaxPool { x, arg }))
    }

    /// Mean over the time axis: `[B, T, C] -> [B, C]`.
    pub fn global_avg_pool(&mut self, x: Var) -> Result<Var> {
        let [batch, time, ch] = dims3(self.value(x).shape(), "global_avg_pool input")?;
        let inv = T::one() / T::of(time as f64);
        let mut out = vec![T::zero(); batch * ch];
        let xd = self.value(x).data();
        for (bi, orow) in out.chunks_exact_mut(ch).enumerate() {
            for row in xd[bi * time * ch..(bi + 1) * time * ch].chunks_exact(ch) {
                for (o, &v) in orow.iter_mut().zip(row) {
                    *o += v;
                }
            }
            for o in orow.iter_mut() {
                *o *= inv;
            }
        }
        Ok(self.output(vec![batch, ch], out, &[x], || Op::GlobalAvgPool { x, time }))
    }

    /// Affine map `[B, Cin] x [Cin, Cout] + [Cout]`.
    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xs, ws) = (self.value(x).shape(), self.value(w).shape());
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[0] {
            return Err(Error::Shape(format!("dense: input {xs:?} vs weight {ws:?}")));
        }
        let (batch, c_in, c_out) = (xs[0], xs[1], ws[1]);
        expect_shape(self.value(b), &[c_out], "dense bias")?;
        let mut out = vec![T::zero(); batch * c_out];
        kernels::dense_forward(
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
            c_in,
            c_out,
            &mut out,
        );
        Ok(self.output(vec![batch, c_out], out, &[x, w, b], || Op::Dense {
            x,
            w,
            b,
            c_in,
            c_out,
        }))
    }

    pub fn leaky_relu(&mut self, x: Var, slope: T) -> Var {
        let xt = self.value(x);
        let shape = xt.shape().to_vec();
        let out = xt
            .data()
            .iter()
            .map(|&v| if v >= T::zero() { v } else { slope * v })
            .collect();
        self.output(shape, out, &[x], || Op::LeakyRelu { x, slope })
    }

    /// Batch normalization using statistics of this batch, over every axis but the last.
    ///
    /// When `update` is given, its running statistics move towards the batch
    /// statistics: `running = (1 - momentum) * running + momentum * batch`,
    /// with the unbiased batch variance.
    pub fn batch_norm_train(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: T,
        update: Option<(&mut RunningStats<T>, T)>,
    ) -> Result<Var> {
        let ch = self.norm_channels(x, gamma, beta)?;
        let xd = self.value(x).data();
        let m = xd.len() / ch;
        if m < 2 {
            return Err(Error::DegenerateBatch(format!(
                "batch norm in train mode needs at least 2 elements per channel, got {m}"
            )));
        }
        let (mean, var) = kernels::channel_moments(xd, ch);
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let (out, xhat) = self.normalize(x, gamma, beta, &mean, &inv_std);
        if let Some((stats, momentum)) = update {
            if stats.channels() != ch {
                return Err(Error::Shape(format!(
                    "running stats have {} channels, input has {ch}",
                    stats.channels()
                )));
            }
            let unbias = T::of(m as f64 / (m - 1) as f64);
            let keep = T::one() - momentum;
            for c in 0..ch {
                stats.mean[c] = keep * stats.mean[c] + momentum * mean[c];
                stats.var[c] = keep * stats.var[c] + momentum * var[c] * unbias;
            }
        }
        let shape = self.value(x).shape().to_vec();
        Ok(self.output(shape, out, &[x, gamma, beta], || Op::BatchNorm {
            x,
            gamma,
            beta,
            xhat,
            inv_std,
            train: true,
        }))
    }

    /// Batch normalization with fixed running statistics.
    pub fn batch_norm_infer(&mut self, x: Var, gamma: Var, beta: Var, stats: &RunningStats<T>, eps: T) -> Result<Var> {
        let ch = self.norm_channels(x, gamma, beta)?;
        if stats.channels() != ch {
            return Err(Error::Shape(format!(
                "running stats have {} channels, input has {ch}",
                stats.channels()
            )));
        }
        let inv_std: Vec<T> = stats.var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let (out, xhat) = self.normalize(x, gamma, beta, &stats.mean, &inv_std);
        let shape = self.value(x).shape().to_vec();
        Ok(self.output(shape, out, &[x, gamma, beta], || Op::BatchNorm {
            x,
            gamma,
            beta,
            xhat,
            inv_std,
            train: false,
        }))
    }

    fn norm_channels(&self, x: Var, gamma: Var, beta: Var) -> Result<usize> {
        let xs = self.value(x).shape();
        if xs.len() < 2 {
            return Err(Error::Shape(format!("batch norm input must be rank >= 2, got {xs:?}")));
        }
        let ch = xs[xs.len() - 1];
        expect_shape(self.value(gamma), &[ch], "batch norm gamma")?;
        expect_shape(self.value(beta), &[ch], "batch norm beta")?;
        Ok(ch)
    }

    fn normalize(&self, x: Var, gamma: Var, beta: Var, mean: &[T], inv_std: &[T]) -> (Vec<T>, Vec<T>) {
        let xd = self.value(x).data();
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        let ch = g.len();
        let mut out = vec![T::zero(); xd.len()];
        let mut xhat = vec![T::zero(); xd.len()];
        for ((row, orow), hrow) in xd
            .chunks_exact(ch)
            .zip(out.chunks_exact_mut(ch))
            .zip(xhat.chunks_exact_mut(ch))
        {
            for c in 0..ch {
                let h = (row[c] - mean[c]) * inv_std[c];
                hrow[c] = h;
                orow[c] = g[c] * h + b[c];
            }
        }
        (out, xhat)
    }

    /// Concatenates along the last axis; leading dimensions must match.
    pub fn concat_channels(&mut self, xs: &[Var]) -> Result<Var> {
        let Some(&first) = xs.first() else {
            return Err(Error::Shape("concat of zero tensors".into()));
        };
        let lead = {
            let s = self.value(first).shape();
            s[..s.len() - 1].to_vec()
        };
        let mut parts = Vec::with_capacity(xs.len());
        for &v in xs {
            let s = self.value(v).shape();
            if s.len() != lead.len() + 1 || s[..s.len() - 1] != lead[..] {
                return Err(Error::Shape(format!("concat: {s:?} does not match leading dims {lead:?}")));
            }
            parts.push((v, s[s.len() - 1]));
        }
        let total: usize = parts.iter().map(|p| p.1).sum();
        let rows: usize = lead.iter().product();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &(v, w) in &parts {
                out.extend_from_slice(&self.value(v).data()[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(total);
        Ok(self.output(shape, out, xs, || Op::Concat { parts }))
    }

    /// Inverted dropout: zeroes each element with probability `rate`, scales survivors by `1/(1-rate)`.
    pub fn dropout(&mut self, x: Var, rate: f64, seed: u64) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!("dropout rate must be in [0, 1), got {rate}")));
        }
        if rate == 0.0 {
            return Ok(x);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = T::of(1.0 / (1.0 - rate));
        let xt = self.value(x);
        let shape = xt.shape().to_vec();
        let mask: Vec<T> = (0..xt.len())
            .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { scale })
            .collect();
        let out = xt.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
        Ok(self.output(shape, out, &[x], || Op::Dropout { x, mask }))
    }

    /// Mean over the batch of `-log softmax(logits)[label]`, as a 1-element tensor.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let s = self.value(logits).shape();
        if s.len() != 2 || s[0] != labels.len() {
            return Err(Error::Shape(format!(
                "logits {s:?} vs {} labels",
                labels.len()
            )));
        }
        let classes = s[1];
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidInput(format!("label {bad} out of range for {classes} classes")));
        }
        let logp = kernels::log_softmax_rows(self.value(logits).data(), classes);
        let loss = -labels
            .iter()
            .enumerate()
            .map(|(i, &l)| logp[i * classes + l])
            .sum::<T>()
            / T::of(labels.len() as f64);
        let labels = labels.to_vec();
        Ok(self.output(vec![1], vec![loss], &[logits], || Op::SoftmaxCrossEntropy {
            logits,
            probs: logp.iter().map(|v| v.exp()).collect(),
            labels,
        }))
    }

    /// Elementwise product of two equally shaped tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (at, bt) = (self.value(a), self.value(b));
        if at.shape() != bt.shape() {
            return Err(Error::Shape(format!("mul: {:?} vs {:?}", at.shape(), bt.shape())));
        }
        let shape = at.shape().to_vec();
        let out = at.data().iter().zip(bt.data()).map(|(&p, &q)| p * q).collect();
        Ok(self.output(shape, out, &[a, b], || Op::Mul { a, b }))
    }

    /// Sum of all elements, as a 1-element tensor.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().copied().sum();
        self.output(vec![1], vec![s], &[x], || Op::Sum { x })
    }

    /// Reverse-mode pass from a 1-element `loss`.
    ///
    /// Returns a fresh gradient set; the graph itself is not modified, so
    /// several losses recorded on one graph can be differentiated independently.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.value(loss).len() != 1 {
            return Err(Error::Shape(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..=loss.0).map(|_| None).collect();
        if !self.requires_grad(loss) {
            return Ok(Gradients::from_buffers(self, grads));
        }
        grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.backward_node(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients::from_buffers(self, grads))
    }

    fn backward_node(&self, i: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let rg = |v: Var| self.requires_grad(v);
        let val = |v: Var| self.value(v).data();
        let mut acc = |v: Var, d: Vec<T>| accumulate(grads, v, d);
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Conv1d { x, w, b, dims } => {
                let mut dx = rg(*x).then(|| vec![T::zero(); val(*x).len()]);
                let mut dw = rg(*w).then(|| vec![T::zero(); val(*w).len()]);
                let mut db = b.filter(|b| rg(*b)).map(|_| vec![T::zero(); dims.c_out]);
                kernels::conv1d_backward(
                    val(*x),
                    val(*w),
                    g,
                    *dims,
                    dx.as_deref_mut(),
                    dw.as_deref_mut(),
                    db.as_deref_mut(),
                );
                if let Some(d) = dx {
                    acc(*x, d);
                }
                if let Some(d) = dw {
                    acc(*w, d);
                }
                if let (Some(b), Some(d)) = (b, db) {
                    acc(*b, d);
                }
            }
            Op::MaxPool { x, arg } => {
                let mut dx = vec![T::zero(); val(*x).len()];
                for (&gv, &src) in g.iter().zip(arg) {
                    dx[src as usize] += gv;
                }
                acc(*x, dx);
            }
            Op::GlobalAvgPool { x, time } => {
                let xs = self.value(*x).shape();
                let (batch, time, ch) = (xs[0], *time, xs[2]);
                let inv = T::one() / T::of(time as f64);
                let mut dx = vec![T::zero(); batch * time * ch];
                for bi in 0..batch {
                    let grow = &g[bi * ch..(bi + 1) * ch];
                    for row in dx[bi * time * ch..(bi + 1) * time * ch].chunks_exact_mut(ch) {
                        for (d, &gv) in row.iter_mut().zip(grow) {
                            *d = gv * inv;
                        }
                    }
                }
                acc(*x, dx);
            }
            Op::Dense { x, w, b, c_in, c_out } => {
                let (c_in, c_out) = (*c_in, *c_out);
                if rg(*x) {
                    let wd = val(*w);
                    let mut dx = vec![T::zero(); val(*x).len()];
                    for (grow, drow) in g.chunks_exact(c_out).zip(dx.chunks_exact_mut(c_in)) {
                        for (c, d) in drow.iter_mut().enumerate() {
                            *d = kernels::dot(&wd[c * c_out..][..c_out], grow);
                        }
                    }
                    acc(*x, dx);
                }
                if rg(*w) {
                    let xd = val(*x);
                    let mut dw = vec![T::zero(); c_in * c_out];
                    for (grow, xrow) in g.chunks_exact(c_out).zip(xd.chunks_exact(c_in)) {
                        for (c, &xv) in xrow.iter().enumerate() {
                            for (d, &gv) in dw[c * c_out..][..c_out].iter_mut().zip(grow) {
                                *d += xv * gv;
                            }
                        }
                    }
                    acc(*w, dw);
                }
                if rg(*b) {
                    let mut db = vec![T::zero(); c_out];
                    for grow in g.chunks_exact(c_out) {
                        for (d, &gv) in db.iter_mut().zip(grow) {
                            *d += gv;
                        }
                    }
                    acc(*b, db);
                }
            }
            Op::LeakyRelu { x, slope } => {
                let dx = val(*x)
                    .iter()
                    .zip(g)
                    .map(|(&v, &gv)| if v >= T::zero() { gv } else { *slope * gv })
                    .collect();
                acc(*x, dx);
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                train,
            } => {
                let gd = val(*gamma);
                let ch = gd.len();
                let m = T::of((g.len() / ch) as f64);
                let mut dgamma = vec![T::zero(); ch];
                let mut dbeta = vec![T::zero(); ch];
                for (grow, hrow) in g.chunks_exact(ch).zip(xhat.chunks_exact(ch)) {
                    for c in 0..ch {
                        dgamma[c] += grow[c] * hrow[c];
                        dbeta[c] += grow[c];
                    }
                }
                if rg(*x) {
                    let mut dx = vec![T::zero(); g.len()];
                    for ((grow, hrow), drow) in g.chunks_exact(ch).zip(xhat.chunks_exact(ch)).zip(dx.chunks_exact_mut(ch)) {
                        for c in 0..ch {
                            let dh = grow[c] * gd[c];
                            drow[c] = if *train {
                                // sum(dh) = gamma * dbeta, sum(dh * xhat) = gamma * dgamma
                                inv_std[c] * (dh - (gd[c] * dbeta[c] + hrow[c] * gd[c] * dgamma[c]) / m)
                            } else {
                                dh * inv_std[c]
                            };
                        }
                    }
                    acc(*x, dx);
                }
                if rg(*gamma) {
                    acc(*gamma, dgamma);
                }
                if rg(*beta) {
                    acc(*beta, dbeta);
                }
            }
            Op::Concat { parts } => {
                let total: usize = parts.iter().map(|p| p.1).sum();
                let rows = g.len() / total;
                let mut offset = 0;
                for &(v, w) in parts {
                    if rg(v) {
                        let mut d = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            d.extend_from_slice(&g[r * total + offset..][..w]);
                        }
                        acc(v, d);
                    }
                    offset += w;
                }
            }
            Op::Dropout { x, mask } => {
                acc(*x, g.iter().zip(mask).map(|(&gv, &m)| gv * m).collect());
            }
            Op::SoftmaxCrossEntropy { logits, probs, labels } => {
                let batch = labels.len();
                let classes = probs.len() / batch;
                let scale = g[0] / T::of(batch as f64);
                let mut d: Vec<T> = probs.iter().map(|&p| p * scale).collect();
                for (i, &l) in labels.iter().enumerate() {
                    d[i * classes + l] -= scale;
                }
                acc(*logits, d);
            }
            Op::Mul { a, b } => {
                if rg(*a) {
                    acc(*a, g.iter().zip(val(*b)).map(|(&gv, &q)| gv * q).collect());
                }
                if rg(*b) {
                    acc(*b, g.iter().zip(val(*a)).map(|(&gv, &p)| gv * p).collect());
                }
            }
            Op::Sum { x } => {
                acc(*x, vec![g[0]; val(*x).len()]);
            }
        }
    }
}

fn accumulate<T: Scalar>(grads: &mut [Option<Vec<T>>], v: Var, d: Vec<T>) {
    match &mut grads[v.0] {
        Some(existing) => {
            for (e, x) in existing.iter_mut().zip(d) {
                *e += x;
            }
        }
        slot @ None => *slot = Some(d),
    }
}

/// Gradients of one loss with respect to every node that requires them.
pub struct Gradients<T = f32> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    fn from_buffers(graph: &Graph<T>, buffers: Vec<Option<Vec<T>>>) -> Self {
        let grads = buffers
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                let b = b.filter(|_| graph.nodes[i].requires_grad)?;
                Some(Tensor::from_parts(graph.nodes[i].value.shape().to_vec(), b))
            })
            .collect();
        Self { grads }
    }

    /// Gradient of `v`, or `None` if `v` does not require grad or does not reach the loss.
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn dims3(shape: &[usize], what: &str) -> Result<[usize; 3]> {
    <[usize; 3]>::try_from(shape).map_err(|_| Error::Shape(format!("{what} must be rank 3, got {shape:?}")))
}

fn expect_shape<T: Scalar>(t: &Tensor<T>, shape: &[usize], what: &str) -> Result<()> {
    if t.shape() == shape {
        Ok(())
    } else {
        Err(Error::Shape(format!("{what}: expected {shape:?}, got {:?}", t.shape())))
    }
}
