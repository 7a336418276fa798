//! Slice-level forward and backward kernels. Shapes are validated by the caller.

use super::Scalar;

/// Dimensions of a "same"-padded 1D convolution over `[batch, time, c_in]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvDims {
    pub batch: usize,
    pub time: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
}

impl ConvDims {
    fn pad(&self) -> usize {
        self.kernel / 2
    }

    /// Input time index feeding output `t` through tap `d`, if inside the sequence.
    #[inline]
    fn source(&self, t: usize, d: usize) -> Option<usize> {
        let s = (t + d).checked_sub(self.pad())?;
        (s < self.time).then_some(s)
    }
}

pub(crate) fn conv1d_forward<T: Scalar>(x: &[T], w: &[T], b: Option<&[T]>, dims: ConvDims, out: &mut [T]) {
    let ConvDims {
        batch,
        time,
        c_in,
        c_out,
        kernel,
    } = dims;
    for bi in 0..batch {
        for t in 0..time {
            let row = &mut out[(bi * time + t) * c_out..][..c_out];
            match b {
                Some(b) => row.copy_from_slice(b),
                None => row.fill(T::zero()),
            }
            for d in 0..kernel {
                let Some(s) = dims.source(t, d) else { continue };
                let xrow = &x[(bi * time + s) * c_in..][..c_in];
                let wtap = &w[d * c_in * c_out..][..c_in * c_out];
                for (c, &xv) in xrow.iter().enumerate() {
                    let wrow = &wtap[c * c_out..][..c_out];
                    for (o, &wv) in row.iter_mut().zip(wrow) {
                        *o += xv * wv;
                    }
                }
            }
        }
    }
}

/// Accumulates input, weight and bias gradients of a convolution.
pub(crate) fn conv1d_backward<T: Scalar>(
    x: &[T],
    w: &[T],
    g: &[T],
    dims: ConvDims,
    mut dx: Option<&mut [T]>,
    mut dw: Option<&mut [T]>,
    db: Option<&mut [T]>,
) {
    let ConvDims {
        batch,
        time,
        c_in,
        c_out,
        kernel,
    } = dims;
    for bi in 0..batch {
        for t in 0..time {
            let grow = &g[(bi * time + t) * c_out..][..c_out];
            for d in 0..kernel {
                let Some(s) = dims.source(t, d) else { continue };
                let base = (bi * time + s) * c_in;
                let wtap = &w[d * c_in * c_out..][..c_in * c_out];
                if let Some(dx) = dx.as_deref_mut() {
                    for (c, dxv) in dx[base..base + c_in].iter_mut().enumerate() {
                        let wrow = &wtap[c * c_out..][..c_out];
                        *dxv += dot(wrow, grow);
                    }
                }
                if let Some(dw) = dw.as_deref_mut() {
                    let dwtap = &mut dw[d * c_in * c_out..][..c_in * c_out];
                    for (c, &xv) in x[base..base + c_in].iter().enumerate() {
                        let dwrow = &mut dwtap[c * c_out..][..c_out];
                        for (acc, &gv) in dwrow.iter_mut().zip(grow) {
                            *acc += xv * gv;
                        }
                    }
                }
            }
        }
    }
    if let Some(db) = db {
        for grow in g.chunks_exact(c_out) {
            for (acc, &gv) in db.iter_mut().zip(grow) {
                *acc += gv;
            }
        }
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&p, &q)| acc + p * q)
}

/// Pairwise max over the time axis. Returns the flat input index chosen for
/// each output element; ties go to the earlier frame.
pub(crate) fn maxpool_forward<T: Scalar>(
    x: &[T],
    batch: usize,
    time: usize,
    ch: usize,
    out: &mut [T],
) -> Vec<u32> {
    let out_t = time / 2;
    let mut arg = vec![0u32; batch * out_t * ch];
    for bi in 0..batch {
        for t in 0..out_t {
            let a = (bi * time + 2 * t) * ch;
            let b = a + ch;
            let o = (bi * out_t + t) * ch;
            for c in 0..ch {
                let (ia, ib) = (a + c, b + c);
                let pick = if x[ia] >= x[ib] { ia } else { ib };
                out[o + c] = x[pick];
                arg[o + c] = pick as u32;
            }
        }
    }
    arg
}

/// Dense `[batch, c_in] x [c_in, c_out] + b`.
pub(crate) fn dense_forward<T: Scalar>(x: &[T], w: &[T], b: &[T], c_in: usize, c_out: usize, out: &mut [T]) {
    for (xrow, orow) in x.chunks_exact(c_in).zip(out.chunks_exact_mut(c_out)) {
        orow.copy_from_slice(b);
        for (c, &xv) in xrow.iter().enumerate() {
            for (o, &wv) in orow.iter_mut().zip(&w[c * c_out..][..c_out]) {
                *o += xv * wv;
            }
        }
    }
}

/// Per-channel mean and biased variance over all leading positions.
pub(crate) fn channel_moments<T: Scalar>(x: &[T], ch: usize) -> (Vec<T>, Vec<T>) {
    let m = T::of((x.len() / ch) as f64);
    let mut mean = vec![T::zero(); ch];
    for row in x.chunks_exact(ch) {
        for (acc, &v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= m;
    }
    let mut var = vec![T::zero(); ch];
    for row in x.chunks_exact(ch) {
        for ((acc, &v), &mu) in var.iter_mut().zip(row).zip(&mean) {
            let d = v - mu;
            *acc += d * d;
        }
    }
    for v in &mut var {
        *v /= m;
    }
    (mean, var)
}

pub(crate) fn log_softmax_rows<T: Scalar>(logits: &[T], classes: usize) -> Vec<T> {
    let mut out = vec![T::zero(); logits.len()];
    for (row, orow) in logits.chunks_exact(classes).zip(out.chunks_exact_mut(classes)) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
        for (o, &v) in orow.iter_mut().zip(row) {
            *o = v - lse;
        }
    }
    out
}
