use crate::error::{Error, Result};

/// First and second moment buffers of Adam, one slot per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl AdamState {
    /// β₁ = 0.9, β₂ = 0.999, ε = 1e-8, zeroed moments for tensors of the given sizes.
    pub fn new(sizes: impl IntoIterator<Item = usize>) -> Self {
        let m: Vec<Vec<f32>> = sizes.into_iter().map(|n| vec![0.0; n]).collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            v: m.clone(),
            m,
        }
    }

    /// Number of completed updates.
    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of every parameter.
///
/// All gradients are checked before anything is written, so a non-finite
/// gradient leaves both the parameters and the state untouched.
pub fn adam_step<'a>(
    params: impl IntoIterator<Item = (&'a str, &'a mut [f32])>,
    grads: &[&[f32]],
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    let params: Vec<(&str, &mut [f32])> = params.into_iter().collect();
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adam: {} parameters, {} gradients, {} state slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, ((name, p), g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[i].len() {
            return Err(Error::Shape(format!("adam: size mismatch for `{name}`")));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { param: name.to_string() });
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (i, ((_, p), g)) in params.into_iter().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for j in 0..p.len() {
            let gj = g[j] as f64;
            let mj = b1 * m[j] as f64 + (1.0 - b1) * gj;
            let vj = b2 * v[j] as f64 + (1.0 - b2) * gj * gj;
            m[j] = mj as f32;
            v[j] = vj as f32;
            let update = lr * (mj / c1) / ((vj / c2).sqrt() + state.eps);
            p[j] = (p[j] as f64 - update) as f32;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_are_a_no_op() {
        let mut p = vec![0.25f32, -3.0, 7.5];
        let orig = p.clone();
        let mut st = AdamState::new([3]);
        for _ in 0..5 {
            adam_step([("w", p.as_mut_slice())], &[&[0.0; 3]], &mut st, 1e-3).unwrap();
        }
        assert_eq!(p, orig);
        assert_eq!(st.step(), 5);
    }

    #[test]
    fn non_finite_gradient_names_the_parameter() {
        let mut a = vec![1.0f32];
        let mut b = vec![1.0f32];
        let mut st = AdamState::new([1, 1]);
        let err = adam_step(
            [("a", a.as_mut_slice()), ("b", b.as_mut_slice())],
            &[&[0.1], &[f32::NAN]],
            &mut st,
            1e-3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Diverged { ref param } if param == "b"));
        assert_eq!((a[0], b[0], st.step()), (1.0, 1.0, 0));
    }
}
