use super::{Graph, Tensor, Var};
use crate::error::Result;

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Max relative error per input tensor.
    pub per_input: Vec<f64>,
    /// `(input, flat index, analytic, numeric)` of the worst coordinate.
    pub worst: Option<(usize, usize, f64, f64)>,
    pub coordinates: usize,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.per_input.iter().copied().fold(0.0, f64::max)
    }
}

/// Compares reverse-mode gradients of a scalar function against central differences.
///
/// `f` receives the graph and one [`Var`] per entry of `inputs` and must return
/// a 1-element tensor. Every coordinate of every input is perturbed by `±eps`;
/// the error at a coordinate is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn finite_diff_check<F>(f: F, inputs: &[Tensor<f64>], eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let loss = f(&mut g, &vars)?;
    let grads = g.backward(loss)?;

    let eval = |point: &[Tensor<f64>]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = point.iter().map(|t| g.constant(t.clone())).collect();
        let out = f(&mut g, &vars)?;
        Ok(g.value(out).item())
    };

    let mut report = GradCheckReport {
        per_input: vec![0.0; inputs.len()],
        worst: None,
        coordinates: 0,
    };
    let mut worst_err = -1.0;
    let mut point = inputs.to_vec();
    for (i, &v) in vars.iter().enumerate() {
        let analytic = grads.get(v).map(|t| t.data().to_vec()).unwrap_or_else(|| vec![0.0; inputs[i].len()]);
        for (j, &a) in analytic.iter().enumerate() {
            let orig = inputs[i].data()[j];
            point[i].data_mut()[j] = orig + eps;
            let plus = eval(&point)?;
            point[i].data_mut()[j] = orig - eps;
            let minus = eval(&point)?;
            point[i].data_mut()[j] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            report.per_input[i] = report.per_input[i].max(err);
            report.coordinates += 1;
            if err > worst_err {
                worst_err = err;
                report.worst = Some((i, j, a, numeric));
            }
        }
    }
    Ok(report)
}
