//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use ddnet::autodiff::{finite_diff_check, Graph, RunningStats, Tensor, Var};
use ddnet::model::{Bound, DdNet, Inputs, ModelConfig};
use ddnet::Result;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut impl Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// `sum(x * r)` for a fixed random `r`, turning any tensor into a scalar
/// with a generic, non-degenerate upstream gradient.
pub fn project(g: &mut Graph<f64>, x: Var, seed: u64) -> Result<Var> {
    let shape = g.value(x).shape().to_vec();
    let r = g.constant(random_tensor(&mut rng(seed ^ 0x5eed), &shape));
    let y = g.mul(x, r)?;
    Ok(g.sum(y))
}

pub struct OpCheck {
    pub name: &'static str,
    pub error: f64,
    pub limit: f64,
}

pub const OP_EPS: f64 = 1e-4;
pub const LIMIT: f64 = 1e-4;
pub const LIMIT_TRAIN_NORM: f64 = 1e-3;

/// Finite-difference check of every differentiable operator at one seed.
pub fn operator_checks(seed: u64) -> Vec<OpCheck> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    let mut check = |name: &'static str, limit: f64, inputs: Vec<Tensor<f64>>, f: &dyn Fn(&mut Graph<f64>, &[Var]) -> Result<Var>| {
        let report = finite_diff_check(f, &inputs, OP_EPS).unwrap();
        out.push(OpCheck { name, error: report.max_rel_error(), limit });
    };

    let x = random_tensor(&mut r, &[2, 6, 3]);
    let w3 = random_tensor(&mut r, &[3, 3, 4]);
    let w1 = random_tensor(&mut r, &[1, 3, 4]);
    let b = random_tensor(&mut r, &[4]);
    check("conv1d k=3", LIMIT, vec![x.clone(), w3, b.clone()], &|g, v| {
        let y = g.conv1d(v[0], v[1], Some(v[2]))?;
        project(g, y, seed)
    });
    check("conv1d k=1", LIMIT, vec![x.clone(), w1, b], &|g, v| {
        let y = g.conv1d(v[0], v[1], Some(v[2]))?;
        project(g, y, seed)
    });
    check("maxpool1d", LIMIT, vec![random_tensor(&mut r, &[2, 7, 3])], &|g, v| {
        let y = g.maxpool1d(v[0])?;
        project(g, y, seed)
    });
    check("global_avg_pool", LIMIT, vec![x.clone()], &|g, v| {
        let y = g.global_avg_pool(v[0])?;
        project(g, y, seed)
    });
    let dense_in = vec![random_tensor(&mut r, &[3, 5]), random_tensor(&mut r, &[5, 4]), random_tensor(&mut r, &[4])];
    check("dense", LIMIT, dense_in, &|g, v| {
        let y = g.dense(v[0], v[1], v[2])?;
        project(g, y, seed)
    });
    check("leaky_relu", LIMIT, vec![x.clone()], &|g, v| {
        let y = g.leaky_relu(v[0], 0.1);
        project(g, y, seed)
    });
    let gamma = random_tensor(&mut r, &[3]);
    let beta = random_tensor(&mut r, &[3]);
    check("batch_norm train", LIMIT_TRAIN_NORM, vec![x.clone(), gamma.clone(), beta.clone()], &|g, v| {
        let y = g.batch_norm_train(v[0], v[1], v[2], 1e-5, None)?;
        project(g, y, seed)
    });
    let stats = RunningStats {
        mean: (0..3).map(|_| r.gen_range(-0.5..0.5)).collect(),
        var: (0..3).map(|_| r.gen_range(0.5..2.0)).collect(),
    };
    check("batch_norm infer", LIMIT, vec![x.clone(), gamma, beta], &|g, v| {
        let y = g.batch_norm_infer(v[0], v[1], v[2], &stats, 1e-5)?;
        project(g, y, seed)
    });
    check("concat_channels", LIMIT, vec![x.clone(), random_tensor(&mut r, &[2, 6, 2])], &|g, v| {
        let y = g.concat_channels(&[v[0], v[1]])?;
        project(g, y, seed)
    });
    check("dropout", LIMIT, vec![x.clone()], &|g, v| {
        let y = g.dropout(v[0], 0.5, seed)?;
        project(g, y, seed)
    });
    let labels: Vec<usize> = (0..4).map(|_| r.gen_range(0..5)).collect();
    check("softmax_cross_entropy", LIMIT, vec![random_tensor(&mut r, &[4, 5])], &|g, v| {
        g.softmax_cross_entropy(v[0], &labels)
    });
    check("mul", LIMIT, vec![x.clone(), random_tensor(&mut r, &[2, 6, 3])], &|g, v| {
        let y = g.mul(v[0], v[1])?;
        project(g, y, seed)
    });
    check("sum", LIMIT, vec![x], &|g, v| {
        let y = g.sum(v[0]);
        let y = g.mul(y, y)?;
        Ok(g.sum(y))
    });
    out
}

/// Small configuration that keeps a whole-network gradient check cheap.
pub fn tiny_config() -> ModelConfig {
    ModelConfig::new(4, 2, 3).with_filters(2).with_frames(16)
}

pub fn random_inputs(cfg: &ModelConfig, batch: usize, seed: u64) -> Inputs<f64> {
    let mut r = rng(seed);
    Inputs {
        jcd: random_tensor(&mut r, &[batch, cfg.frames, cfg.jcd_dim()]),
        slow: random_tensor(&mut r, &[batch, cfg.frames, cfg.motion_dim()]),
        fast: random_tensor(&mut r, &[batch, cfg.frames / 2, cfg.motion_dim()]),
    }
}

/// Runs enough train-mode batches from the input distribution that the
/// running statistics settle, as they would after training.
pub fn converge_running_stats(model: &mut DdNet, seed: u64) {
    let cfg = model.config().clone();
    for i in 0..80 {
        let x: Inputs<f32> = random_inputs(&cfg, 4, seed * 1000 + 100 + i).cast();
        let mut g = Graph::new();
        let bound = model.bind(&mut g, false);
        model.forward(&mut g, &bound, &x, ddnet::model::Mode::Train { dropout_seed: i }).unwrap();
    }
}

/// Balances truncation against roundoff for this network; coordinates with
/// gradients near 1e-7 sit at the resolution limit of f64 central differences.
pub const MODEL_EPS: f64 = 3e-6;

/// Tiny network, inputs and labels for a whole-network gradient check.
pub struct ModelCase {
    pub model: DdNet<f64>,
    pub inputs: Inputs<f64>,
    pub labels: Vec<usize>,
    pub seed: u64,
    /// Batch statistics and a fixed dropout mask; otherwise running statistics.
    pub train: bool,
}

impl ModelCase {
    pub fn new(seed: u64, train: bool) -> Self {
        let cfg = tiny_config();
        let batch = 3;
        let mut model = DdNet::new(cfg.clone(), seed).unwrap();
        if !train {
            converge_running_stats(&mut model, seed);
        }
        Self {
            model: model.cast::<f64>(),
            inputs: random_inputs(&cfg, batch, seed),
            labels: (0..batch).map(|i| (i + seed as usize) % cfg.num_classes).collect(),
            seed,
            train,
        }
    }

    pub fn point(&self) -> Vec<Tensor<f64>> {
        self.model.params().map(|(_, t)| t.clone()).collect()
    }

    /// Forward plus cross-entropy on the given parameter handles.
    pub fn loss(&self, g: &mut Graph<f64>, params: &[Var]) -> Result<Var> {
        let bound = Bound::from_vars(params.to_vec());
        let out = if self.train {
            self.model.forward_train_frozen(g, &bound, &self.inputs, self.seed)?
        } else {
            self.model.forward_infer(g, &bound, &self.inputs)?
        };
        g.softmax_cross_entropy(out.logits, &self.labels)
    }
}

/// Max relative error of the whole-network gradient over every parameter.
pub fn model_check(seed: u64, train: bool) -> f64 {
    let case = ModelCase::new(seed, train);
    finite_diff_check(|g, v| case.loss(g, v), &case.point(), MODEL_EPS).unwrap().max_rel_error()
}

/// One SHREC skeleton line: 66 coordinates counting up in steps of 0.5.
pub fn frame_line(t: usize) -> String {
    let mut line = String::new();
    for k in 0..66 {
        write!(line, "{} ", (t * 66 + k) as f32 * 0.5).unwrap();
    }
    line.trim_end().to_string()
}

/// Writes a SHREC-style tree. Rows are `(gesture, finger, subject, trial, label14, label28, frames)`.
pub fn write_shrec(root: &Path, train: &[[u32; 7]], test: &[[u32; 7]]) {
    for (file, rows) in [("train_gestures.txt", train), ("test_gestures.txt", test)] {
        let mut index = String::new();
        for r in rows {
            writeln!(index, "{}", r.map(|v| v.to_string()).join(" ")).unwrap();
            let dir = root.join(format!("gesture_{}/finger_{}/subject_{}/essai_{}", r[0], r[1], r[2], r[3]));
            fs::create_dir_all(&dir).unwrap();
            let body: Vec<String> = (0..r[6] as usize).map(frame_line).collect();
            fs::write(dir.join("skeletons_world.txt"), body.join("\n") + "\n").unwrap();
        }
        fs::write(root.join(file), index).unwrap();
    }
}

pub const TRAIN: [[u32; 7]; 3] = [[3, 2, 1, 1, 3, 6, 4], [1, 1, 2, 1, 1, 1, 5], [14, 2, 3, 2, 14, 28, 3]];
pub const TEST: [[u32; 7]; 1] = [[2, 1, 1, 3, 2, 3, 2]];

pub fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}
