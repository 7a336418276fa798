//! Inference throughput measurement on synthetic SHREC-shaped input.
//!
//! Throughput counts complete sequences classified per second, feature
//! extraction included. Feature and network time are also reported apart.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{build_feature_bundle, FeatureBundle};
use crate::model::{DdNet, Inputs, ModelConfig};
use crate::skeleton::SkeletonSequence;
use crate::synthetic::random_sequence;

/// Raw length of the synthetic sequences before resampling.
pub const BENCH_SEQUENCE_LEN: usize = 60;
pub const MIN_RUNS: usize = 5;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub filters: usize,
    pub batch: usize,
    pub iterations: usize,
    pub threads: usize,
    pub warmup: usize,
    pub runs: usize,
    pub seed: u64,
    /// Weights to use; seeded random weights when `None`.
    pub model: Option<DdNet>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { filters: 64, batch: 64, iterations: 10, threads: 1, warmup: 1, runs: MIN_RUNS, seed: 0, model: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub filters: usize,
    pub num_joints: usize,
    pub coord_dim: usize,
    pub frames: usize,
    pub num_classes: usize,
    pub parameters: usize,
}

/// Timings are per measured run, averaged over `runs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub batch_size: usize,
    pub iterations: usize,
    /// Sequences classified in one run: `batch_size * iterations`.
    pub sequences: usize,
    pub runs: usize,
    pub warmup_runs: usize,
    pub threads: usize,
    /// Mean wall time of one run.
    pub wall_time_s: f64,
    /// `sequences / wall_time_s`.
    pub throughput: f64,
    pub run_throughputs: Vec<f64>,
    pub throughput_mean: f64,
    pub throughput_std: f64,
    pub feature_time_s: f64,
    pub forward_time_s: f64,
    pub config: ConfigSummary,
}

impl BenchReport {
    /// Standard deviation of the per-run throughput over its mean.
    pub fn relative_std(&self) -> f64 {
        self.throughput_std / self.throughput_mean
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        format!(
            "model: filters={} joints={} dim={} frames={} classes={} params={}\n\
             batch={} iterations={} threads={} runs={} (warmup {})\n\
             sequences per run: {}\n\
             wall time per run: {:.6} s (features {:.6} s, network {:.6} s)\n\
             throughput: {:.1} seq/s (per-run mean {:.1}, std {:.1})\n",
            c.filters,
            c.num_joints,
            c.coord_dim,
            c.frames,
            c.num_classes,
            c.parameters,
            self.batch_size,
            self.iterations,
            self.threads,
            self.runs,
            self.warmup_runs,
            self.sequences,
            self.wall_time_s,
            self.feature_time_s,
            self.forward_time_s,
            self.throughput,
            self.throughput_mean,
            self.throughput_std,
        )
    }
}

struct RunTimes {
    wall: f64,
    features: f64,
    forward: f64,
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.batch == 0 || cfg.iterations == 0 || cfg.threads == 0 {
        return Err(Error::InvalidArgument("batch, iterations and threads must be positive".into()));
    }
    if cfg.runs < MIN_RUNS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_RUNS} measured runs, got {}", cfg.runs)));
    }
    let model = match &cfg.model {
        Some(m) => m.clone(),
        None => DdNet::new(ModelConfig::shrec(14).with_filters(cfg.filters), cfg.seed)?,
    };
    let mc = model.config().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batch: Vec<SkeletonSequence> = (0..cfg.batch)
        .map(|_| random_sequence(&mut rng, mc.num_joints, mc.coord_dim, BENCH_SEQUENCE_LEN))
        .collect::<Result<_>>()?;

    for _ in 0..cfg.warmup {
        run_once(&model, &batch, cfg)?;
    }
    let mut times = Vec::with_capacity(cfg.runs);
    for _ in 0..cfg.runs {
        times.push(run_once(&model, &batch, cfg)?);
    }

    let n = cfg.runs as f64;
    let sequences = cfg.batch * cfg.iterations;
    let wall = times.iter().map(|t| t.wall).sum::<f64>() / n;
    let run_throughputs: Vec<f64> = times.iter().map(|t| sequences as f64 / t.wall).collect();
    let mean = run_throughputs.iter().sum::<f64>() / n;
    let var = run_throughputs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(BenchReport {
        batch_size: cfg.batch,
        iterations: cfg.iterations,
        sequences,
        runs: cfg.runs,
        warmup_runs: cfg.warmup,
        threads: cfg.threads,
        wall_time_s: wall,
        throughput: sequences as f64 / wall,
        run_throughputs,
        throughput_mean: mean,
        throughput_std: var.sqrt(),
        feature_time_s: times.iter().map(|t| t.features).sum::<f64>() / n,
        forward_time_s: times.iter().map(|t| t.forward).sum::<f64>() / n,
        config: ConfigSummary {
            filters: mc.filters,
            num_joints: mc.num_joints,
            coord_dim: mc.coord_dim,
            frames: mc.frames,
            num_classes: mc.num_classes,
            parameters: model.num_parameters(),
        },
    })
}

/// Splits `items` into at most `threads` contiguous chunks and maps each on
/// its own scoped thread, preserving order.
fn parallel_chunks<I: Sync, O: Send>(
    items: &[I],
    threads: usize,
    f: impl Fn(&[I]) -> Result<O> + Sync,
) -> Result<Vec<O>> {
    if threads <= 1 || items.len() <= 1 {
        return Ok(vec![f(items)?]);
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| f(c))).collect();
        handles.into_iter().map(|h| h.join().expect("bench worker panicked")).collect()
    })
}

fn run_once(model: &DdNet, batch: &[SkeletonSequence], cfg: &BenchConfig) -> Result<RunTimes> {
    let frames = model.config().frames;
    let mut features = 0.0;
    let mut forward = 0.0;
    let start = Instant::now();
    for _ in 0..cfg.iterations {
        let t0 = Instant::now();
        let bundles: Vec<Vec<FeatureBundle>> = parallel_chunks(batch, cfg.threads, |chunk| {
            chunk.iter().map(|s| build_feature_bundle(s, frames)).collect()
        })?;
        let t1 = Instant::now();
        let predictions = parallel_chunks(&bundles, cfg.threads, |chunks| {
            chunks
                .iter()
                .map(|b| model.predict_classes(&Inputs::from_bundles(b, model.config())?))
                .collect::<Result<Vec<_>>>()
        })?;
        let t2 = Instant::now();
        debug_assert_eq!(predictions.iter().flatten().map(Vec::len).sum::<usize>(), batch.len());
        features += (t1 - t0).as_secs_f64();
        forward += (t2 - t1).as_secs_f64();
    }
    Ok(RunTimes { wall: start.elapsed().as_secs_f64(), features, forward })
}
