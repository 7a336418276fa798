//! Training with Adam, reduce-on-plateau learning-rate annealing and
//! temporal subsampling augmentation; evaluation with a confusion matrix.

mod adam;

pub use adam::{adam_step, AdamState};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor};
use crate::error::{Error, Result};
use crate::features::{augment_subsample, build_feature_bundle, FeatureBundle};
use crate::io::CanonicalDataset;
use crate::model::{argmax, DdNet, Inputs, Mode, ModelConfig};

/// Optimization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Samples per optimizer step; 0 puts the whole training set in one batch.
    pub batch_size: usize,
    pub lr_max: f64,
    pub lr_min: f64,
    /// Epochs without a validation improvement before the rate is cut.
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    /// Fraction of frames kept by the subsampling augmentation.
    pub augment_ratio: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 600,
            batch_size: 256,
            lr_max: 1e-3,
            lr_min: 1e-5,
            plateau_patience: 20,
            plateau_factor: 0.5,
            augment_ratio: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_max && self.lr_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < lr_min <= lr_max, got {} and {}",
                self.lr_min, self.lr_max
            )));
        }
        if !(self.augment_ratio > 0.0 && self.augment_ratio <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "augment ratio must be in (0, 1], got {}",
                self.augment_ratio
            )));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "plateau factor must be in (0, 1), got {}",
                self.plateau_factor
            )));
        }
        Ok(())
    }
}

/// Metrics of one completed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy of the train-mode predictions made while fitting.
    pub train_acc: f64,
    pub val_acc: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Epoch whose weights were returned (best validation accuracy, earliest on ties).
    pub best_epoch: Option<usize>,
}

impl TrainHistory {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_acc,val_acc,lr";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:e}\n",
                r.epoch, r.train_loss, r.train_acc, r.val_acc, r.lr
            ));
        }
        out
    }
}

/// Learning rate for the next epoch.
///
/// Starts at `lr_max`; each time validation accuracy fails to improve for
/// `plateau_patience` consecutive epochs the rate is multiplied by
/// `plateau_factor` (and the wait restarts), never going below `lr_min`.
pub fn lr_schedule(history: &TrainHistory, cfg: &TrainConfig) -> f64 {
    let mut lr = cfg.lr_max;
    let mut best = f64::NEG_INFINITY;
    let mut wait = 0;
    for r in &history.records {
        if r.val_acc > best {
            best = r.val_acc;
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.plateau_patience.max(1) {
                lr = (lr * cfg.plateau_factor).max(cfg.lr_min);
                wait = 0;
            }
        }
    }
    lr
}

/// Derives an independent stream seed from a base seed and two counters.
pub(crate) fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_compatible(model: &ModelConfig, data: &CanonicalDataset) -> Result<()> {
    if model.num_joints != data.num_joints() || model.coord_dim != data.coord_dim() {
        return Err(Error::Incompatible(format!(
            "model expects {} joints in {}D, dataset has {} joints in {}D",
            model.num_joints,
            model.coord_dim,
            data.num_joints(),
            data.coord_dim()
        )));
    }
    if model.num_classes != data.num_classes() {
        return Err(Error::Incompatible(format!(
            "model has {} classes, dataset has {}",
            model.num_classes,
            data.num_classes()
        )));
    }
    Ok(())
}

/// Feature bundles of every sample, unaugmented.
pub fn dataset_bundles(data: &CanonicalDataset, frames: usize) -> Result<Vec<FeatureBundle>> {
    data.samples()
        .iter()
        .map(|s| build_feature_bundle(&s.sequence, frames))
        .collect()
}

/// Fits a freshly initialized model.
///
/// Each epoch shuffles the training set, subsamples every sequence's frames,
/// and takes one Adam step per batch. After the epoch the model is scored on
/// `val` (or on the training set when `val` is `None`) in inference mode, and
/// the weights with the best score are returned.
pub fn train(
    data: &CanonicalDataset,
    val: Option<&CanonicalDataset>,
    model_cfg: ModelConfig,
    cfg: &TrainConfig,
) -> Result<(DdNet, TrainHistory)> {
    train_with_progress(data, val, model_cfg, cfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with_progress(
    data: &CanonicalDataset,
    val: Option<&CanonicalDataset>,
    model_cfg: ModelConfig,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(DdNet, TrainHistory)> {
    cfg.validate()?;
    check_compatible(&model_cfg, data)?;
    let val = val.unwrap_or(data);
    check_compatible(&model_cfg, val)?;

    let frames = model_cfg.frames;
    let mut model = DdNet::new(model_cfg, cfg.seed)?;
    let mut adam = AdamState::new(model.params().map(|(_, t)| t.len()));
    let val_bundles = dataset_bundles(val, frames)?;
    let fixed_bundles = if cfg.augment_ratio >= 1.0 {
        Some(dataset_bundles(data, frames)?)
    } else {
        None
    };

    let n = data.len();
    let batch_size = if cfg.batch_size == 0 { n } else { cfg.batch_size.min(n) };
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, DdNet)> = None;
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..cfg.epochs {
        let lr = lr_schedule(&history, cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, epoch as u64, 0));
        order.sort_unstable();
        order.shuffle(&mut rng);

        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (step, chunk) in order.chunks(batch_size).enumerate() {
            let mut bundles = Vec::with_capacity(chunk.len());
            let mut labels = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let s = &data.samples()[i];
                let bundle = match &fixed_bundles {
                    Some(b) => b[i].clone(),
                    None => {
                        let seed = mix_seed(cfg.seed, epoch as u64, 1 + i as u64);
                        let seq = augment_subsample(&s.sequence, cfg.augment_ratio, seed)?;
                        build_feature_bundle(&seq, frames)?
                    }
                };
                bundles.push(bundle);
                labels.push(s.label);
            }
            let inputs = Inputs::from_bundles(&bundles, model.config())?;

            let (loss, preds, grads) = {
                let mut g = Graph::new();
                let bound = model.bind(&mut g, true);
                let dropout_seed = mix_seed(cfg.seed, epoch as u64, u64::MAX - step as u64);
                let out = model.forward(&mut g, &bound, &inputs, Mode::Train { dropout_seed })?;
                let loss = g.softmax_cross_entropy(out.logits, &labels)?;
                let mut grads = g.backward(loss)?;
                let classes = model.config().num_classes;
                let preds: Vec<usize> = g.value(out.logits).data().chunks_exact(classes).map(argmax).collect();
                let grads: Vec<Tensor<f32>> = bound
                    .vars()
                    .iter()
                    .zip(model.params())
                    .map(|(&v, (_, p))| grads.take(v).unwrap_or_else(|| Tensor::zeros(p.shape())))
                    .collect();
                (g.value(loss).item() as f64, preds, grads)
            };
            if !loss.is_finite() {
                return Err(Error::Diverged { param: "loss".into() });
            }
            let grad_slices: Vec<&[f32]> = grads.iter().map(|t| t.data()).collect();
            adam_step(
                model.params_mut().map(|(k, t)| (k, t.data_mut())),
                &grad_slices,
                &mut adam,
                lr,
            )?;
            loss_sum += loss * chunk.len() as f64;
            correct += preds.iter().zip(&labels).filter(|(p, l)| p == l).count();
        }

        let val_acc = evaluate_bundles(&model, &val_bundles, val)?.accuracy;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / n as f64,
            train_acc: correct as f64 / n as f64,
            val_acc,
            lr,
        };
        on_epoch(&record);
        history.records.push(record);
        if best.as_ref().map_or(true, |(b, _)| val_acc > *b) {
            best = Some((val_acc, model.clone()));
            history.best_epoch = Some(epoch);
        }
    }
    let model = best.map(|(_, m)| m).unwrap_or(model);
    Ok((model, history))
}

/// Accuracy and confusion matrix of inference-mode predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]` counts.
    pub confusion: Vec<Vec<u64>>,
}

impl Evaluation {
    /// Confusion matrix as CSV, with class names heading the rows (true) and columns (predicted).
    pub fn confusion_csv(&self, names: &[String]) -> String {
        let mut out = String::from("true\\predicted");
        for n in names {
            out.push(',');
            out.push_str(&csv_field(n));
        }
        out.push('\n');
        for (name, row) in names.iter().zip(&self.confusion) {
            out.push_str(&csv_field(name));
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const EVAL_BATCH: usize = 256;

pub fn evaluate(model: &DdNet, data: &CanonicalDataset) -> Result<Evaluation> {
    check_compatible(model.config(), data)?;
    let bundles = dataset_bundles(data, model.config().frames)?;
    evaluate_bundles(model, &bundles, data)
}

fn evaluate_bundles(model: &DdNet, bundles: &[FeatureBundle], data: &CanonicalDataset) -> Result<Evaluation> {
    if bundles.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate on an empty dataset".into()));
    }
    let c = model.config().num_classes;
    let mut confusion = vec![vec![0u64; c]; c];
    let mut correct = 0u64;
    for (chunk, samples) in bundles.chunks(EVAL_BATCH).zip(data.samples().chunks(EVAL_BATCH)) {
        let inputs = Inputs::from_bundles(chunk, model.config())?;
        for (pred, s) in model.predict_classes(&inputs)?.into_iter().zip(samples) {
            confusion[s.label][pred] += 1;
            correct += (pred == s.label) as u64;
        }
    }
    Ok(Evaluation {
        accuracy: correct as f64 / bundles.len() as f64,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history(vals: &[f64]) -> TrainHistory {
        TrainHistory {
            records: vals
                .iter()
                .enumerate()
                .map(|(epoch, &val_acc)| EpochRecord {
                    epoch,
                    train_loss: 0.0,
                    train_acc: 0.0,
                    val_acc,
                    lr: 0.0,
                })
                .collect(),
            best_epoch: None,
        }
    }

    #[test]
    fn schedule_starts_at_max_and_holds_while_improving() {
        let cfg = TrainConfig::default();
        assert_eq!(lr_schedule(&TrainHistory::default(), &cfg), 1e-3);
        let improving: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(lr_schedule(&history(&improving), &cfg), 1e-3);
    }

    #[test]
    fn schedule_halves_after_patience_and_clamps() {
        let cfg = TrainConfig {
            plateau_patience: 3,
            ..TrainConfig::default()
        };
        assert_eq!(lr_schedule(&history(&[0.5, 0.5, 0.5]), &cfg), 1e-3);
        assert_eq!(lr_schedule(&history(&[0.5, 0.5, 0.5, 0.5]), &cfg), 5e-4);
        let flat = vec![0.5; 1000];
        assert_eq!(lr_schedule(&history(&flat), &cfg), 1e-5);
    }

    #[test]
    fn seeds_are_spread() {
        assert_ne!(mix_seed(0, 0, 1), mix_seed(0, 1, 0));
        assert_ne!(mix_seed(1, 0, 0), mix_seed(0, 0, 0));
    }

    #[test]
    fn bad_configs() {
        let mut c = TrainConfig::default();
        c.lr_min = 1e-2;
        assert!(c.validate().is_err());
        let c = TrainConfig {
            augment_ratio: 0.0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
