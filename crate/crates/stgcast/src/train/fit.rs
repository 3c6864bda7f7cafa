//! The training loop: seeded batch shuffling, tape-per-batch gradient
//! steps under Adam with global-norm clipping, per-epoch validation on the
//! chronological holdout, and patience-based early stopping.

use std::time::Instant;

use log::{info, warn};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{chronological_split, WindowedDataset};
use crate::error::{Error, Result};
use crate::fsutil::elapsed_seconds;
use crate::nn::ForecastModel;
use crate::rng::{stream_rng, Stream};
use crate::tensor::{DenseMatrix, Tape, Tensor3};
use crate::train::adam::Adam;
use crate::train::loss::regularized_loss;
use crate::train::norm::NormStats;

pub const GRAD_CLIP_NORM: f64 = 5.0;

fn default_learning_rate() -> f64 {
    1e-3
}
fn default_epochs() -> usize {
    100
}
fn default_batch_size() -> usize {
    32
}
fn default_lambda() -> f64 {
    0.0015
}
fn default_split() -> f64 {
    0.8
}
fn default_hidden() -> usize {
    64
}
fn default_gc_hidden() -> usize {
    16
}
fn default_gc_out() -> usize {
    8
}
fn default_k_hops() -> usize {
    1
}
fn default_seed() -> u64 {
    42
}
fn default_patience() -> usize {
    10
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_lambda")]
    pub lambda_reg: f64,
    #[serde(default = "default_split")]
    pub split: f64,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_gc_hidden")]
    pub gc_hidden: usize,
    #[serde(default = "default_gc_out")]
    pub gc_out: usize,
    #[serde(default = "default_k_hops")]
    pub k_hops: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_patience")]
    pub early_stop_patience: usize,
    #[serde(default)]
    pub regularize_biases: bool,
    #[serde(default)]
    pub strict_no_leak: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            lambda_reg: default_lambda(),
            split: default_split(),
            hidden: default_hidden(),
            gc_hidden: default_gc_hidden(),
            gc_out: default_gc_out(),
            k_hops: default_k_hops(),
            seed: default_seed(),
            early_stop_patience: default_patience(),
            regularize_biases: false,
            strict_no_leak: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.lambda_reg < 0.0 {
            return Err(Error::Config(format!("lambda_reg must be >= 0, got {}", self.lambda_reg)));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::Config(format!("split must be in (0,1), got {}", self.split)));
        }
        if self.hidden == 0 || self.gc_hidden == 0 || self.gc_out == 0 {
            return Err(Error::Config("hidden, gc_hidden and gc_out must be >= 1".into()));
        }
        if self.k_hops == 0 {
            return Err(Error::Config("k_hops must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

pub struct FitResult<M> {
    /// Parameters of the best-validation-loss epoch.
    pub model: M,
    pub stats: NormStats,
    pub history: Vec<EpochRecord>,
    pub train_seconds: f64,
    pub best_epoch: Option<usize>,
}

fn stack_targets(y: &Tensor3, indices: &[usize]) -> DenseMatrix {
    let (_, t_out, d) = y.dims();
    let mut values = Vec::with_capacity(indices.len() * t_out * d);
    for &i in indices {
        values.extend_from_slice(y.sample(i).values());
    }
    DenseMatrix::from_vec(indices.len() * t_out, d, values).expect("consistent layout")
}

/// Mean squared error of the model on normalized windows; the validation
/// signal. Target values are read only for the comparison, never for
/// gradients.
fn validation_mse<M: ForecastModel>(model: &M, x: &Tensor3, y: &Tensor3) -> Result<f64> {
    let (n, t_out, d) = y.dims();
    let mut total = 0.0;
    for i in 0..n {
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let pred = model.forward_sample(&mut tape, &bound, &x.sample(i))?;
        let diff = tape.value(pred).sub(&y.sample(i))?;
        total += diff.sq_sum();
    }
    Ok(total / (n * t_out * d) as f64)
}

/// Trains on the chronological head of `ds`, validating on the tail.
/// Returns the best-validation parameters with per-epoch history.
pub fn fit<M: ForecastModel>(model: M, ds: &WindowedDataset, cfg: &TrainConfig) -> Result<FitResult<M>> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::Contract("fit requires a non-empty dataset".into()));
    }
    let run_start = Instant::now();
    let (train, holdout) = chronological_split(ds, cfg.split, cfg.strict_no_leak)?;
    let stats = NormStats::from_values(train.x.values().iter().chain(train.y.values()).copied())?;

    let train_x = stats.normalize(&train.x);
    let train_y = stats.normalize(&train.y);
    let val_x = stats.normalize(&holdout.x);
    let val_y = stats.normalize(&holdout.y);

    let mut model = model;
    let names: Vec<&'static str> = model.param_names().to_vec();
    let shapes: Vec<(usize, usize)> = names.iter().map(|n| model.param(n).shape()).collect();
    let reg_names: Vec<&'static str> = names
        .iter()
        .copied()
        .filter(|n| cfg.regularize_biases || !model.is_bias(n))
        .collect();

    let mut adam = Adam::new(cfg.learning_rate, &shapes, Some(GRAD_CLIP_NORM));
    let mut shuffle_rng = stream_rng(cfg.seed, Stream::Shuffle);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, M)> = None;
    let mut epochs_without_improvement = 0usize;

    let n_train = train.len();

    for epoch in 1..=cfg.epochs {
        let epoch_start = Instant::now();
        let mut order: Vec<usize> = (0..n_train).collect();
        order.shuffle(&mut shuffle_rng);

        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let mut tape = Tape::new();
            let bound = model.bind(&mut tape);

            let mut preds = None;
            for &i in chunk {
                let pred = model.forward_sample(&mut tape, &bound, &train_x.sample(i))?;
                preds = Some(match preds {
                    None => pred,
                    Some(acc) => tape.concat_rows(acc, pred)?,
                });
            }
            let preds = preds.expect("non-empty batch");
            let targets = tape.constant(stack_targets(&train_y, chunk));
            let weight_ids: Vec<_> = reg_names.iter().map(|n| M::bound_param(&bound, n)).collect();
            let loss = regularized_loss(&mut tape, preds, targets, &weight_ids, cfg.lambda_reg)?;

            tape.backward(loss)?;
            let grads: Vec<DenseMatrix> = names
                .iter()
                .map(|n| tape.grad(M::bound_param(&bound, n)).clone())
                .collect();
            let loss_value = tape.value(loss).get(0, 0);
            drop(tape);

            let mut params = model.params_mut_all();
            debug_assert_eq!(params.len(), names.len());
            adam.step(&mut params, &grads).map_err(|e| match e {
                Error::NumericFault(msg) => Error::NumericFault(format!("epoch {epoch}: {msg}")),
                other => other,
            })?;

            loss_sum += loss_value * chunk.len() as f64;
        }
        let train_loss = loss_sum / n_train as f64;
        let val_loss = validation_mse(&model, &val_x, &val_y)?;
        let seconds = elapsed_seconds(epoch_start);
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            seconds,
        });
        info!("epoch {epoch}: train_loss {train_loss:.6}, val_loss {val_loss:.6}, {seconds:.2}s");

        let improved = match &best {
            None => true,
            Some((best_val, _, _)) => val_loss < *best_val,
        };
        if improved {
            best = Some((val_loss, epoch, model.clone()));
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
            if cfg.early_stop_patience > 0 && epochs_without_improvement >= cfg.early_stop_patience {
                info!("early stop after {epoch} epochs ({epochs_without_improvement} without improvement)");
                break;
            }
        }
    }

    let (best_epoch, final_model) = match best {
        Some((val, epoch, m)) => {
            if !val.is_finite() {
                warn!("validation loss never became finite; returning first-epoch parameters");
            }
            (Some(epoch), m)
        }
        None => (None, model),
    };
    Ok(FitResult {
        model: final_model,
        stats,
        history,
        train_seconds: elapsed_seconds(run_start),
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, make_windows};
    use crate::graph::{DetectorGraph, NormalizedAdjacency};
    use crate::nn::GcGruModel;

    fn tiny_setup(steps: usize) -> (WindowedDataset, GcGruModel, TrainConfig) {
        let graph = DetectorGraph::ring(4).unwrap();
        let table = generate_synthetic(&graph, steps, 5).unwrap();
        let ds = make_windows(&table, 8, 3).unwrap();
        let a_hat = NormalizedAdjacency::build(&graph, 1).unwrap();
        let model = GcGruModel::new(a_hat, 8, 3, 4, 3, 2, 5);
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 16,
            hidden: 4,
            gc_hidden: 3,
            gc_out: 2,
            seed: 5,
            ..TrainConfig::default()
        };
        (ds, model, cfg)
    }

    #[test]
    fn zero_epochs_returns_initialized_model_and_empty_history() {
        let (ds, model, mut cfg) = tiny_setup(120);
        cfg.epochs = 0;
        let before = model.param("w_out").clone();
        let result = fit(model, &ds, &cfg).unwrap();
        assert!(result.history.is_empty());
        assert_eq!(result.best_epoch, None);
        assert_eq!(result.model.param("w_out"), &before);
    }

    #[test]
    fn identical_seeds_produce_identical_histories_and_parameters() {
        let (ds, model, cfg) = tiny_setup(140);
        let r1 = fit(model.clone(), &ds, &cfg).unwrap();
        let r2 = fit(model, &ds, &cfg).unwrap();
        assert_eq!(r1.history.len(), r2.history.len());
        for (a, b) in r1.history.iter().zip(&r2.history) {
            assert_eq!(a.train_loss, b.train_loss);
            assert_eq!(a.val_loss, b.val_loss);
        }
        for name in r1.model.param_names() {
            assert_eq!(r1.model.param(name), r2.model.param(name), "param {name}");
        }
    }

    #[test]
    fn training_reduces_the_loss() {
        let (ds, model, mut cfg) = tiny_setup(220);
        cfg.epochs = 8;
        cfg.learning_rate = 3e-3;
        let result = fit(model, &ds, &cfg).unwrap();
        let first = result.history.first().unwrap().train_loss;
        let last = result.history.last().unwrap().train_loss;
        assert!(last < first, "train loss did not descend: {first} -> {last}");
    }

    #[test]
    fn poisoned_validation_targets_leave_training_gradients_finite() {
        let (mut ds, model, cfg) = tiny_setup(160);
        // NaN-poison every target in the holdout tail of the split.
        let n = ds.len();
        let n_train = (cfg.split * n as f64).floor() as usize;
        let (_, t_out, d) = ds.y.dims();
        for i in n_train..n {
            for t in 0..t_out {
                for j in 0..d {
                    ds.y.set(i, t, j, f64::NAN);
                }
            }
        }
        let result = fit(model, &ds, &cfg).unwrap();
        for record in &result.history {
            assert!(record.train_loss.is_finite(), "training loss went non-finite");
            assert!(record.val_loss.is_nan());
        }
        for name in result.model.param_names() {
            assert!(result.model.param(name).is_finite(), "param {name} has non-finite values");
        }
    }

    #[test]
    fn early_stopping_respects_patience() {
        let (ds, model, mut cfg) = tiny_setup(160);
        cfg.epochs = 50;
        cfg.early_stop_patience = 2;
        // A huge learning rate makes validation loss erratic, so the
        // patience counter actually trips.
        cfg.learning_rate = 5.0;
        let result = fit(model, &ds, &cfg).unwrap();
        assert!(result.history.len() <= 50);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let (ds, model, cfg) = tiny_setup(120);
        let empty = WindowedDataset {
            x: Tensor3::zeros(0, 8, 4),
            y: Tensor3::zeros(0, 3, 4),
            starts: vec![],
            t_in: 8,
            t_out: 3,
        };
        let _ = ds;
        assert!(fit(model, &empty, &cfg).is_err());
    }
}
