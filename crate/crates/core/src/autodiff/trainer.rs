use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adam_step, OptimizerState, Regressor, TargetScaling};
use crate::error::{Error, Result};
use crate::network::Parameters;
use crate::scene::SceneSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Stop after this many epochs without a new best validation MAE.
    pub patience: usize,
    /// Share of the training samples held out for validation; 0 disables it.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 100,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            patience: 20,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::invalid("validation_fraction must lie in [0, 1)"));
        }
        for (name, b) in [
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
        ] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1)")));
            }
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return Err(Error::invalid("adam_eps must be > 0"));
        }
        Ok(())
    }

    /// Samples held out for validation from a training set of `n >= 2`.
    pub fn validation_count(&self, n: usize) -> usize {
        if self.validation_fraction > 0.0 {
            ((n as f64 * self.validation_fraction).round() as usize).clamp(1, n - 1)
        } else {
            0
        }
    }

    /// Optimizer steps taken per epoch on a training set of `n >= 2`.
    pub fn steps_per_epoch(&self, n: usize) -> usize {
        (n - self.validation_count(n)).div_ceil(self.batch_size)
    }
}

/// Per-epoch mean training loss (standardized MSE) and validation MAE in dB.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory {
    pub train_loss: Vec<f64>,
    pub validation_mae: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M: Regressor> {
    /// Parameters from the epoch with the best validation MAE.
    pub model: M,
    pub history: LossHistory,
    pub best_epoch: usize,
    /// Optimizer state after the last epoch run.
    pub optimizer: OptimizerState,
    pub floor_hits: usize,
}

/// Trains from the model's current parameters with fresh optimizer state,
/// fitting the target scaling on the training portion.
pub fn train<M: Regressor>(
    model: M,
    samples: &[SceneSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome<M>> {
    let optimizer = OptimizerState::for_params(model.params());
    run(model, optimizer, samples, cfg, true)
}

/// Continues training with existing optimizer state and target scaling.
pub fn resume<M: Regressor>(
    model: M,
    optimizer: OptimizerState,
    samples: &[SceneSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome<M>> {
    if !optimizer.matches(model.params()) {
        return Err(Error::invalid(
            "optimizer state does not match model parameters",
        ));
    }
    run(model, optimizer, samples, cfg, false)
}

fn run<M: Regressor>(
    mut model: M,
    mut optimizer: OptimizerState,
    samples: &[SceneSample],
    cfg: &TrainConfig,
    fit_scaling: bool,
) -> Result<TrainOutcome<M>> {
    cfg.validate()?;
    if samples.len() < 2 {
        return Err(Error::invalid("training needs at least 2 samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let val_count = cfg.validation_count(samples.len());
    order.shuffle(&mut rng);
    let (val_idx, fit_idx) = order.split_at(val_count);
    let fit: Vec<SceneSample> = fit_idx.iter().map(|&i| samples[i]).collect();
    let validation: Vec<SceneSample> = val_idx.iter().map(|&i| samples[i]).collect();

    if fit_scaling {
        model.set_scaling(TargetScaling::fit(&fit));
    }

    let mut history = LossHistory::default();
    let mut best = (f64::INFINITY, model.params().clone(), 0usize);
    let mut floor_hits = 0;
    let mut batch_index = 0;
    let mut epoch_order: Vec<usize> = (0..fit.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        epoch_order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for idx in epoch_order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(idx.iter().map(|&i| fit[i]));
            let (stats, grads) = model.loss_and_gradient(&batch, batch_index)?;
            adam_step(model.params_mut(), &grads, &mut optimizer, cfg)?;
            if !model.params().all_finite() {
                return Err(Error::NumericFailure {
                    batch: batch_index,
                    detail: "parameters became non-finite after the update".into(),
                });
            }
            epoch_loss += stats.loss * batch.len() as f64;
            floor_hits += stats.floor_hits;
            batch_index += 1;
        }
        let epoch_loss = epoch_loss / fit.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::NumericFailure {
                batch: batch_index,
                detail: format!("non-finite training loss in epoch {epoch}"),
            });
        }
        history.train_loss.push(epoch_loss);

        // Without a validation split, selection falls back to training loss.
        let score = if validation.is_empty() {
            epoch_loss
        } else {
            let pred = model.predict_samples(&validation)?;
            let mae = pred
                .iter()
                .zip(&validation)
                .map(|(p, s)| (p - s.strength).abs())
                .sum::<f64>()
                / validation.len() as f64;
            history.validation_mae.push(mae);
            mae
        };
        debug!("epoch {epoch}: train loss {epoch_loss:.5}, score {score:.4}");
        if score < best.0 {
            best = (score, model.params().clone(), epoch);
        } else if epoch - best.2 >= cfg.patience {
            info!("early stop at epoch {epoch}; best epoch {}", best.2);
            break;
        }
    }

    let (_, best_params, best_epoch) = best;
    *model.params_mut() = best_params;
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        optimizer,
        floor_hits,
    })
}
