use super::{mse_loss, Regressor};
use crate::error::{Error, Result};
use crate::network::Parameters;
use crate::scene::SceneSample;

/// Largest disagreement between analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    /// `|analytic - numeric| / max(|analytic|, |numeric|, floor)` maximized over parameters.
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub checked: usize,
}

/// Standardized batch loss recomputed from predictions alone.
pub fn batch_loss<M: Regressor>(model: &M, batch: &[SceneSample]) -> Result<f64> {
    let s = model.scaling();
    let pred: Vec<f64> = model
        .predict_samples(batch)?
        .into_iter()
        .map(|p| s.standardize(p))
        .collect();
    let target: Vec<f64> = batch.iter().map(|b| s.standardize(b.strength)).collect();
    mse_loss(&pred, &target)
}

fn flat_get<P: Parameters>(p: &P, mut i: usize) -> f64 {
    for s in p.param_slices() {
        if i < s.len() {
            return s[i];
        }
        i -= s.len();
    }
    unreachable!("parameter index out of range")
}

fn flat_set<P: Parameters>(p: &mut P, mut i: usize, v: f64) {
    for s in p.param_slices_mut() {
        if i < s.len() {
            s[i] = v;
            return;
        }
        i -= s.len();
    }
    unreachable!("parameter index out of range")
}

/// Compares `loss_and_gradient` against central differences of [`batch_loss`]
/// on every `stride`-th parameter.
pub fn check_gradient<M: Regressor>(
    model: &M,
    batch: &[SceneSample],
    step: f64,
    stride: usize,
    floor: f64,
) -> Result<GradientCheck> {
    if step.is_nan() || step <= 0.0 || stride == 0 {
        return Err(Error::invalid(
            "gradient check needs step > 0 and stride >= 1",
        ));
    }
    let (_, grad) = model.loss_and_gradient(batch, 0)?;
    let mut probe = model.clone();
    let mut report = GradientCheck {
        max_relative_error: 0.0,
        worst_index: 0,
        checked: 0,
    };
    for i in (0..grad.param_count()).step_by(stride) {
        let x = flat_get(probe.params(), i);
        flat_set(probe.params_mut(), i, x + step);
        let up = batch_loss(&probe, batch)?;
        flat_set(probe.params_mut(), i, x - step);
        let down = batch_loss(&probe, batch)?;
        flat_set(probe.params_mut(), i, x);
        let numeric = (up - down) / (2.0 * step);
        let analytic = flat_get(&grad, i);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
        if rel > report.max_relative_error {
            report.max_relative_error = rel;
            report.worst_index = i;
        }
        report.checked += 1;
    }
    Ok(report)
}
