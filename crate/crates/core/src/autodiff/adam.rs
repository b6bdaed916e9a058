use super::TrainConfig;
use crate::error::{Error, Result};
use crate::network::Parameters;

/// Adam first/second moment accumulators, one buffer per parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step: u64,
}

impl OptimizerState {
    pub fn for_params<P: Parameters + ?Sized>(params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .param_slices()
            .iter()
            .map(|s| vec![0.0; s.len()])
            .collect();
        Self {
            second_moment: zeros.clone(),
            first_moment: zeros,
            step: 0,
        }
    }

    pub fn matches<P: Parameters + ?Sized>(&self, params: &P) -> bool {
        let slices = params.param_slices();
        slices.len() == self.first_moment.len()
            && slices.len() == self.second_moment.len()
            && slices
                .iter()
                .zip(self.first_moment.iter().zip(&self.second_moment))
                .all(|(p, (m, v))| p.len() == m.len() && p.len() == v.len())
    }
}

/// One bias-corrected Adam update, element-wise over every parameter.
pub fn adam_step<P: Parameters>(
    params: &mut P,
    grads: &P,
    state: &mut OptimizerState,
    cfg: &TrainConfig,
) -> Result<()> {
    if !state.matches(params) || !state.matches(grads) {
        return Err(Error::invalid(
            "optimizer state, parameters and gradients differ in shape",
        ));
    }
    state.step += 1;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let step = state.step as i32;
    let c1 = 1.0 - b1.powi(step);
    let c2 = 1.0 - b2.powi(step);
    let lr = cfg.learning_rate;
    let eps = cfg.adam_eps;

    let grads = grads.param_slices();
    for (((p, g), m), v) in params
        .param_slices_mut()
        .into_iter()
        .zip(grads)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
