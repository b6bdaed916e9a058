//! Exact reverse-mode gradients, MSE loss, Adam and the training loop.
//!
//! Gradients are hand-derived for the fixed operator set of the pipeline
//! (affine maps, ReLU, softplus, complex sums and products, `log10`,
//! squared error); there is no general-purpose graph.

mod adam;
mod gradcheck;
mod loss;
mod trainer;

pub use adam::{adam_step, OptimizerState};
pub use gradcheck::{batch_loss, check_gradient, GradientCheck};
pub use loss::mse_loss;
pub use trainer::{resume, train, LossHistory, TrainConfig, TrainOutcome};

use crate::error::Result;
use crate::network::{ModelParams, Parameters, RNerfModel};
use crate::scene::{Placement, SceneSample};

/// Affine map between dB targets and the standardized space the loss works in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetScaling {
    pub mean: f64,
    pub std: f64,
}

impl TargetScaling {
    pub fn identity() -> Self {
        Self {
            mean: 0.0,
            std: 1.0,
        }
    }

    /// Mean and population standard deviation of the targets; a constant set gets `std = 1`.
    pub fn fit(samples: &[SceneSample]) -> Self {
        if samples.is_empty() {
            return Self::identity();
        }
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| s.strength).sum::<f64>() / n;
        let var = samples
            .iter()
            .map(|s| (s.strength - mean).powi(2))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        Self {
            mean,
            std: if std > 1e-12 { std } else { 1.0 },
        }
    }

    pub fn standardize(&self, db: f64) -> f64 {
        (db - self.mean) / self.std
    }

    pub fn restore(&self, z: f64) -> f64 {
        self.mean + self.std * z
    }
}

/// Loss over one batch plus the number of samples whose amplitude hit the dB floor.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatchLoss {
    pub loss: f64,
    pub floor_hits: usize,
}

/// A model trainable by [`train`]: predictions in dB and exact batch gradients of
/// the standardized MSE.
pub trait Regressor: Clone {
    type Params: Parameters + Clone;

    fn params(&self) -> &Self::Params;
    fn params_mut(&mut self) -> &mut Self::Params;
    fn scaling(&self) -> TargetScaling;
    fn set_scaling(&mut self, scaling: TargetScaling);

    fn predict(&self, placements: &[Placement]) -> Result<Vec<f64>>;

    /// `mean(((pred - target) / std)^2)` over the batch and its gradient.
    fn loss_and_gradient(
        &self,
        batch: &[SceneSample],
        batch_index: usize,
    ) -> Result<(BatchLoss, Self::Params)>;

    fn predict_samples(&self, samples: &[SceneSample]) -> Result<Vec<f64>> {
        let placements: Vec<Placement> = samples.iter().map(SceneSample::placement).collect();
        self.predict(&placements)
    }
}

/// Gradient of the batch loss with respect to every parameter of the two-stage model.
pub fn backward(model: &RNerfModel, batch: &[SceneSample]) -> Result<ModelParams> {
    model.loss_and_gradient(batch, 0).map(|(_, g)| g)
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::encoding::InputEncoding;
    use crate::geometry::RayTracingConfig;
    use crate::network::{ModelConfig, NetworkShape, RNerfModel};
    use crate::scene::{generate_dataset, OracleConfig, SceneLayout, SceneSample};

    /// L = 2, M = 2, N = 2, hidden width 8.
    pub fn tiny_model(seed: u64) -> RNerfModel {
        let layout = SceneLayout::default();
        let bounds = layout.bounds().unwrap();
        let rays = RayTracingConfig::new(2, 2, 0.0, 1.0).unwrap();
        let cfg = ModelConfig::new(
            rays,
            InputEncoding::new(2, true).unwrap(),
            NetworkShape::uniform(3, 8),
            bounds,
        );
        RNerfModel::new(cfg, seed).unwrap()
    }

    pub fn small_scene(count: usize, seed: u64) -> Vec<SceneSample> {
        let oracle = OracleConfig {
            rows: 2,
            cols: 2,
            ..OracleConfig::default()
        };
        generate_dataset(&SceneLayout::default(), count, &oracle, seed).unwrap()
    }
}
