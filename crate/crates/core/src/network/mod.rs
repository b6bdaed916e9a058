//! Stage networks (TN and RN), the two-stage R-NeRF model and checkpoints.

pub mod checkpoint;
pub(crate) mod layer;
mod model;
pub(crate) mod render;
mod stage;

pub use layer::{sigmoid, softplus, LayerParams, Parameters};
pub use model::{predict_strength, ModelConfig, ModelParams, RNerfModel, MAX_ROWS_PER_PASS};
pub use stage::{rn_forward, tn_forward, NetworkShape, StageActivations, StageNetwork};
