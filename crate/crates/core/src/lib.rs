//! Two-stage neural radiance field for RIS-assisted signal strength prediction.
//!
//! Pipeline: sample voxels along rays ([`geometry`]), encode them
//! ([`encoding`]), predict per-voxel transmission and emitted signal with the
//! stage networks ([`network`]), aggregate phasors ([`radiometry`]) and train
//! with exact gradients and Adam ([`autodiff`]). [`scene`] provides the
//! synthetic ground truth and [`evaluation`] the metrics and baselines.

pub mod autodiff;
pub mod encoding;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod network;
pub mod radiometry;
pub mod scene;

pub use autodiff::{Regressor, TargetScaling, TrainConfig};
pub use encoding::{EncodingConfig, InputEncoding, SceneBounds};
pub use error::{Error, Result};
pub use geometry::{Direction3, Point3, RayBundle, RayTracingConfig};
pub use network::{ModelConfig, ModelParams, NetworkShape, RNerfModel};
pub use radiometry::{PhasorSignal, RadioConstants};
pub use scene::{OracleConfig, Placement, SceneLayout, SceneSample};
