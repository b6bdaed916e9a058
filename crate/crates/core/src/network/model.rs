use std::collections::HashMap;
use std::f64::consts::LN_10;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layer::Parameters;
use super::render::{self, view_direction, StageQuery};
use super::stage::{rn_forward, tn_forward, NetworkShape, StageNetwork};
use crate::autodiff::{BatchLoss, Regressor, TargetScaling};
use crate::encoding::{InputEncoding, SceneBounds};
use crate::error::{Error, Result};
use crate::geometry::{build_ray_bundle, Point3, RayBundle, RayTemplate, RayTracingConfig};
use crate::radiometry::{
    amplitude_db, render_stage, render_total, strength_db, PhasorSignal, VoxelField,
    DEFAULT_FLOOR_EPS,
};
use crate::scene::{Placement, SceneSample};

/// Upper bound on voxel rows pushed through a stage network at once.
pub const MAX_ROWS_PER_PASS: usize = 16_384;

/// Parameters of both stages: TX to RIS (`stage1`) and RIS to RX (`stage2`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub stage1: StageNetwork,
    pub stage2: StageNetwork,
}

impl ModelParams {
    pub fn init(shape: &NetworkShape, encoding: &InputEncoding, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            stage1: StageNetwork::init(shape, encoding, 0, &mut rng)?,
            stage2: StageNetwork::init(shape, encoding, 0, &mut rng)?,
        })
    }

    pub fn zeros(shape: &NetworkShape, encoding: &InputEncoding) -> Result<Self> {
        Ok(Self {
            stage1: StageNetwork::zeros(shape, encoding, 0)?,
            stage2: StageNetwork::zeros(shape, encoding, 0)?,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            stage1: self.stage1.zeros_like(),
            stage2: self.stage2.zeros_like(),
        }
    }
}

impl Parameters for ModelParams {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut v = self.stage1.param_slices();
        v.extend(self.stage2.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.stage1.param_slices_mut();
        v.extend(self.stage2.param_slices_mut());
        v
    }
}

/// Everything besides the weights that fixes the model's input-output map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub rays: RayTracingConfig,
    pub encoding: InputEncoding,
    pub shape: NetworkShape,
    pub bounds: SceneBounds,
    pub floor_eps: f64,
}

impl ModelConfig {
    pub fn new(
        rays: RayTracingConfig,
        encoding: InputEncoding,
        shape: NetworkShape,
        bounds: SceneBounds,
    ) -> Self {
        Self {
            rays,
            encoding,
            shape,
            bounds,
            floor_eps: DEFAULT_FLOOR_EPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rays.validate()?;
        self.shape.validate()?;
        self.bounds.validate()?;
        if self.encoding.use_pe && self.encoding.levels == 0 {
            return Err(Error::invalid("positional encoding needs levels >= 1"));
        }
        if self.floor_eps.is_nan() || self.floor_eps <= 0.0 {
            return Err(Error::invalid("floor_eps must be positive"));
        }
        Ok(())
    }
}

/// The two-stage model: stage renders multiplied, converted to dB and offset by the target mean.
#[derive(Debug, Clone)]
pub struct RNerfModel {
    pub params: ModelParams,
    config: ModelConfig,
    scaling: TargetScaling,
    template: RayTemplate,
}

impl RNerfModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = ModelParams::init(&config.shape, &config.encoding, seed)?;
        Self::from_params(config, params, TargetScaling::identity())
    }

    pub fn from_params(
        config: ModelConfig,
        params: ModelParams,
        scaling: TargetScaling,
    ) -> Result<Self> {
        config.validate()?;
        let expect = ModelParams::zeros(&config.shape, &config.encoding)?;
        let same_shape = expect
            .param_slices()
            .iter()
            .map(|s| s.len())
            .eq(params.param_slices().iter().map(|s| s.len()));
        if !same_shape {
            return Err(Error::invalid(
                "parameter shapes do not match the model configuration",
            ));
        }
        Ok(Self {
            template: RayTemplate::new(&config.rays)?,
            params,
            config,
            scaling,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn chunk_len(&self) -> usize {
        (MAX_ROWS_PER_PASS / self.template.len()).max(1)
    }

    fn stage_queries(chunk: &[Placement]) -> (Vec<StageQuery>, Vec<usize>, Vec<StageQuery>) {
        // Stage 1 only depends on (tx, ris); samples sharing them share one render.
        let mut index: HashMap<[u64; 6], usize> = HashMap::new();
        let mut q1 = Vec::new();
        let mut map1 = Vec::with_capacity(chunk.len());
        for p in chunk {
            let key = [p.tx.x, p.tx.y, p.tx.z, p.ris.x, p.ris.y, p.ris.z].map(f64::to_bits);
            let next = q1.len();
            let idx = *index.entry(key).or_insert(next);
            if idx == next {
                q1.push(StageQuery {
                    origin: p.ris,
                    emitter: p.tx,
                    extra: None,
                });
            }
            map1.push(idx);
        }
        let q2 = chunk
            .iter()
            .map(|p| StageQuery {
                origin: p.rx,
                emitter: p.ris,
                extra: None,
            })
            .collect();
        (q1, map1, q2)
    }

    /// Stage renders for each placement.
    pub fn render(&self, placements: &[Placement]) -> Vec<(PhasorSignal, PhasorSignal)> {
        let c = &self.config;
        let mut out = Vec::with_capacity(placements.len());
        for chunk in placements.chunks(self.chunk_len()) {
            let (q1, map1, q2) = Self::stage_queries(chunk);
            let s1 = render::render_batch(
                &self.params.stage1,
                &self.template,
                &c.encoding,
                &c.bounds,
                &q1,
            );
            let s2 = render::render_batch(
                &self.params.stage2,
                &self.template,
                &c.encoding,
                &c.bounds,
                &q2,
            );
            for (i, &j) in map1.iter().enumerate() {
                out.push((
                    PhasorSignal::from_complex(s1.sums[j]),
                    PhasorSignal::from_complex(s2.sums[i]),
                ));
            }
        }
        out
    }

    pub fn predict_one(&self, tx: Point3, ris: Point3, rx: Point3) -> f64 {
        self.predict(&[Placement { tx, ris, rx }])
            .expect("one placement")[0]
    }
}

impl Regressor for RNerfModel {
    type Params = ModelParams;

    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    fn scaling(&self) -> TargetScaling {
        self.scaling
    }

    fn set_scaling(&mut self, scaling: TargetScaling) {
        self.scaling = scaling;
    }

    fn predict(&self, placements: &[Placement]) -> Result<Vec<f64>> {
        Ok(self
            .render(placements)
            .into_iter()
            .map(|(r1, r2)| {
                self.scaling.mean + amplitude_db(r1.amplitude * r2.amplitude, self.config.floor_eps)
            })
            .collect())
    }

    fn loss_and_gradient(
        &self,
        batch: &[SceneSample],
        batch_index: usize,
    ) -> Result<(BatchLoss, ModelParams)> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let c = &self.config;
        let n = batch.len() as f64;
        let var = self.scaling.std * self.scaling.std;
        let mut grad = self.params.zeros_like();
        let mut stats = BatchLoss::default();

        for chunk in batch.chunks(self.chunk_len()) {
            let placements: Vec<Placement> = chunk.iter().map(SceneSample::placement).collect();
            let (q1, map1, q2) = Self::stage_queries(&placements);
            let s1 = render::render_batch(
                &self.params.stage1,
                &self.template,
                &c.encoding,
                &c.bounds,
                &q1,
            );
            let s2 = render::render_batch(
                &self.params.stage2,
                &self.template,
                &c.encoding,
                &c.bounds,
                &q2,
            );

            let mut d1 = vec![Complex64::new(0.0, 0.0); q1.len()];
            let mut d2 = vec![Complex64::new(0.0, 0.0); q2.len()];
            for (i, sample) in chunk.iter().enumerate() {
                let r1 = s1.sums[map1[i]];
                let r2 = s2.sums[i];
                let amplitude = r1.norm() * r2.norm();
                let pred = self.scaling.mean + amplitude_db(amplitude, c.floor_eps);
                let resid = pred - sample.strength;
                if !resid.is_finite() {
                    return Err(Error::NumericFailure {
                        batch: batch_index,
                        detail: format!("non-finite prediction for sample at rx {:?}", sample.rx),
                    });
                }
                stats.loss += resid * resid / (var * n);
                if amplitude > c.floor_eps {
                    // d pred / d R = (20 / ln 10) * R / |R|^2 for each stage render.
                    let g = 2.0 * resid / (var * n) * 20.0 / LN_10;
                    d1[map1[i]] += r1 * (g / r1.norm_sqr());
                    d2[i] += r2 * (g / r2.norm_sqr());
                } else {
                    stats.floor_hits += 1;
                }
            }
            render::backward_batch(&self.params.stage1, &s1, &d1, &mut grad.stage1);
            render::backward_batch(&self.params.stage2, &s2, &d2, &mut grad.stage2);
        }
        if !grad.all_finite() {
            return Err(Error::NumericFailure {
                batch: batch_index,
                detail: "non-finite gradient".into(),
            });
        }
        Ok((stats, grad))
    }
}

fn render_stage_reference(
    stage: &StageNetwork,
    bundle: &RayBundle,
    emitter: Point3,
    enc: &InputEncoding,
    bounds: &SceneBounds,
) -> Result<PhasorSignal> {
    let pos_len = enc.position_len();
    let mut signals = Vec::with_capacity(bundle.len());
    let mut transmissions = Vec::with_capacity(bundle.len());
    for (_, ray_dir, voxel, _) in bundle.iter() {
        let mut conditioning = vec![0.0; pos_len + enc.direction_len()];
        enc.encode_position(
            bounds.normalize_unchecked(voxel),
            &mut conditioning[..pos_len],
        );
        enc.encode_direction(
            view_direction(emitter, voxel, ray_dir),
            &mut conditioning[pos_len..],
        );
        let (t, feature) = tn_forward(stage, &conditioning[..pos_len])?;
        let s = rn_forward(stage, &feature, &conditioning)?;
        transmissions.push(t);
        signals.push(s);
    }
    let field = VoxelField::new(
        bundle.ray_count(),
        bundle.samples_per_ray(),
        signals,
        transmissions,
    )?;
    render_stage(&field)
}

/// Received strength in dB for one placement, evaluated voxel by voxel.
///
/// Stage 1 traces from the RIS with directions measured from the TX, stage 2
/// from the RX with directions measured from the RIS. No target offset is applied.
pub fn predict_strength(
    params: &ModelParams,
    tx: Point3,
    ris: Point3,
    rx: Point3,
    cfg: &RayTracingConfig,
    enc: &InputEncoding,
    bounds: &SceneBounds,
) -> Result<f64> {
    let stage1 = build_ray_bundle(ris, cfg)?;
    let stage2 = build_ray_bundle(rx, cfg)?;
    predict_strength_with_bundles(params, tx, ris, &stage1, &stage2, enc, bounds)
}

pub(crate) fn predict_strength_with_bundles(
    params: &ModelParams,
    tx: Point3,
    ris: Point3,
    stage1: &RayBundle,
    stage2: &RayBundle,
    enc: &InputEncoding,
    bounds: &SceneBounds,
) -> Result<f64> {
    let r1 = render_stage_reference(&params.stage1, stage1, tx, enc, bounds)?;
    let r2 = render_stage_reference(&params.stage2, stage2, ris, enc, bounds)?;
    Ok(strength_db(render_total(r1, r2), DEFAULT_FLOOR_EPS))
}
