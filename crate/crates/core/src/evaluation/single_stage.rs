use std::f64::consts::LN_10;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{BatchLoss, Regressor, TargetScaling};
use crate::error::{Error, Result};
use crate::geometry::RayTemplate;
use crate::network::render::{self, StageQuery};
use crate::network::{ModelConfig, StageNetwork, MAX_ROWS_PER_PASS};
use crate::radiometry::amplitude_db;
use crate::scene::{Placement, SceneSample};

/// One stage network rendered from the RX only. Viewing directions are
/// measured from the TX and the encoded RIS position is appended to the
/// radiation network's conditioning.
#[derive(Debug, Clone)]
pub struct SingleStageModel {
    pub net: StageNetwork,
    config: ModelConfig,
    scaling: TargetScaling,
    template: RayTemplate,
}

impl SingleStageModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = StageNetwork::init(
            &config.shape,
            &config.encoding,
            config.encoding.position_len(),
            &mut rng,
        )?;
        Ok(Self {
            net,
            template: RayTemplate::new(&config.rays)?,
            config,
            scaling: TargetScaling::identity(),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn chunk_len(&self) -> usize {
        (MAX_ROWS_PER_PASS / self.template.len()).max(1)
    }

    fn queries(chunk: &[Placement]) -> Vec<StageQuery> {
        chunk
            .iter()
            .map(|p| StageQuery {
                origin: p.rx,
                emitter: p.tx,
                extra: Some(p.ris),
            })
            .collect()
    }

    /// Rendered complex signal per placement.
    pub fn render(&self, placements: &[Placement]) -> Vec<Complex64> {
        let c = &self.config;
        placements
            .chunks(self.chunk_len())
            .flat_map(|chunk| {
                render::render_batch(
                    &self.net,
                    &self.template,
                    &c.encoding,
                    &c.bounds,
                    &Self::queries(chunk),
                )
                .sums
            })
            .collect()
    }
}

impl Regressor for SingleStageModel {
    type Params = StageNetwork;

    fn params(&self) -> &StageNetwork {
        &self.net
    }

    fn params_mut(&mut self) -> &mut StageNetwork {
        &mut self.net
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
            .map(|r| self.scaling.mean + amplitude_db(r.norm(), self.config.floor_eps))
            .collect())
    }

    fn loss_and_gradient(
        &self,
        batch: &[SceneSample],
        batch_index: usize,
    ) -> Result<(BatchLoss, StageNetwork)> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let c = &self.config;
        let n = batch.len() as f64;
        let var = self.scaling.std * self.scaling.std;
        let mut grad = self.net.zeros_like();
        let mut stats = BatchLoss::default();
        for chunk in batch.chunks(self.chunk_len()) {
            let placements: Vec<Placement> = chunk.iter().map(SceneSample::placement).collect();
            let rendered = render::render_batch(
                &self.net,
                &self.template,
                &c.encoding,
                &c.bounds,
                &Self::queries(&placements),
            );
            let mut d = vec![Complex64::new(0.0, 0.0); chunk.len()];
            for (i, s) in chunk.iter().enumerate() {
                let r = rendered.sums[i];
                let pred = self.scaling.mean + amplitude_db(r.norm(), c.floor_eps);
                let resid = pred - s.strength;
                if !resid.is_finite() {
                    return Err(Error::NumericFailure {
                        batch: batch_index,
                        detail: format!("non-finite prediction for sample at rx {:?}", s.rx),
                    });
                }
                stats.loss += resid * resid / (var * n);
                if r.norm() > c.floor_eps {
                    d[i] = r * (2.0 * resid / (var * n) * 20.0 / LN_10 / r.norm_sqr());
                } else {
                    stats.floor_hits += 1;
                }
            }
            render::backward_batch(&self.net, &rendered, &d, &mut grad);
        }
        Ok((stats, grad))
    }
}
