use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{BatchLoss, Regressor, TargetScaling};
use crate::encoding::{InputEncoding, SceneBounds};
use crate::error::{Error, Result};
use crate::network::layer::{relu_inplace, relu_mask};
use crate::network::{LayerParams, NetworkShape, MAX_ROWS_PER_PASS};
use crate::scene::{Placement, SceneSample};

/// Direct regression baseline: encoded `(tx, ris, rx)` through a ReLU MLP to
/// one standardized output, without rays or rendering.
///
/// Hidden layers mirror one stage network: `tn_depth` layers of `tn_width`,
/// then the two radiation widths. The output is `mean + std * head`.
#[derive(Debug, Clone)]
pub struct DirectMlp {
    pub layers: Vec<LayerParams>,
    encoding: InputEncoding,
    bounds: SceneBounds,
    scaling: TargetScaling,
}

impl DirectMlp {
    fn widths(shape: &NetworkShape, encoding: &InputEncoding) -> Vec<usize> {
        let mut w = vec![3 * encoding.position_len()];
        w.extend(std::iter::repeat_n(shape.tn_width, shape.tn_depth));
        w.extend(shape.rn_widths);
        w.push(1);
        w
    }

    pub fn new(
        shape: &NetworkShape,
        encoding: InputEncoding,
        bounds: SceneBounds,
        seed: u64,
    ) -> Result<Self> {
        shape.validate()?;
        bounds.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Self::widths(shape, &encoding);
        let last = w.len() - 2;
        let layers = (0..w.len() - 1)
            .map(|l| {
                LayerParams::init_uniform(
                    w[l],
                    w[l + 1],
                    if l < last { 6.0 } else { 3.0 },
                    &mut rng,
                )
            })
            .collect();
        Ok(Self {
            layers,
            encoding,
            bounds,
            scaling: TargetScaling::identity(),
        })
    }

    pub fn zeros(
        shape: &NetworkShape,
        encoding: InputEncoding,
        bounds: SceneBounds,
    ) -> Result<Self> {
        let mut m = Self::new(shape, encoding, bounds, 0)?;
        m.layers = m.layers.iter().map(LayerParams::zeros_like).collect();
        Ok(m)
    }

    fn inputs(&self, placements: &[Placement]) -> Array2<f64> {
        let p = self.encoding.position_len();
        let mut x = Array2::zeros((placements.len(), 3 * p));
        for (mut row, pl) in x.rows_mut().into_iter().zip(placements) {
            let row = row.as_slice_mut().expect("row-major");
            for (k, point) in [pl.tx, pl.ris, pl.rx].into_iter().enumerate() {
                self.encoding.encode_position(
                    self.bounds.normalize_unchecked(point),
                    &mut row[k * p..(k + 1) * p],
                );
            }
        }
        x
    }

    /// Activations of every layer; the last entry is the raw head output.
    fn forward(&self, x: Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts = vec![x];
        for (l, layer) in self.layers.iter().enumerate() {
            let mut h = layer.apply_batch(acts.last().expect("non-empty").view());
            if l + 1 < self.layers.len() {
                relu_inplace(&mut h);
            }
            acts.push(h);
        }
        acts
    }
}

impl Regressor for DirectMlp {
    type Params = Vec<LayerParams>;

    fn params(&self) -> &Vec<LayerParams> {
        &self.layers
    }

    fn params_mut(&mut self) -> &mut Vec<LayerParams> {
        &mut self.layers
    }

    fn scaling(&self) -> TargetScaling {
        self.scaling
    }

    fn set_scaling(&mut self, scaling: TargetScaling) {
        self.scaling = scaling;
    }

    fn predict(&self, placements: &[Placement]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(placements.len());
        for chunk in placements.chunks(MAX_ROWS_PER_PASS) {
            let acts = self.forward(self.inputs(chunk));
            out.extend(
                acts.last()
                    .expect("non-empty")
                    .column(0)
                    .iter()
                    .map(|&z| self.scaling.restore(z)),
            );
        }
        Ok(out)
    }

    fn loss_and_gradient(
        &self,
        batch: &[SceneSample],
        batch_index: usize,
    ) -> Result<(BatchLoss, Vec<LayerParams>)> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let n = batch.len() as f64;
        let mut grad: Vec<LayerParams> = self.layers.iter().map(LayerParams::zeros_like).collect();
        let mut stats = BatchLoss::default();
        for chunk in batch.chunks(MAX_ROWS_PER_PASS) {
            let placements: Vec<Placement> = chunk.iter().map(SceneSample::placement).collect();
            let acts = self.forward(self.inputs(&placements));
            let out = acts.last().expect("non-empty");
            let mut d = Array2::zeros((chunk.len(), 1));
            for (i, s) in chunk.iter().enumerate() {
                let resid = out[[i, 0]] - self.scaling.standardize(s.strength);
                if !resid.is_finite() {
                    return Err(Error::NumericFailure {
                        batch: batch_index,
                        detail: format!("non-finite prediction for sample at rx {:?}", s.rx),
                    });
                }
                stats.loss += resid * resid / n;
                d[[i, 0]] = 2.0 * resid / n;
            }
            for l in (0..self.layers.len()).rev() {
                if l + 1 < self.layers.len() {
                    relu_mask(&mut d, &acts[l + 1]);
                }
                if let Some(next) =
                    self.layers[l].backward_batch(acts[l].view(), d.view(), &mut grad[l], l > 0)
                {
                    d = next;
                }
            }
        }
        Ok((stats, grad))
    }
}
