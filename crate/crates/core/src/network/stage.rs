use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;

use super::layer::{relu_inplace, relu_mask, softplus, LayerParams, Parameters};
use crate::encoding::InputEncoding;
use crate::error::{Error, Result};
use crate::radiometry::PhasorSignal;

/// Layer widths of one stage network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkShape {
    pub tn_depth: usize,
    pub tn_width: usize,
    pub feature_dim: usize,
    pub rn_widths: [usize; 2],
}

impl Default for NetworkShape {
    /// Eight 256-wide transmission layers, a 256-wide feature, radiation layers of 256 and 128.
    fn default() -> Self {
        Self {
            tn_depth: 8,
            tn_width: 256,
            feature_dim: 256,
            rn_widths: [256, 128],
        }
    }
}

impl NetworkShape {
    /// Every layer `width` wide, with the second radiation layer half as wide.
    pub fn uniform(tn_depth: usize, width: usize) -> Self {
        Self {
            tn_depth,
            tn_width: width,
            feature_dim: width,
            rn_widths: [width, (width / 2).max(1)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tn_depth == 0
            || self.tn_width == 0
            || self.feature_dim == 0
            || self.rn_widths.contains(&0)
        {
            return Err(Error::invalid(format!(
                "network widths and depth must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Transmission network (TN) and radiation network (RN) of one stage.
///
/// The TN maps an encoded voxel position to the raw transmission output
/// `(amplitude pre-softplus, phase)` and a feature vector. The RN consumes
/// `[voxel encoding | direction encoding | extra conditioning | feature]`
/// and emits the raw voxel signal in the same format.
#[derive(Debug, Clone, PartialEq)]
pub struct StageNetwork {
    pub tn_layers: Vec<LayerParams>,
    pub transmission_head: LayerParams,
    pub feature_head: LayerParams,
    pub rn_layers: Vec<LayerParams>,
    pub signal_head: LayerParams,
}

impl StageNetwork {
    /// Zero-initialized network (every output constant).
    pub fn zeros(
        shape: &NetworkShape,
        encoding: &InputEncoding,
        extra_conditioning: usize,
    ) -> Result<Self> {
        Self::build(shape, encoding, extra_conditioning, |i, o, _| {
            LayerParams::zeros(i, o)
        })
    }

    pub fn init<R: Rng + ?Sized>(
        shape: &NetworkShape,
        encoding: &InputEncoding,
        extra_conditioning: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Self::build(shape, encoding, extra_conditioning, |i, o, hidden| {
            LayerParams::init_uniform(i, o, if hidden { 6.0 } else { 3.0 }, rng)
        })
    }

    fn build(
        shape: &NetworkShape,
        encoding: &InputEncoding,
        extra_conditioning: usize,
        mut make: impl FnMut(usize, usize, bool) -> LayerParams,
    ) -> Result<Self> {
        shape.validate()?;
        let pos = encoding.position_len();
        let mut tn_layers = Vec::with_capacity(shape.tn_depth);
        for l in 0..shape.tn_depth {
            let inputs = if l == 0 { pos } else { shape.tn_width };
            tn_layers.push(make(inputs, shape.tn_width, true));
        }
        let transmission_head = make(shape.tn_width, 2, false);
        let feature_head = make(shape.tn_width, shape.feature_dim, false);
        let rn_in = pos + encoding.direction_len() + extra_conditioning + shape.feature_dim;
        let rn_layers = vec![
            make(rn_in, shape.rn_widths[0], true),
            make(shape.rn_widths[0], shape.rn_widths[1], true),
        ];
        let signal_head = make(shape.rn_widths[1], 2, false);
        Ok(Self {
            tn_layers,
            transmission_head,
            feature_head,
            rn_layers,
            signal_head,
        })
    }

    pub fn tn_input_len(&self) -> usize {
        self.tn_layers[0].inputs()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_head.outputs()
    }

    pub fn rn_input_len(&self) -> usize {
        self.rn_layers[0].inputs()
    }

    /// Width of the RN input that precedes the feature vector.
    pub fn conditioning_len(&self) -> usize {
        self.rn_input_len() - self.feature_dim()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            tn_layers: self.tn_layers.iter().map(LayerParams::zeros_like).collect(),
            transmission_head: self.transmission_head.zeros_like(),
            feature_head: self.feature_head.zeros_like(),
            rn_layers: self.rn_layers.iter().map(LayerParams::zeros_like).collect(),
            signal_head: self.signal_head.zeros_like(),
        }
    }

    /// All layers in checkpoint order.
    pub fn layers(&self) -> impl Iterator<Item = &LayerParams> {
        self.tn_layers
            .iter()
            .chain([&self.transmission_head, &self.feature_head])
            .chain(&self.rn_layers)
            .chain([&self.signal_head])
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut LayerParams> {
        self.tn_layers
            .iter_mut()
            .chain([&mut self.transmission_head, &mut self.feature_head])
            .chain(self.rn_layers.iter_mut())
            .chain([&mut self.signal_head])
    }

    /// Row-batched TN and RN forward pass.
    ///
    /// `positions` holds encoded voxel positions, `conditioning` the encoded
    /// direction followed by any extra conditioning, one voxel per row.
    pub fn forward_batch(
        &self,
        positions: Array2<f64>,
        conditioning: ArrayView2<'_, f64>,
    ) -> StageActivations {
        let mut tn = Vec::with_capacity(self.tn_layers.len() + 1);
        tn.push(positions);
        for layer in &self.tn_layers {
            let mut h = layer.apply_batch(tn.last().expect("non-empty").view());
            relu_inplace(&mut h);
            tn.push(h);
        }
        let trunk = tn.last().expect("non-empty").view();
        let transmission_raw = self.transmission_head.apply_batch(trunk);
        let feature = self.feature_head.apply_batch(trunk);

        let rn_input = concatenate(Axis(1), &[tn[0].view(), conditioning, feature.view()])
            .expect("row counts agree");
        let mut rn = Vec::with_capacity(self.rn_layers.len() + 1);
        rn.push(rn_input);
        for layer in &self.rn_layers {
            let mut h = layer.apply_batch(rn.last().expect("non-empty").view());
            relu_inplace(&mut h);
            rn.push(h);
        }
        let signal_raw = self
            .signal_head
            .apply_batch(rn.last().expect("non-empty").view());
        StageActivations {
            tn,
            transmission_raw,
            rn,
            signal_raw,
        }
    }

    /// Reverse sweep through one recorded batch, accumulating into `grad`.
    pub(crate) fn backward_batch(
        &self,
        acts: &StageActivations,
        d_transmission_raw: &Array2<f64>,
        d_signal_raw: &Array2<f64>,
        grad: &mut StageNetwork,
    ) {
        let depth_rn = self.rn_layers.len();
        let mut d = self
            .signal_head
            .backward_batch(
                acts.rn[depth_rn].view(),
                d_signal_raw.view(),
                &mut grad.signal_head,
                true,
            )
            .expect("input grad requested");
        for l in (0..depth_rn).rev() {
            relu_mask(&mut d, &acts.rn[l + 1]);
            d = self.rn_layers[l]
                .backward_batch(acts.rn[l].view(), d.view(), &mut grad.rn_layers[l], true)
                .expect("input grad requested");
        }
        let feature_start = self.conditioning_len();
        let d_feature = d.slice(s![.., feature_start..]);

        let depth_tn = self.tn_layers.len();
        let trunk = acts.tn[depth_tn].view();
        let mut d_trunk = self
            .transmission_head
            .backward_batch(
                trunk,
                d_transmission_raw.view(),
                &mut grad.transmission_head,
                true,
            )
            .expect("input grad requested");
        d_trunk += &self
            .feature_head
            .backward_batch(trunk, d_feature, &mut grad.feature_head, true)
            .expect("input grad requested");
        for l in (0..depth_tn).rev() {
            relu_mask(&mut d_trunk, &acts.tn[l + 1]);
            let need_input = l > 0;
            if let Some(next) = self.tn_layers[l].backward_batch(
                acts.tn[l].view(),
                d_trunk.view(),
                &mut grad.tn_layers[l],
                need_input,
            ) {
                d_trunk = next;
            }
        }
    }
}

impl Parameters for StageNetwork {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.layers().flat_map(|l| l.slices()).collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut().flat_map(|l| l.slices_mut()).collect()
    }
}

/// Activations recorded by [`StageNetwork::forward_batch`], one voxel per row.
#[derive(Debug, Clone)]
pub struct StageActivations {
    /// Encoded positions followed by every post-ReLU TN layer output.
    pub tn: Vec<Array2<f64>>,
    pub transmission_raw: Array2<f64>,
    /// RN input followed by every post-ReLU RN layer output.
    pub rn: Vec<Array2<f64>>,
    pub signal_raw: Array2<f64>,
}

impl StageActivations {
    pub fn rows(&self) -> usize {
        self.signal_raw.nrows()
    }

    pub fn transmission(&self, row: usize) -> PhasorSignal {
        raw_to_phasor(
            self.transmission_raw[[row, 0]],
            self.transmission_raw[[row, 1]],
        )
    }

    pub fn signal(&self, row: usize) -> PhasorSignal {
        raw_to_phasor(self.signal_raw[[row, 0]], self.signal_raw[[row, 1]])
    }
}

#[inline]
pub(crate) fn raw_to_phasor(raw_amplitude: f64, phase: f64) -> PhasorSignal {
    PhasorSignal {
        amplitude: softplus(raw_amplitude),
        phase,
    }
}

fn run_relu_stack(layers: &[LayerParams], input: Vec<f64>) -> Vec<f64> {
    layers.iter().fold(input, |h, layer| {
        let mut y = layer.apply(&h);
        y.iter_mut().for_each(|v| *v = v.max(0.0));
        y
    })
}

/// Transmission network on one encoded voxel: returns `T` and the feature vector.
pub fn tn_forward(
    stage: &StageNetwork,
    voxel_encoding: &[f64],
) -> Result<(PhasorSignal, Vec<f64>)> {
    if voxel_encoding.len() != stage.tn_input_len() {
        return Err(Error::invalid(format!(
            "TN expects {} inputs, got {}",
            stage.tn_input_len(),
            voxel_encoding.len()
        )));
    }
    let trunk = run_relu_stack(&stage.tn_layers, voxel_encoding.to_vec());
    let t = stage.transmission_head.apply(&trunk);
    let feature = stage.feature_head.apply(&trunk);
    Ok((raw_to_phasor(t[0], t[1]), feature))
}

/// Radiation network on one voxel: `conditioning` is the RN input preceding the feature.
pub fn rn_forward(
    stage: &StageNetwork,
    feature: &[f64],
    conditioning: &[f64],
) -> Result<PhasorSignal> {
    if feature.len() != stage.feature_dim()
        || conditioning.len() + feature.len() != stage.rn_input_len()
    {
        return Err(Error::invalid(format!(
            "RN expects {} inputs ({} feature), got {} + {}",
            stage.rn_input_len(),
            stage.feature_dim(),
            conditioning.len(),
            feature.len()
        )));
    }
    let mut input = Vec::with_capacity(stage.rn_input_len());
    input.extend_from_slice(conditioning);
    input.extend_from_slice(feature);
    let hidden = run_relu_stack(&stage.rn_layers, input);
    let out = stage.signal_head.apply(&hidden);
    Ok(raw_to_phasor(out[0], out[1]))
}
