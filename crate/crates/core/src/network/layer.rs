use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// One affine map `y = W x + b` with `W` stored row-major as `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl LayerParams {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            biases: Array1::zeros(outputs),
        }
    }

    /// Uniform fan-in scaled weights `U(-sqrt(gain / in), sqrt(gain / in))`, zero biases.
    ///
    /// `gain = 6` is He-uniform (ReLU layers), `gain = 3` keeps unit variance for affine heads.
    pub fn init_uniform<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        gain: f64,
        rng: &mut R,
    ) -> Self {
        let bound = (gain / inputs.max(1) as f64).sqrt();
        let weights =
            Array2::from_shape_simple_fn((outputs, inputs), || rng.random_range(-bound..=bound));
        Self {
            weights,
            biases: Array1::zeros(outputs),
        }
    }

    pub fn from_parts(weights: Array2<f64>, biases: Array1<f64>) -> Result<Self> {
        if weights.nrows() != biases.len() {
            return Err(Error::invalid(format!(
                "layer has {} weight rows but {} biases",
                weights.nrows(),
                biases.len()
            )));
        }
        if weights.iter().chain(biases.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("layer parameters must be finite"));
        }
        Ok(Self {
            weights: weights.as_standard_layout().into_owned(),
            biases,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.inputs(), self.outputs())
    }

    /// Single-vector forward pass.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs());
        self.weights
            .outer_iter()
            .zip(self.biases.iter())
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    /// Row-batched forward pass: `X W^T + b` for `X` of shape `batch x in`.
    pub fn apply_batch(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut y = Array2::zeros((x.nrows(), self.outputs()));
        y.rows_mut()
            .into_iter()
            .for_each(|mut r| r.assign(&self.biases));
        general_mat_mul(1.0, &x, &self.weights.t(), 1.0, &mut y);
        y
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub(crate) fn backward_batch(
        &self,
        x: ArrayView2<'_, f64>,
        dy: ArrayView2<'_, f64>,
        grad: &mut LayerParams,
        need_input_grad: bool,
    ) -> Option<Array2<f64>> {
        general_mat_mul(1.0, &dy.t(), &x, 1.0, &mut grad.weights);
        grad.biases += &dy.sum_axis(Axis(0));
        need_input_grad.then(|| dy.dot(&self.weights))
    }

    pub(crate) fn slices(&self) -> [&[f64]; 2] {
        [
            self.weights.as_slice().expect("standard layout"),
            self.biases.as_slice().expect("standard layout"),
        ]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 2] {
        [
            self.weights.as_slice_mut().expect("standard layout"),
            self.biases.as_slice_mut().expect("standard layout"),
        ]
    }
}

pub(crate) fn relu_inplace(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| v.max(0.0));
}

/// Zeroes gradient entries where the ReLU output was not positive.
pub(crate) fn relu_mask(grad: &mut Array2<f64>, activation: &Array2<f64>) {
    grad.zip_mut_with(activation, |g, &a| {
        if a <= 0.0 {
            *g = 0.0;
        }
    });
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Flat access to every trainable array, in a fixed order.
pub trait Parameters {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.param_slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

impl Parameters for Vec<LayerParams> {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.iter().flat_map(|l| l.slices()).collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.iter_mut().flat_map(|l| l.slices_mut()).collect()
    }
}
