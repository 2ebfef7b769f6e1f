use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::{Activation, Real};
use crate::error::{Error, Result};

/// Fully connected layer `y = act(x Wᵀ + b)` with weights stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T: Real = f32> {
    pub(crate) weights: Array2<T>,
    pub(crate) biases: Array1<T>,
    pub(crate) activation: Activation,
}

/// Gradient of a scalar loss w.r.t. one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient<T: Real = f32> {
    pub weights: Array2<T>,
    pub biases: Array1<T>,
}

impl<T: Real> DenseLayer<T> {
    pub fn new(weights: Array2<T>, biases: Array1<T>, activation: Activation) -> Result<Self> {
        if weights.nrows() != biases.len() {
            return Err(Error::Shape(format!(
                "weights have {} rows but {} biases",
                weights.nrows(),
                biases.len()
            )));
        }
        if weights.ncols() == 0 || weights.nrows() == 0 {
            return Err(Error::Shape("layer dimensions must be > 0".into()));
        }
        if !weights.iter().chain(biases.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("layer parameters".into()));
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    /// Glorot-uniform weights with limit `sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        fan_in: usize,
        fan_out: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(fan_in > 0 && fan_out > 0, "layer dimensions must be > 0");
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || T::of(dist.sample(rng)));
        Self {
            weights,
            biases: Array1::zeros(fan_out),
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Array2<T> {
        &self.weights
    }

    pub fn biases(&self) -> &Array1<T> {
        &self.biases
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    pub(crate) fn forward(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut z = x.dot(&self.weights.t());
        z += &self.biases;
        self.activation.apply(&mut z);
        z
    }

    /// Returns the parameter gradient and the gradient w.r.t. the layer input.
    pub(crate) fn backward(
        &self,
        input: ArrayView2<T>,
        output: ArrayView2<T>,
        grad_output: Array2<T>,
    ) -> (LayerGradient<T>, Array2<T>) {
        let delta = self.activation.backprop(output, grad_output);
        let weights = delta.t().dot(&input);
        let biases = delta.sum_axis(Axis(0));
        let grad_input = delta.dot(&self.weights);
        (LayerGradient { weights, biases }, grad_input)
    }

    pub(crate) fn cast<U: Real>(&self) -> DenseLayer<U> {
        DenseLayer {
            weights: self.weights.mapv(|v| U::of(v.as_f64())),
            biases: self.biases.mapv(|v| U::of(v.as_f64())),
            activation: self.activation,
        }
    }
}

impl<T: Real> LayerGradient<T> {
    pub(crate) fn zeros_like(layer: &DenseLayer<T>) -> Self {
        Self {
            weights: Array2::zeros(layer.weights.raw_dim()),
            biases: Array1::zeros(layer.biases.raw_dim()),
        }
    }
}
