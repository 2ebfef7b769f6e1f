use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::{Activation, DenseLayer, LayerGradient, Loss, Real};
use crate::error::{Error, Result};

/// An ordered stack of dense layers with a designated encoding layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T: Real = f32> {
    layers: Vec<DenseLayer<T>>,
    bottleneck: usize,
}

/// Per-layer parameter gradients, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Real = f32> {
    pub layers: Vec<LayerGradient<T>>,
}

impl<T: Real> Network<T> {
    pub fn new(layers: Vec<DenseLayer<T>>, bottleneck: usize) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        if bottleneck >= layers.len() {
            return Err(Error::InvalidArgument(format!(
                "bottleneck index {bottleneck} out of range for {} layers",
                layers.len()
            )));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::LayerShape {
                    layer: i + 1,
                    expected: pair[1].in_dim(),
                    got: pair[0].out_dim(),
                });
            }
        }
        Ok(Self { layers, bottleneck })
    }

    /// Symmetric autoencoder over `dims = [input, h1, .., latent]`.
    ///
    /// Hidden layers use ReLU, the bottleneck and the reconstruction layer are
    /// linear. The decoder mirrors the encoder widths.
    pub fn autoencoder<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "autoencoder dims must have >= 2 positive entries, got {dims:?}"
            )));
        }
        let depth = dims.len() - 1;
        let mut layers = Vec::with_capacity(2 * depth);
        for i in 0..depth {
            let act = if i + 1 == depth {
                Activation::Linear
            } else {
                Activation::Relu
            };
            layers.push(DenseLayer::glorot(dims[i], dims[i + 1], act, rng));
        }
        for i in (0..depth).rev() {
            let act = if i == 0 {
                Activation::Linear
            } else {
                Activation::Relu
            };
            layers.push(DenseLayer::glorot(dims[i + 1], dims[i], act, rng));
        }
        Self::new(layers, depth - 1)
    }

    /// Stack of layers sharing one activation; the last layer is the bottleneck
    /// unless `bottleneck` says otherwise.
    pub fn uniform<R: Rng + ?Sized>(
        dims: &[usize],
        activation: Activation,
        bottleneck: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "network dims must have >= 2 positive entries, got {dims:?}"
            )));
        }
        let layers: Vec<_> = dims
            .windows(2)
            .map(|w| DenseLayer::glorot(w[0], w[1], activation, rng))
            .collect();
        let last = layers.len() - 1;
        Self::new(layers, bottleneck.unwrap_or(last))
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn bottleneck_index(&self) -> usize {
        self.bottleneck
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[self.bottleneck].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    fn check_input(&self, batch: &ArrayView2<T>) -> Result<()> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::LayerShape {
                layer: 0,
                expected: self.input_dim(),
                got: batch.ncols(),
            });
        }
        Ok(())
    }

    /// Outputs of every layer, in order.
    pub fn forward(&self, batch: ArrayView2<T>) -> Result<Vec<Array2<T>>> {
        self.check_input(&batch)?;
        let mut acts: Vec<Array2<T>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let out = match i {
                0 => layer.forward(batch),
                _ => layer.forward(acts[i - 1].view()),
            };
            acts.push(out);
        }
        Ok(acts)
    }

    /// Final-layer output.
    pub fn predict(&self, batch: ArrayView2<T>) -> Result<Array2<T>> {
        Ok(self.forward(batch)?.pop().expect("non-empty network"))
    }

    /// Bottleneck activations; layers after the bottleneck are not evaluated.
    pub fn encode(&self, batch: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_input(&batch)?;
        let mut h = self.layers[0].forward(batch);
        for layer in &self.layers[1..=self.bottleneck] {
            h = layer.forward(h.view());
        }
        Ok(h)
    }

    /// Backpropagates `grad_output` (gradient w.r.t. the final output) through
    /// the stack. `injected` adds an extra gradient w.r.t. the output of one
    /// layer, for losses attached to intermediate layers.
    ///
    /// Returns parameter gradients and the gradient w.r.t. the input batch.
    pub fn backward(
        &self,
        batch: ArrayView2<T>,
        acts: &[Array2<T>],
        grad_output: Array2<T>,
        injected: Option<(usize, ArrayView2<T>)>,
    ) -> Result<(Gradients<T>, Array2<T>)> {
        if acts.len() != self.layers.len() {
            return Err(Error::Shape(format!(
                "{} activations for {} layers",
                acts.len(),
                self.layers.len()
            )));
        }
        let last = self.layers.len() - 1;
        if grad_output.dim() != acts[last].dim() {
            return Err(Error::Shape(format!(
                "output gradient {:?} vs output {:?}",
                grad_output.dim(),
                acts[last].dim()
            )));
        }
        if let Some((at, g)) = &injected {
            if *at > last || g.dim() != acts[*at].dim() {
                return Err(Error::Shape(format!("injected gradient at layer {at} has wrong shape")));
            }
        }

        let mut grads: Vec<Option<LayerGradient<T>>> = vec![None; self.layers.len()];
        let mut grad = grad_output;
        for i in (0..=last).rev() {
            if let Some((at, g)) = &injected {
                if *at == i {
                    grad += g;
                }
            }
            let input = if i == 0 { batch } else { acts[i - 1].view() };
            let (lg, gin) = self.layers[i].backward(input, acts[i].view(), grad);
            grads[i] = Some(lg);
            grad = gin;
        }
        let layers = grads.into_iter().map(|g| g.expect("filled")).collect();
        Ok((Gradients { layers }, grad))
    }

    /// Loss value and parameter gradients for a loss on the final output.
    pub fn loss_and_gradients(
        &self,
        batch: ArrayView2<T>,
        loss: &Loss<'_, T>,
    ) -> Result<(f64, Gradients<T>)> {
        let acts = self.forward(batch)?;
        let out = acts.last().expect("non-empty network");
        let value = loss.value(out.view())?;
        let g = loss.gradient(out.view())?;
        let (grads, _) = self.backward(batch, &acts, g, None)?;
        Ok((value, grads))
    }

    /// All parameters, layer by layer: weights row-major, then biases.
    pub fn flat_params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.biases.iter().copied());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[T]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = params[off];
                off += 1;
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.biases.iter()).all(|v| v.is_finite()))
    }

    /// Same topology and parameters at a different precision.
    pub fn cast<U: Real>(&self) -> Network<U> {
        Network {
            layers: self.layers.iter().map(DenseLayer::cast).collect(),
            bottleneck: self.bottleneck,
        }
    }

    /// ReLU on/off pattern of a forward pass. Finite-difference probes use it
    /// to spot perturbations that cross a kink.
    pub fn relu_pattern(&self, acts: &[Array2<T>]) -> Vec<bool> {
        self.layers
            .iter()
            .zip(acts)
            .filter(|(l, _)| l.activation == Activation::Relu)
            .flat_map(|(_, a)| a.iter().map(|&v| v > T::zero()).collect::<Vec<_>>())
            .collect()
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        &mut self.layers
    }
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(model: &Network<T>) -> Self {
        Self {
            layers: model.layers.iter().map(LayerGradient::zeros_like).collect(),
        }
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend(g.weights.iter().copied());
            out.extend(g.biases.iter().copied());
        }
        out
    }

    pub fn scale(&mut self, factor: T) {
        for g in &mut self.layers {
            g.weights.mapv_inplace(|v| v * factor);
            g.biases.mapv_inplace(|v| v * factor);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.flatten()
            .into_iter()
            .map(|v| v.abs().as_f64())
            .fold(0.0, f64::max)
    }
}
