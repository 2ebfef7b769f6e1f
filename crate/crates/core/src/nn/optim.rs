use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::{Gradients, Network, Real};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// Optimizer bound to one network. Adam moment buffers are created on the
/// first step and must keep matching the network's parameter shapes.
#[derive(Debug, Clone)]
pub struct Optimizer<T: Real = f32> {
    kind: OptimizerKind,
    learning_rate: f64,
    step: u64,
    moments: Option<(Gradients<T>, Gradients<T>)>,
}

impl<T: Real> Optimizer<T> {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Result<Self> {
        if !learning_rate.is_finite() || learning_rate <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Self {
            kind,
            learning_rate,
            step: 0,
            moments: None,
        })
    }

    pub fn sgd(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerKind::Sgd, learning_rate)
    }

    pub fn adam(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerKind::Adam, learning_rate)
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, model: &mut Network<T>, grads: &Gradients<T>) -> Result<()> {
        if grads.layers.len() != model.layers().len()
            || grads.layers.iter().zip(model.layers()).any(|(g, l)| {
                g.weights.dim() != l.weights().dim() || g.biases.len() != l.biases().len()
            })
        {
            return Err(Error::Shape("gradients do not match model parameters".into()));
        }
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                let lr = T::of(self.learning_rate);
                for (layer, g) in model.layers_mut().iter_mut().zip(&grads.layers) {
                    layer.weights.scaled_add(-lr, &g.weights);
                    layer.biases.scaled_add(-lr, &g.biases);
                }
            }
            OptimizerKind::Adam => {
                let (m, v) = self
                    .moments
                    .get_or_insert_with(|| (Gradients::zeros_like(model), Gradients::zeros_like(model)));
                let t = self.step as i32;
                let b1 = T::of(BETA1);
                let b2 = T::of(BETA2);
                let c1 = T::of(1.0 - BETA1);
                let c2 = T::of(1.0 - BETA2);
                let bias1 = T::of(1.0 - BETA1.powi(t));
                let bias2 = T::of(1.0 - BETA2.powi(t));
                let lr = T::of(self.learning_rate);
                let eps = T::of(EPSILON);
                let update = |p: &mut T, g: &T, m: &mut T, v: &mut T| {
                    *m = b1 * *m + c1 * *g;
                    *v = b2 * *v + c2 * *g * *g;
                    let m_hat = *m / bias1;
                    let v_hat = *v / bias2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                };
                for (((layer, g), m), v) in model
                    .layers_mut()
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(m.layers.iter_mut())
                    .zip(v.layers.iter_mut())
                {
                    Zip::from(&mut layer.weights)
                        .and(&g.weights)
                        .and(&mut m.weights)
                        .and(&mut v.weights)
                        .for_each(update);
                    Zip::from(&mut layer.biases)
                        .and(&g.biases)
                        .and(&mut m.biases)
                        .and(&mut v.biases)
                        .for_each(update);
                }
            }
        }
        if !model.is_finite() {
            return Err(Error::NonFinite(format!("parameters after step {}", self.step)));
        }
        Ok(())
    }
}
