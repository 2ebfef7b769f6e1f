use ndarray::{Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
    /// Row-wise softmax over the layer's outputs.
    Softmax,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Linear => 1,
            Activation::Softmax => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Linear),
            2 => Some(Activation::Softmax),
            _ => None,
        }
    }

    /// Applies the activation in place to a batch of pre-activations.
    pub(crate) fn apply<T: Real>(self, z: &mut Array2<T>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() }),
            Activation::Linear => {}
            Activation::Softmax => {
                for mut row in z.rows_mut() {
                    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
                    row.mapv_inplace(|v| (v - max).exp());
                    let sum = row.iter().copied().fold(T::zero(), |a, b| a + b);
                    row.mapv_inplace(|v| v / sum);
                }
            }
        }
    }

    /// Maps the gradient w.r.t. the layer output to the gradient w.r.t. the
    /// pre-activation, using only the layer output.
    pub(crate) fn backprop<T: Real>(self, output: ArrayView2<T>, grad: Array2<T>) -> Array2<T> {
        match self {
            Activation::Linear => grad,
            Activation::Relu => {
                let mut grad = grad;
                Zip::from(&mut grad).and(&output).for_each(|g, &y| {
                    if y <= T::zero() {
                        *g = T::zero();
                    }
                });
                grad
            }
            Activation::Softmax => {
                // dz = s * (g - <g, s>) row-wise
                let dot = (&grad * &output).sum_axis(Axis(1)).insert_axis(Axis(1));
                let mut delta = grad - &dot;
                delta *= &output;
                delta
            }
        }
    }
}
