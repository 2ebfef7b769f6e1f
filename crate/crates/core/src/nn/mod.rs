//! Minimal dense-network engine.
//!
//! Everything trained in the pipeline is a [`Network`]: the primary
//! autoencoder, the evidence autoencoders and the Q-heads. Training runs in
//! `f32`; the same code instantiated at `f64` backs the finite-difference
//! gradient checks. Loss values and other reductions accumulate in `f64`.

mod activation;
mod gradcheck;
mod layer;
mod loss;
mod network;
mod optim;

use std::fmt::{Debug, Display};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub use activation::Activation;
pub use gradcheck::{check_gradients, gradient_check, GradCheckReport, Probe};
pub use layer::{DenseLayer, LayerGradient};
pub use loss::{cross_entropy, entropy, mse_loss, softmax, softmax_rows, Loss, LOG_FLOOR};
pub use network::{Gradients, Network};
pub use optim::{Optimizer, OptimizerKind};

/// Floating-point element type usable by the engine.
pub trait Real:
    Float
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to any Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
