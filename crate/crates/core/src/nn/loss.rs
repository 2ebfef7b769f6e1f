use ndarray::{Array2, ArrayView2, Zip};

use super::Real;
use crate::error::{Error, Result};

/// Floor added inside the logarithm of the cross-entropy.
pub const LOG_FLOOR: f64 = 1e-12;

const STOCHASTIC_TOL: f64 = 1e-4;

/// Max-shifted softmax of a single vector.
pub fn softmax<T: Real>(v: &[T]) -> Vec<T> {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = v.iter().map(|&x| (x - max).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// Row-wise softmax of a matrix.
pub fn softmax_rows<T: Real>(m: ArrayView2<T>) -> Array2<T> {
    let mut out = m.to_owned();
    super::Activation::Softmax.apply(&mut out);
    out
}

fn same_shape<T>(a: &ArrayView2<T>, b: &ArrayView2<T>, what: &str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!("{what}: {:?} vs {:?}", a.dim(), b.dim())));
    }
    Ok(())
}

/// Reconstruction error: squared error summed over features, averaged over
/// samples.
pub fn mse_loss<T: Real>(x: ArrayView2<T>, recon: ArrayView2<T>) -> Result<f64> {
    same_shape(&x, &recon, "mse")?;
    if x.nrows() == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0f64;
    Zip::from(&x).and(&recon).for_each(|&a, &b| {
        let d = a.as_f64() - b.as_f64();
        total += d * d;
    });
    Ok(total / x.nrows() as f64)
}

fn check_stochastic<T: Real>(m: &ArrayView2<T>, what: &str) -> Result<()> {
    for (i, row) in m.rows().into_iter().enumerate() {
        let mut sum = 0.0;
        for &v in row {
            let v = v.as_f64();
            if v.is_nan() || v < -STOCHASTIC_TOL {
                return Err(Error::InvalidArgument(format!(
                    "{what} row {i} has entry {v}, not a probability"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidArgument(format!(
                "{what} row {i} sums to {sum}, not 1"
            )));
        }
    }
    Ok(())
}

/// Mean over rows of `-Σ_j target_ij · ln(predicted_ij + ε)`.
///
/// Asymmetric: `target` plays the role of the true distribution.
pub fn cross_entropy<T: Real>(target: ArrayView2<T>, predicted: ArrayView2<T>) -> Result<f64> {
    same_shape(&target, &predicted, "cross-entropy")?;
    check_stochastic(&target, "target")?;
    check_stochastic(&predicted, "prediction")?;
    if target.nrows() == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0f64;
    Zip::from(&target).and(&predicted).for_each(|&t, &p| {
        let t = t.as_f64();
        if t != 0.0 {
            total -= t * (p.as_f64() + LOG_FLOOR).ln();
        }
    });
    Ok(total / target.nrows() as f64)
}

/// Mean Shannon entropy (nats) of the rows of a row-stochastic matrix,
/// with `0 ln 0 = 0`.
pub fn entropy<T: Real>(p: ArrayView2<T>) -> f64 {
    if p.nrows() == 0 {
        return 0.0;
    }
    let total: f64 = p
        .iter()
        .map(|&v| v.as_f64())
        .filter(|&v| v > 0.0)
        .map(|v| -v * v.ln())
        .sum();
    total / p.nrows() as f64
}

/// A scalar loss on a network's final output, with its target.
#[derive(Debug, Clone)]
pub enum Loss<'a, T: Real> {
    /// Squared error summed over features, averaged over rows.
    Mse { target: ArrayView2<'a, T> },
    /// Cross-entropy with `target` as the true distribution.
    CrossEntropy { target: ArrayView2<'a, T> },
}

impl<T: Real> Loss<'_, T> {
    pub fn value(&self, predicted: ArrayView2<T>) -> Result<f64> {
        match self {
            Loss::Mse { target } => mse_loss(target.view(), predicted),
            Loss::CrossEntropy { target } => cross_entropy(target.view(), predicted),
        }
    }

    /// Gradient of [`Loss::value`] w.r.t. `predicted`.
    pub fn gradient(&self, predicted: ArrayView2<T>) -> Result<Array2<T>> {
        let n = predicted.nrows().max(1);
        match self {
            Loss::Mse { target } => {
                same_shape(target, &predicted, "mse")?;
                let scale = T::of(2.0 / n as f64);
                Ok((&predicted - target) * scale)
            }
            Loss::CrossEntropy { target } => {
                same_shape(target, &predicted, "cross-entropy")?;
                let floor = T::of(LOG_FLOOR);
                let scale = T::of(-1.0 / n as f64);
                let mut g = Array2::zeros(predicted.raw_dim());
                Zip::from(&mut g)
                    .and(target)
                    .and(&predicted)
                    .for_each(|g, &t, &p| *g = scale * t / (p + floor));
                Ok(g)
            }
        }
    }
}
