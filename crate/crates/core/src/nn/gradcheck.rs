use ndarray::ArrayView2;

use super::{Loss, Network};
use crate::error::Result;

/// Relative errors are measured against `max(|analytic|, |numeric|, SCALE_FLOOR)`
/// so that gradients near zero are compared in absolute terms.
const SCALE_FLOOR: f64 = 1e-6;

/// One evaluation of an objective: its value and the ReLU on/off pattern of
/// the forward pass that produced it (empty when the objective has no kinks).
#[derive(Debug, Clone)]
pub struct Probe {
    pub value: f64,
    pub pattern: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameters compared.
    pub checked: usize,
    /// Parameters skipped because a ±h perturbation flipped a ReLU.
    pub kinks: usize,
    /// Indices of parameters whose relative error exceeds the tolerance.
    pub flagged: Vec<usize>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Compares `analytic` with central differences of `objective` around `params`.
pub fn check_gradients<F>(
    params: &[f64],
    analytic: &[f64],
    h: f64,
    tol: f64,
    mut objective: F,
) -> GradCheckReport
where
    F: FnMut(&[f64]) -> Probe,
{
    assert_eq!(params.len(), analytic.len(), "one analytic gradient per parameter");
    let base = objective(params);
    let mut probe = params.to_vec();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        kinks: 0,
        flagged: Vec::new(),
    };
    for i in 0..params.len() {
        probe[i] = params[i] + h;
        let plus = objective(&probe);
        probe[i] = params[i] - h;
        let minus = objective(&probe);
        probe[i] = params[i];

        if plus.pattern != base.pattern || minus.pattern != base.pattern {
            report.kinks += 1;
            continue;
        }
        let numeric = (plus.value - minus.value) / (2.0 * h);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(SCALE_FLOOR);
        report.checked += 1;
        report.max_relative_error = report.max_relative_error.max(rel);
        if rel > tol || !rel.is_finite() {
            report.flagged.push(i);
        }
    }
    report
}

/// Finite-difference check of [`Network::loss_and_gradients`] for `loss`.
pub fn gradient_check(
    model: &Network<f64>,
    batch: ArrayView2<f64>,
    loss: &Loss<'_, f64>,
    h: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    let (_, grads) = model.loss_and_gradients(batch, loss)?;
    let params = model.flat_params();
    let mut scratch = model.clone();
    let report = check_gradients(&params, &grads.flatten(), h, tol, |p| {
        scratch.set_flat_params(p).expect("same parameter count");
        let acts = scratch.forward(batch).expect("shapes checked above");
        let value = loss
            .value(acts.last().expect("non-empty").view())
            .expect("shapes checked above");
        Probe {
            value,
            pattern: scratch.relu_pattern(&acts),
        }
    });
    Ok(report)
}
