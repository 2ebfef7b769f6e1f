//! Clustering of latent codes and the ACC/NMI scores computed on them.

mod hungarian;
mod kmeans;
mod metrics;
mod report;

use ndarray::{Array2, ArrayView2};

pub use hungarian::min_cost_assignment;
pub use kmeans::{kmeans, ClusterAssignment};
pub use metrics::{clustering_accuracy, contingency, nmi};
pub use report::{aggregate_table, read_csv, render_table, write_csv, EvalReport, ReportRow, Scores};

use crate::error::Result;
use crate::nn::Network;

/// Encodes `x`, clusters the codes into `k` groups and scores them against `truth`.
pub fn evaluate(model: &Network<f32>, x: ArrayView2<f32>, truth: &[u32], k: usize, seed: u64, restarts: usize) -> Result<Scores> {
    let codes = model.encode(x)?.mapv(f64::from);
    score_points(&codes, truth, k, seed, restarts)
}

/// Clusters raw points and scores the partition.
pub fn score_points(points: &Array2<f64>, truth: &[u32], k: usize, seed: u64, restarts: usize) -> Result<Scores> {
    let assignment = kmeans(points.view(), k, seed, restarts)?;
    Ok(Scores {
        acc: clustering_accuracy(&assignment.labels, truth)?,
        nmi: nmi(&assignment.labels, truth)?,
    })
}
