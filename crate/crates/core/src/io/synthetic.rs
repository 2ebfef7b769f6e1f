use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::DatasetBundle;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Isotropic Gaussian blobs, `n_per_cluster` samples around each center,
/// labelled by component id in center order.
pub fn synthetic_gaussians(n_per_cluster: usize, centers: &[Vec<f64>], sigma: f64, seed: u64) -> Result<DatasetBundle> {
    let dim = centers.first().map_or(0, Vec::len);
    synthetic_axis_gaussians(n_per_cluster, centers, &vec![sigma; dim], seed)
}

/// Gaussian blobs with a per-dimension standard deviation shared by all
/// components.
pub fn synthetic_axis_gaussians(n_per_cluster: usize, centers: &[Vec<f64>], stds: &[f64], seed: u64) -> Result<DatasetBundle> {
    if centers.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 centers".into()));
    }
    let dim = centers[0].len();
    if dim == 0 || centers.iter().any(|c| c.len() != dim) || stds.len() != dim {
        return Err(Error::Shape("centers and stds must share one positive dimension".into()));
    }
    if !stds.iter().all(|&s| s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument("standard deviations must be finite and >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_per_cluster * centers.len();
    let mut features = Array2::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    for (c, center) in centers.iter().enumerate() {
        for i in 0..n_per_cluster {
            let mut row = features.row_mut(c * n_per_cluster + i);
            for (d, v) in row.iter_mut().enumerate() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v = (center[d] + stds[d] * e) as f32;
            }
            labels.push(c as u32);
        }
    }
    DatasetBundle::new(
        features,
        labels,
        "gaussians",
        format!("synthetic: {} components, {n_per_cluster} each, seed {seed}", centers.len()),
    )
}

/// Three clusters that an autoencoder does not separate on its own.
///
/// The clusters sit on an equilateral triangle with side `6σ` (σ = 1) in the
/// first two dimensions. Dimension 2 holds a second, class-independent
/// three-mode structure (modes at -14σ, 0 and 14σ, chosen uniformly per
/// sample), and dimensions 3..8 are unit noise. Reconstruction and k-means
/// both latch onto the wider modes, so the baseline partition is stable and
/// close to chance with respect to the labels. Everything is scaled by 0.05;
/// 200 samples per cluster, 600 × 8 in total.
pub fn nuisance_blobs(seed: u64) -> DatasetBundle {
    const SCALE: f64 = 0.05;
    const MODE_GAP: f64 = 14.0;
    let side = 6.0;
    let h = side * 3f64.sqrt() / 2.0;
    let corners = [[0.0, 0.0], [side, 0.0], [side / 2.0, h]];
    let centers: Vec<Vec<f64>> = corners
        .iter()
        .map(|c| {
            let mut v = vec![0.0; 8];
            v[0] = c[0] * SCALE;
            v[1] = c[1] * SCALE;
            v
        })
        .collect();
    let mut bundle = synthetic_axis_gaussians(200, &centers, &[SCALE; 8], seed).expect("valid constants");
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "nuisance-modes", 0));
    for mut row in bundle.features.rows_mut() {
        let mode = rng.random_range(-1i32..=1) as f64;
        row[2] += (mode * MODE_GAP * SCALE) as f32;
    }
    bundle.name = "nuisance-blobs".into();
    bundle
}
