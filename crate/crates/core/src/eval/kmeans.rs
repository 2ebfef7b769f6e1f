use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed::derive_seed;

const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
    /// Sum of squared distances from each point to its centroid.
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the closest centroid; ties go to the lower index.
fn nearest(point: &[f64], centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(point, centroid.as_slice().expect("standard layout"));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_seeding(points: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut dist: Vec<f64> = points
        .rows()
        .into_iter()
        .map(|p| sq_dist(p.as_slice().unwrap(), centroids.row(0).as_slice().unwrap()))
        .collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, p) in points.rows().into_iter().enumerate() {
            let d = sq_dist(p.as_slice().unwrap(), centroids.row(c).as_slice().unwrap());
            if d < dist[i] {
                dist[i] = d;
            }
        }
    }
    centroids
}

fn lloyd(points: &Array2<f64>, k: usize, seed: u64) -> ClusterAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d) = points.dim();
    let mut centroids = plus_plus_seeding(points, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];

    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        for (i, p) in points.rows().into_iter().enumerate() {
            let (c, dd) = nearest(p.as_slice().unwrap(), &centroids);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            dists[i] = dd;
        }

        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, p) in points.rows().into_iter().enumerate() {
            let mut s = sums.row_mut(labels[i]);
            s += &p;
            counts[labels[i]] += 1;
        }
        let mut reseeded = false;
        let mut taken = vec![false; n];
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let mean = sums.row(c).mapv(|v| v / count as f64);
                centroids.row_mut(c).assign(&mean);
            } else {
                // Move the empty centroid onto the point farthest from its own centroid.
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if dists[b] >= dists[i] => Some(b),
                        _ => Some(i),
                    })
                    .expect("n >= k");
                taken[far] = true;
                dists[far] = 0.0;
                centroids.row_mut(c).assign(&points.row(far));
                reseeded = true;
            }
        }
        if !changed && !reseeded {
            break;
        }
    }

    let inertia = points
        .rows()
        .into_iter()
        .zip(&labels)
        .map(|(p, &c)| sq_dist(p.as_slice().unwrap(), centroids.row(c).as_slice().unwrap()))
        .sum();
    ClusterAssignment { labels, k, inertia }
}

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
/// inertia. Restart `r` uses a seed derived from `(seed, r)`, so the result
/// does not depend on how restarts are scheduled across threads.
pub fn kmeans(points: ArrayView2<f64>, k: usize, seed: u64, restarts: usize) -> Result<ClusterAssignment> {
    let n = points.nrows();
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {n} points")));
    }
    if !points.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("k-means input".into()));
    }
    let points = points.as_standard_layout().into_owned();
    let runs: Vec<ClusterAssignment> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| lloyd(&points, k, derive_seed(seed, "kmeans", r as u64)))
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("at least one restart"))
}
