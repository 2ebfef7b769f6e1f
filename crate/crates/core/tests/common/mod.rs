#![allow(dead_code)]

use std::path::Path;

use evt_core::error::FormatError;
use evt_core::evidence::EvidenceSource;
use evt_core::io::load_idx;
use evt_core::nn::{Activation, DenseLayer, Network};
use evt_core::{Error, Result};
use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn idx_images(count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    let mut b = vec![0, 0, 8, 3];
    for d in [count, rows, cols] {
        b.extend(d.to_be_bytes());
    }
    b.extend_from_slice(pixels);
    b
}

pub fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut b = vec![0, 0, 8, 1];
    b.extend((labels.len() as u32).to_be_bytes());
    b.extend_from_slice(labels);
    b
}

/// The four malformed IDX fixture classes, each as an (images, labels) pair
/// that must fail to load with the named error.
pub fn idx_faults() -> Vec<(&'static str, Vec<u8>, Vec<u8>)> {
    let good_images = idx_images(2, 2, 2, &[0, 64, 128, 255, 1, 2, 3, 4]);
    let good_labels = idx_labels(&[3, 7]);
    let mut bad_magic = good_images.clone();
    bad_magic[3] = 0x02;
    let truncated = good_images[..good_images.len() - 3].to_vec();
    let overflow = idx_images(u32::MAX, u32::MAX, u32::MAX, &[0; 8]);
    let mismatch = idx_labels(&[3, 7, 1]);
    vec![
        ("bad magic", bad_magic, good_labels.clone()),
        ("truncated", truncated, good_labels.clone()),
        ("dimension overflow", overflow, good_labels),
        ("count mismatch", good_images, mismatch),
    ]
}

pub fn load_idx_bytes(dir: &Path, images: &[u8], labels: &[u8]) -> Result<evt_core::DatasetBundle> {
    let ip = dir.join("images-idx3-ubyte");
    let lp = dir.join("labels-idx1-ubyte");
    std::fs::write(&ip, images)?;
    std::fs::write(&lp, labels)?;
    load_idx(&ip, &lp)
}

/// Whether `err` is the structured error a fault class should produce.
pub fn fault_matches(class: &str, err: &Error) -> bool {
    matches!(
        (class, err),
        ("bad magic", Error::Format(FormatError::BadMagic { .. }))
            | ("truncated", Error::Format(FormatError::Truncated { .. }))
            | ("dimension overflow", Error::Format(FormatError::DimensionOverflow(_)))
            | ("count mismatch", Error::Format(FormatError::CountMismatch { .. }))
    )
}

/// Matrix of arbitrary bit patterns, NaNs and infinities included.
pub fn random_matrix(rng: &mut ChaCha8Rng) -> Array2<f32> {
    let rows = rng.random_range(0..20);
    let cols = rng.random_range(0..20);
    Array2::from_shape_simple_fn((rows, cols), || f32::from_bits(rng.random()))
}

pub fn random_evidence(rng: &mut ChaCha8Rng) -> EvidenceSource {
    let n = rng.random_range(1..200);
    let width = rng.random_range(1..=255usize);
    let values = (0..n)
        .map(|_| rng.random_bool(0.7).then(|| rng.random_range(0..width as u32)))
        .collect();
    EvidenceSource::new(values, width).unwrap()
}

pub fn random_network(rng: &mut ChaCha8Rng) -> Network<f32> {
    let depth = rng.random_range(1..5);
    let dims: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..12)).collect();
    let acts = [Activation::Relu, Activation::Linear, Activation::Softmax];
    let layers = dims
        .windows(2)
        .map(|w| DenseLayer::glorot(w[0], w[1], acts[rng.random_range(0..3)], rng))
        .collect();
    let mut net = Network::new(layers, rng.random_range(0..depth)).unwrap();
    // arbitrary finite bit patterns, subnormals and signed zeros included
    let params: Vec<f32> = (0..net.param_count())
        .map(|_| loop {
            let v = f32::from_bits(rng.random());
            if v.is_finite() {
                break v;
            }
        })
        .collect();
    net.set_flat_params(&params).unwrap();
    net
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

/// Network with the given per-layer activations and non-zero random biases.
pub fn random_net(dims: &[usize], acts: &[Activation], bottleneck: usize, rng: &mut ChaCha8Rng) -> Network<f64> {
    let layers = dims
        .windows(2)
        .zip(acts)
        .map(|(w, &a)| DenseLayer::glorot(w[0], w[1], a, rng))
        .collect();
    let mut net = Network::new(layers, bottleneck).unwrap();
    let params: Vec<f64> = net
        .flat_params()
        .iter()
        .map(|&p| {
            let e: f64 = StandardNormal.sample(rng);
            p + 0.1 * e
        })
        .collect();
    net.set_flat_params(&params).unwrap();
    net
}

/// All permutations of `0..n`, Heap's algorithm.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            let j = if k.is_multiple_of(2) { i } else { 0 };
            a.swap(j, k - 1);
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

/// Best matched count over every injective cluster → class mapping.
pub fn brute_force_matched(pred: &[usize], truth: &[usize], k: usize) -> u64 {
    let mut table = vec![vec![0u64; k]; k];
    for (&p, &t) in pred.iter().zip(truth) {
        table[p][t] += 1;
    }
    permutations(k)
        .iter()
        .map(|perm| (0..k).map(|i| table[i][perm[i]]).sum())
        .max()
        .unwrap()
}

/// `I / sqrt(H_a H_b)` evaluated straight from joint and marginal probabilities.
pub fn nmi_direct(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut joint = vec![vec![0.0; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        joint[x][y] += 1.0 / n;
    }
    let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let pb: Vec<f64> = (0..kb).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let h = |p: &[f64]| -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>();
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            if joint[i][j] > 0.0 {
                mi += joint[i][j] * (joint[i][j] / (pa[i] * pb[j])).ln();
            }
        }
    }
    mi / (h(&pa) * h(&pb)).sqrt()
}

