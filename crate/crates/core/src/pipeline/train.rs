use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::evidence::{one_hot, EvidenceSource};
use crate::nn::{Activation, Loss, Network, Optimizer};
use crate::seed::derive_seed;

/// Zeroes each entry independently with probability `rate`.
pub fn corrupt(batch: ArrayView2<f32>, rate: f64, seed: u64) -> Result<Array2<f32>> {
    corrupt_with(batch, rate, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub(crate) fn corrupt_with<R: Rng>(batch: ArrayView2<f32>, rate: f64, rng: &mut R) -> Result<Array2<f32>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("corruption rate must be in [0, 1), got {rate}")));
    }
    let mut out = batch.to_owned();
    if rate > 0.0 {
        out.mapv_inplace(|v| if rng.random::<f64>() < rate { 0.0 } else { v });
    }
    Ok(out)
}

/// Shuffled minibatches of `indices`, one epoch.
pub(crate) fn epoch_batches<R: Rng>(indices: &[usize], batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order = indices.to_vec();
    order.shuffle(rng);
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

fn check_finite(x: ArrayView2<f32>, what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// A trained primary autoencoder and its mean training loss per epoch.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub model: Network<f32>,
    pub epoch_losses: Vec<f64>,
}

/// Trains a denoising autoencoder with layer widths `dims` (input first,
/// latent last) to reconstruct clean `x` from corrupted copies.
pub fn pretrain_primary(x: ArrayView2<f32>, dims: &[usize], config: &TrainConfig) -> Result<Pretrained> {
    if x.nrows() == 0 {
        return Err(Error::InvalidArgument("cannot pretrain on an empty dataset".into()));
    }
    check_finite(x, "pretraining data")?;
    if dims.first() != Some(&x.ncols()) {
        return Err(Error::LayerShape { layer: 0, expected: dims.first().copied().unwrap_or(0), got: x.ncols() });
    }
    let mut init = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "primary-init", 0));
    let model = Network::autoencoder(dims, &mut init)?;
    pretrain_model(x, model, config)
}

/// Continues denoising training of an existing autoencoder.
pub fn pretrain_model(x: ArrayView2<f32>, mut model: Network<f32>, config: &TrainConfig) -> Result<Pretrained> {
    let mut order_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "pretrain-order", 0));
    let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "corruption", 0));
    let mut opt = Optimizer::new(config.optimizer, config.pretrain_lr)?;
    let all: Vec<usize> = (0..x.nrows()).collect();
    let mut epoch_losses = Vec::with_capacity(config.pretrain_epochs);
    for epoch in 0..config.pretrain_epochs {
        let mut total = 0.0;
        for batch in epoch_batches(&all, config.batch_size, &mut order_rng) {
            let clean = x.select(Axis(0), &batch);
            let noisy = corrupt_with(clean.view(), config.corruption_rate, &mut noise_rng)?;
            let (loss, grads) = model.loss_and_gradients(noisy.view(), &Loss::Mse { target: clean.view() })?;
            total += loss * batch.len() as f64;
            opt.step(&mut model, &grads)?;
        }
        let mean = total / x.nrows() as f64;
        log::debug!("pretrain epoch {epoch}: loss {mean:.6}");
        epoch_losses.push(mean);
    }
    Ok(Pretrained { model, epoch_losses })
}

/// A biased evidence autoencoder and the codes it assigns to the available
/// samples of its source.
#[derive(Debug, Clone)]
pub struct EvidenceCodes {
    pub model: Network<f32>,
    /// `M × d_e`, rows stochastic.
    pub codes: Array2<f32>,
    /// `index[r]` is the sample position of `codes` row `r`.
    pub index: Vec<usize>,
}

impl EvidenceCodes {
    pub fn width(&self) -> usize {
        self.codes.ncols()
    }
}

/// Trains a `W → W → W` softmax autoencoder on the one-hot evidence for
/// exactly `config.evidence_ae_iters` minibatch steps, then encodes every
/// available sample.
pub fn train_evidence_ae(source: &EvidenceSource, config: &TrainConfig, seed: u64) -> Result<EvidenceCodes> {
    let encoded = one_hot(source);
    let m = encoded.rows.nrows();
    if m == 0 {
        return Err(Error::Evidence("source has no available samples".into()));
    }
    let w = source.width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = Network::uniform(&[w, w, w], Activation::Softmax, Some(0), &mut rng)?;
    let mut opt = Optimizer::new(config.optimizer, config.evidence_lr)?;
    let rows: Vec<usize> = (0..m).collect();
    let mut pending = Vec::new();
    for _ in 0..config.evidence_ae_iters {
        if pending.is_empty() {
            pending = epoch_batches(&rows, config.batch_size, &mut rng);
            pending.reverse();
        }
        let batch = pending.pop().expect("refilled");
        let x = encoded.rows.select(Axis(0), &batch);
        let (_, grads) = model.loss_and_gradients(x.view(), &Loss::Mse { target: x.view() })?;
        opt.step(&mut model, &grads)?;
    }
    let codes = model.encode(encoded.rows.view())?;
    Ok(EvidenceCodes { model, codes, index: encoded.index })
}
