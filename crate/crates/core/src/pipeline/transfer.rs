use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::train::{epoch_batches, EvidenceCodes};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, mse_loss, Activation, Gradients, Loss, Network, Optimizer, Real};
use crate::seed::derive_seed;

/// Everything the transfer phase starts from: the pretrained primary
/// autoencoder, one set of frozen evidence codes per source, and one freshly
/// initialised softmax Q-head per source.
#[derive(Debug, Clone)]
pub struct TransferState {
    pub primary: Network<f32>,
    pub evidence: Vec<EvidenceCodes>,
    pub q_heads: Vec<Network<f32>>,
}

/// Single softmax layer from a `latent`-wide bottleneck to `width` outputs.
pub fn q_head(latent: usize, width: usize, seed: u64) -> Result<Network<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Network::uniform(&[latent, width], Activation::Softmax, Some(0), &mut rng)
}

impl TransferState {
    /// Heads are seeded from `seed` and their position in `evidence`.
    pub fn new(primary: Network<f32>, evidence: Vec<EvidenceCodes>, seed: u64) -> Result<Self> {
        let seeds: Vec<u64> = (0..evidence.len()).map(|j| derive_seed(seed, "q-head", j as u64)).collect();
        Self::with_head_seeds(primary, evidence, &seeds)
    }

    pub fn with_head_seeds(primary: Network<f32>, evidence: Vec<EvidenceCodes>, seeds: &[u64]) -> Result<Self> {
        if seeds.len() != evidence.len() {
            return Err(Error::InvalidArgument(format!("{} head seeds for {} sources", seeds.len(), evidence.len())));
        }
        let q_heads = evidence
            .iter()
            .zip(seeds)
            .map(|(e, &s)| q_head(primary.latent_dim(), e.width(), s))
            .collect::<Result<_>>()?;
        Ok(Self { primary, evidence, q_heads })
    }

    pub fn sources(&self) -> usize {
        self.evidence.len()
    }

    /// Samples with evidence from at least one source, ascending.
    pub fn labelled_indices(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.evidence.iter().flat_map(|e| e.index.iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.evidence.is_empty() {
            return Err(Error::InvalidArgument("evidence transfer needs at least one source".into()));
        }
        if self.q_heads.len() != self.evidence.len() {
            return Err(Error::Shape(format!("{} Q-heads for {} sources", self.q_heads.len(), self.evidence.len())));
        }
        for (j, (e, head)) in self.evidence.iter().zip(&self.q_heads).enumerate() {
            if e.codes.nrows() != e.index.len() {
                return Err(Error::Shape(format!(
                    "source {j}: {} code rows for {} indexed samples",
                    e.codes.nrows(),
                    e.index.len()
                )));
            }
            if let Some(&bad) = e.index.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidArgument(format!("source {j}: sample index {bad} out of range for {n} samples")));
            }
            if head.input_dim() != self.primary.latent_dim() || head.output_dim() != e.width() {
                return Err(Error::Shape(format!(
                    "source {j}: Q-head {}→{} does not connect bottleneck {} to codes of width {}",
                    head.input_dim(),
                    head.output_dim(),
                    self.primary.latent_dim(),
                    e.width()
                )));
            }
        }
        Ok(())
    }
}

/// Cross-entropy targets of one head within a minibatch: the batch rows that
/// have evidence and their evidence codes.
#[derive(Debug, Clone)]
pub struct HeadTarget<T: Real> {
    pub rows: Vec<usize>,
    pub codes: Array2<T>,
}

/// Value and gradients of `MSE + λ · mean_j CE(Z_Vj, Q_j(z))` on one batch.
#[derive(Debug, Clone)]
pub struct JointEvaluation<T: Real> {
    pub total: f64,
    pub mse: f64,
    /// Per-head cross-entropy, 0 for heads without rows in the batch.
    pub ce: Vec<f64>,
    pub primary: Gradients<T>,
    pub heads: Vec<Gradients<T>>,
}

/// Joint objective on a batch. Each head's cross-entropy is averaged over the
/// rows it has targets for; gradients from the heads enter the primary
/// network at its bottleneck.
pub fn joint_objective<T: Real>(
    primary: &Network<T>,
    heads: &[Network<T>],
    batch: ArrayView2<T>,
    targets: &[HeadTarget<T>],
    lambda: f64,
) -> Result<JointEvaluation<T>> {
    if heads.is_empty() || heads.len() != targets.len() {
        return Err(Error::InvalidArgument(format!("{} heads for {} targets", heads.len(), targets.len())));
    }
    let acts = primary.forward(batch)?;
    let out = acts.last().expect("non-empty network");
    let mse = mse_loss(batch, out.view())?;
    let g_out = Loss::Mse { target: batch }.gradient(out.view())?;
    let bn = primary.bottleneck_index();
    let z = &acts[bn];
    let weight = T::of(lambda / heads.len() as f64);
    let mut g_z = Array2::<T>::zeros(z.raw_dim());
    let mut ce = vec![0.0; heads.len()];
    let mut head_grads = Vec::with_capacity(heads.len());
    for (j, (head, target)) in heads.iter().zip(targets).enumerate() {
        if target.rows.is_empty() {
            head_grads.push(Gradients::zeros_like(head));
            continue;
        }
        if target.codes.nrows() != target.rows.len() || target.rows.iter().any(|&r| r >= z.nrows()) {
            return Err(Error::Shape(format!("head {j}: targets do not match the batch")));
        }
        let zj = z.select(Axis(0), &target.rows);
        let h_acts = head.forward(zj.view())?;
        let q = &h_acts[0];
        ce[j] = cross_entropy(target.codes.view(), q.view())?;
        let g_q = Loss::CrossEntropy { target: target.codes.view() }.gradient(q.view())? * weight;
        let (grads, g_in) = head.backward(zj.view(), &h_acts, g_q, None)?;
        for (r, &row) in target.rows.iter().enumerate() {
            let mut dst = g_z.row_mut(row);
            dst += &g_in.row(r);
        }
        head_grads.push(grads);
    }
    let total = mse + lambda * ce.iter().sum::<f64>() / heads.len() as f64;
    let (primary_grads, _) = primary.backward(batch, &acts, g_out, Some((bn, g_z.view())))?;
    Ok(JointEvaluation { total, mse, ce, primary: primary_grads, heads: head_grads })
}

/// One optimisation step of the transfer phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferStep {
    pub epoch: usize,
    /// Sample indices of the minibatch.
    pub batch: Vec<usize>,
    pub total: f64,
    pub mse: f64,
    pub ce: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Transferred {
    pub model: Network<f32>,
    pub q_heads: Vec<Network<f32>>,
    pub trace: Vec<TransferStep>,
}

/// Fine-tunes a copy of the primary autoencoder on the samples that have
/// evidence. The state is left untouched.
pub fn evidence_transfer(x: ArrayView2<f32>, state: &TransferState, config: &TrainConfig) -> Result<Transferred> {
    evidence_transfer_observed(x, state, config, |_, _| {})
}

/// Like [`evidence_transfer`], calling `observer` before every parameter
/// update with the step record and the model the step was evaluated on.
pub fn evidence_transfer_observed<F>(
    x: ArrayView2<f32>,
    state: &TransferState,
    config: &TrainConfig,
    mut observer: F,
) -> Result<Transferred>
where
    F: FnMut(&TransferStep, &Network<f32>),
{
    state.validate(x.nrows())?;
    let n = x.nrows();
    // sample -> code row, per source
    let lookup: Vec<Vec<Option<usize>>> = state
        .evidence
        .iter()
        .map(|e| {
            let mut pos = vec![None; n];
            for (r, &i) in e.index.iter().enumerate() {
                pos[i] = Some(r);
            }
            pos
        })
        .collect();
    let labelled = state.labelled_indices();

    let mut model = state.primary.clone();
    let mut heads = state.q_heads.clone();
    let mut opt = Optimizer::new(config.optimizer, config.transfer_lr)?;
    let mut head_opts = heads
        .iter()
        .map(|_| Optimizer::new(config.optimizer, config.transfer_lr))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "transfer-order", 0));
    let mut trace = Vec::new();

    for epoch in 0..config.transfer_epochs {
        for batch in epoch_batches(&labelled, config.batch_size, &mut rng) {
            let xb = x.select(Axis(0), &batch);
            let targets: Vec<HeadTarget<f32>> = state
                .evidence
                .iter()
                .zip(&lookup)
                .map(|(e, pos)| {
                    let (rows, code_rows): (Vec<usize>, Vec<usize>) =
                        batch.iter().enumerate().filter_map(|(r, &i)| pos[i].map(|c| (r, c))).unzip();
                    HeadTarget { rows, codes: e.codes.select(Axis(0), &code_rows) }
                })
                .collect();
            let eval = joint_objective(&model, &heads, xb.view(), &targets, config.lambda)?;
            let step = TransferStep { epoch, batch, total: eval.total, mse: eval.mse, ce: eval.ce };
            observer(&step, &model);
            opt.step(&mut model, &eval.primary)?;
            for ((head, head_opt), (grads, target)) in heads.iter_mut().zip(&mut head_opts).zip(eval.heads.iter().zip(&targets)) {
                if !target.rows.is_empty() {
                    head_opt.step(head, grads)?;
                }
            }
            trace.push(step);
        }
        if let Some(last) = trace.last() {
            log::debug!("transfer epoch {epoch}: last batch loss {:.6} (mse {:.6})", last.total, last.mse);
        }
    }
    Ok(Transferred { model, q_heads: heads, trace })
}
