use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::OptimizerKind;

/// Optimisation settings for all three training phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the cross-entropy term in the transfer objective.
    pub lambda: f64,
    /// Probability of zeroing each input entry during pretraining.
    pub corruption_rate: f64,
    pub pretrain_epochs: usize,
    /// Minibatch steps for each evidence autoencoder.
    pub evidence_ae_iters: usize,
    pub transfer_epochs: usize,
    pub batch_size: usize,
    pub pretrain_lr: f64,
    pub evidence_lr: f64,
    pub transfer_lr: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// Evidence autoencoders may train for at most this fraction of the
    /// pretraining steps, which keeps them biased.
    pub evidence_budget_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            corruption_rate: 0.2,
            pretrain_epochs: 50,
            evidence_ae_iters: 200,
            transfer_epochs: 20,
            batch_size: 256,
            pretrain_lr: 1e-3,
            evidence_lr: 1e-2,
            transfer_lr: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            evidence_budget_fraction: 0.05,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("train.{name} must be positive, got {v}")))
    }
}

fn nonzero(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::Config(format!("train.{name} must be at least 1")));
    }
    Ok(())
}

impl TrainConfig {
    /// Minibatches per epoch over `n` samples.
    pub fn batches_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size.max(1))
    }

    pub fn pretrain_steps(&self, n: usize) -> usize {
        self.pretrain_epochs * self.batches_per_epoch(n)
    }

    /// Checks ranges and the evidence budget for a dataset of `n` samples.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.validate_ranges()?;
        let budget = self.evidence_budget_fraction * self.pretrain_steps(n) as f64;
        if self.evidence_ae_iters as f64 > budget {
            return Err(Error::Config(format!(
                "train.evidence_ae_iters = {} exceeds {} x {} pretraining steps ({} allowed)",
                self.evidence_ae_iters,
                self.evidence_budget_fraction,
                self.pretrain_steps(n),
                budget.floor()
            )));
        }
        Ok(())
    }

    /// Checks every field on its own, without reference to a dataset.
    pub fn validate_ranges(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("train.lambda must be >= 0, got {}", self.lambda)));
        }
        if !(0.0..1.0).contains(&self.corruption_rate) {
            return Err(Error::Config(format!(
                "train.corruption_rate must be in [0, 1), got {}",
                self.corruption_rate
            )));
        }
        nonzero("pretrain_epochs", self.pretrain_epochs)?;
        nonzero("evidence_ae_iters", self.evidence_ae_iters)?;
        nonzero("transfer_epochs", self.transfer_epochs)?;
        nonzero("batch_size", self.batch_size)?;
        positive("pretrain_lr", self.pretrain_lr)?;
        positive("evidence_lr", self.evidence_lr)?;
        positive("transfer_lr", self.transfer_lr)?;
        if !(self.evidence_budget_fraction > 0.0 && self.evidence_budget_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "train.evidence_budget_fraction must be in (0, 1], got {}",
                self.evidence_budget_fraction
            )));
        }
        Ok(())
    }
}
