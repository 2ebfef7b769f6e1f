//! The three training phases: denoising pretraining of the primary
//! autoencoder, short training of one evidence autoencoder per source, and
//! joint fine-tuning of the primary autoencoder with cross-entropy Q-heads.

mod config;
mod train;
mod transfer;

pub use config::TrainConfig;
pub use train::{corrupt, pretrain_model, pretrain_primary, train_evidence_ae, EvidenceCodes, Pretrained};
pub use transfer::{
    evidence_transfer, evidence_transfer_observed, joint_objective, q_head, HeadTarget, JointEvaluation, TransferState,
    TransferStep, Transferred,
};
