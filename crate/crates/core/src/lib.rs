//! Evidence transfer for autoencoder latent spaces.
//!
//! A denoising autoencoder is pretrained on the primary data. Each external
//! categorical evidence source gets a small softmax autoencoder, trained only
//! briefly so that evidence unrelated to the data yields near-uniform codes.
//! The primary autoencoder is then fine-tuned on the samples that have
//! evidence, jointly minimising reconstruction error and the cross-entropy
//! between the evidence codes and freshly initialised softmax heads on its
//! bottleneck. Latent quality is measured by k-means clustering accuracy and
//! NMI before and after transfer.

pub mod error;
pub mod eval;
pub mod evidence;
pub mod experiment;
pub mod io;
pub mod nn;
pub mod pipeline;
pub mod seed;

pub use error::{Error, FormatError, Result};
pub use eval::{EvalReport, Scores};
pub use evidence::{EvidenceSet, EvidenceSource};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentOutput};
pub use io::DatasetBundle;
pub use nn::{Network, OptimizerKind};
pub use pipeline::{TrainConfig, TransferState};
