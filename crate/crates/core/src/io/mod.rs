//! Dataset loading, synthetic data, and the binary formats used to persist
//! matrices, evidence and model checkpoints. Every parser checks declared
//! lengths against the bytes actually present before reading.

mod checkpoint;
mod evidence_file;
mod idx;
mod matrix;
mod synthetic;

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, FormatError, Result};

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use evidence_file::{decode_evidence, encode_evidence, load_evidence, save_evidence};
pub use idx::{load_idx, parse_idx_images, parse_idx_labels, IdxImages, IMAGES_MAGIC, LABELS_MAGIC};
pub use matrix::{decode_matrix, encode_matrix, load_matrix, save_matrix};
pub use synthetic::{nuisance_blobs, synthetic_axis_gaussians, synthetic_gaussians};

/// Features plus ground-truth labels. Labels are only used for evaluation and
/// for synthesising evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub features: Array2<f32>,
    pub labels: Vec<u32>,
    pub name: String,
    pub provenance: String,
}

impl DatasetBundle {
    pub fn new(features: Array2<f32>, labels: Vec<u32>, name: impl Into<String>, provenance: impl Into<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("dataset features".into()));
        }
        Ok(Self { features, labels, name: name.into(), provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct label values.
    pub fn class_count(&self) -> usize {
        self.labels.iter().collect::<std::collections::BTreeSet<_>>().len()
    }
}

/// Reads a label file: one non-negative integer per line, blank lines ignored.
pub fn load_labels_text(path: &Path) -> Result<Vec<u32>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.parse::<u32>()
                .map_err(|_| FormatError::Corrupt(format!("{}: line {}: not a label: {l:?}", path.display(), i + 1)).into())
        })
        .collect()
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    Ok(std::fs::read(path)?)
}

/// Fails with `Truncated` unless `bytes` holds at least `needed` bytes.
fn require(bytes: &[u8], needed: u64) -> Result<(), FormatError> {
    if (bytes.len() as u64) < needed {
        return Err(FormatError::Truncated { needed, available: bytes.len() as u64 });
    }
    Ok(())
}

/// Fails with `TrailingBytes` if `bytes` is longer than `expected`.
fn exact(bytes: &[u8], expected: u64) -> Result<(), FormatError> {
    require(bytes, expected)?;
    match bytes.len() as u64 - expected {
        0 => Ok(()),
        extra => Err(FormatError::TrailingBytes(extra)),
    }
}

fn magic_of(tag: &[u8; 4]) -> u32 {
    u32::from_be_bytes(*tag)
}

fn check_magic(bytes: &[u8], tag: &[u8; 4]) -> Result<(), FormatError> {
    require(bytes, 4)?;
    let found = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    if found != magic_of(tag) {
        return Err(FormatError::BadMagic { expected: magic_of(tag), found });
    }
    Ok(())
}
