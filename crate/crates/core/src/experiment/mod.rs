//! Declarative experiments: a TOML configuration names the dataset,
//! architecture, training settings, evidence sources and incompleteness
//! levels; [`run_experiment`] turns it into report rows.

mod run;
mod spec;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::fnv1a;
use crate::io::{load_idx, load_labels_text, load_matrix, nuisance_blobs, synthetic_gaussians, DatasetBundle};
use crate::pipeline::TrainConfig;

pub use run::{run_experiment, run_from_baseline, ExperimentOutput, LevelOutcome};
pub use spec::{EvidenceSpec, Incompleteness};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// IDX image and label files, optionally truncated to the first `limit` samples.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<usize>,
    },
    /// EVT-MAT features with a text label file (one label per line).
    Matrix {
        features: PathBuf,
        labels: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<usize>,
    },
    Gaussians {
        n_per_cluster: usize,
        centers: Vec<Vec<f64>>,
        sigma: f64,
        #[serde(default)]
        seed: u64,
    },
    /// The 600 × 8 three-cluster set from [`nuisance_blobs`].
    NuisanceBlobs {
        #[serde(default)]
        seed: u64,
    },
}

fn truncate(mut bundle: DatasetBundle, limit: Option<usize>) -> Result<DatasetBundle> {
    if let Some(limit) = limit {
        if limit == 0 {
            return Err(Error::Config("dataset.limit must be at least 1".into()));
        }
        if limit < bundle.len() {
            bundle.features = bundle.features.slice(ndarray::s![..limit, ..]).to_owned();
            bundle.labels.truncate(limit);
            bundle.provenance = format!("{} (first {limit})", bundle.provenance);
        }
    }
    Ok(bundle)
}

fn anchor(base: &Path, path: &Path) -> PathBuf {
    let joined = base.join(path);
    std::fs::canonicalize(&joined)
        .or_else(|_| std::path::absolute(&joined))
        .unwrap_or(joined)
}

impl DatasetSpec {
    /// Same dataset with file paths made absolute against `base`, so the
    /// spec stays valid when written out elsewhere.
    pub fn anchored(&self, base: &Path) -> DatasetSpec {
        match self.clone() {
            DatasetSpec::Idx { images, labels, limit } => {
                DatasetSpec::Idx { images: anchor(base, &images), labels: anchor(base, &labels), limit }
            }
            DatasetSpec::Matrix { features, labels, limit } => {
                DatasetSpec::Matrix { features: anchor(base, &features), labels: anchor(base, &labels), limit }
            }
            other => other,
        }
    }

    /// Loads the dataset; relative paths are resolved against `base`.
    pub fn load(&self, base: &Path) -> Result<DatasetBundle> {
        match self {
            DatasetSpec::Idx { images, labels, limit } => truncate(load_idx(&base.join(images), &base.join(labels))?, *limit),
            DatasetSpec::Matrix { features, labels, limit } => {
                let x = load_matrix(&base.join(features))?;
                let y = load_labels_text(&base.join(labels))?;
                let name = features.file_stem().map_or("matrix".into(), |s| s.to_string_lossy().into_owned());
                truncate(DatasetBundle::new(x, y, name, format!("evt-mat:{}", features.display()))?, *limit)
            }
            DatasetSpec::Gaussians { n_per_cluster, centers, sigma, seed } => {
                synthetic_gaussians(*n_per_cluster, centers, *sigma, *seed)
            }
            DatasetSpec::NuisanceBlobs { seed } => Ok(nuisance_blobs(*seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureSpec {
    /// Encoder hidden widths; the decoder mirrors them.
    pub hidden: Vec<usize>,
    pub latent: usize,
}

impl Default for ArchitectureSpec {
    fn default() -> Self {
        Self { hidden: vec![500, 500, 2000], latent: 10 }
    }
}

impl ArchitectureSpec {
    pub fn dims(&self, input: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(&self.hidden);
        dims.push(self.latent);
        dims
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSpec {
    /// Number of clusters; defaults to the number of ground-truth classes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clusters: Option<usize>,
    pub restarts: usize,
}

impl Default for EvalSpec {
    fn default() -> Self {
        Self { clusters: None, restarts: 10 }
    }
}

/// Several incompleteness levels evaluated against one pretrained baseline.
/// `classes` takes precedence; otherwise `percent` (default 0.1, 0.3, 1.0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub percent: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<Vec<u32>>>,
    /// Allowed ACC drop (as a fraction) between consecutive levels before the
    /// trend is reported as broken.
    pub trend_slack: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { percent: None, classes: None, trend_slack: 0.02 }
    }
}

impl SweepSpec {
    pub fn levels(&self) -> Vec<Incompleteness> {
        match (&self.classes, &self.percent) {
            (Some(classes), _) => classes.iter().map(|c| Incompleteness::Classes { remove: c.clone() }).collect(),
            (None, Some(p)) => p.iter().map(|&keep| Incompleteness::Percent { keep }).collect(),
            (None, None) => [0.1, 0.3, 1.0].iter().map(|&keep| Incompleteness::Percent { keep }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub checkpoints: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("results"), checkpoints: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub architecture: ArchitectureSpec,
    #[serde(default)]
    pub train: TrainConfig,
    pub evidence: Vec<EvidenceSpec>,
    #[serde(default)]
    pub incompleteness: Incompleteness,
    #[serde(default)]
    pub eval: EvalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().trim().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Fully resolved configuration, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<()> {
        if self.evidence.is_empty() {
            return Err(Error::Config("evidence: at least one source is required".into()));
        }
        if self.architecture.latent == 0 || self.architecture.hidden.contains(&0) {
            return Err(Error::Config("architecture: widths must be positive".into()));
        }
        if self.eval.restarts == 0 || self.eval.clusters == Some(0) {
            return Err(Error::Config("eval: clusters and restarts must be positive".into()));
        }
        self.incompleteness.validate()?;
        if let Some(sweep) = &self.sweep {
            if sweep.levels().is_empty() {
                return Err(Error::Config("sweep: no levels listed".into()));
            }
            for level in sweep.levels() {
                level.validate().map_err(|e| Error::Config(format!("sweep: {e}")))?;
            }
            if sweep.trend_slack.is_nan() || sweep.trend_slack < 0.0 {
                return Err(Error::Config("sweep.trend_slack must be >= 0".into()));
            }
        }
        self.train.validate_ranges()
    }

    /// Checks that depend on the loaded dataset.
    pub fn validate_for(&self, data: &DatasetBundle) -> Result<()> {
        if data.is_empty() {
            return Err(Error::Config("dataset is empty".into()));
        }
        self.train.validate(data.len())?;
        let k = self.eval.clusters.unwrap_or_else(|| data.class_count());
        if k > data.len() {
            return Err(Error::Config(format!("eval.clusters = {k} exceeds {} samples", data.len())));
        }
        for spec in &self.evidence {
            spec.build(&data.labels, 0).map_err(|e| Error::Config(format!("evidence `{spec}`: {e}")))?;
        }
        Ok(())
    }

    /// Hash of the resolved configuration with the seed and output location
    /// cleared, so runs differing only in seed share a fingerprint.
    pub fn fingerprint(&self) -> u64 {
        let mut c = self.clone();
        c.train.seed = 0;
        c.output = OutputSpec::default();
        fnv1a(c.to_toml().as_bytes())
    }
}
