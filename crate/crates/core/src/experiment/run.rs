use std::path::Path;

use rayon::prelude::*;

use super::{ExperimentConfig, Incompleteness};
use crate::error::{Error, Result};
use crate::eval::{evaluate, render_table, write_csv, EvalReport, ReportRow, Scores};
use crate::evidence::{drop_classes, drop_percent, EvidenceSource};
use crate::io::{save_checkpoint, DatasetBundle};
use crate::nn::Network;
use crate::pipeline::{evidence_transfer, pretrain_primary, train_evidence_ae, TransferState};
use crate::seed::derive_seed;

/// Result of transferring at one incompleteness level.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub level: Incompleteness,
    pub report: EvalReport,
    pub model: Network<f32>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub baseline: Network<f32>,
    pub baseline_scores: Scores,
    pub levels: Vec<LevelOutcome>,
    /// For sweeps: whether ACC never drops by more than the slack as more
    /// evidence becomes available.
    pub trend: Option<bool>,
}

impl ExperimentOutput {
    pub fn reports(&self) -> Vec<EvalReport> {
        self.levels.iter().map(|l| l.report.clone()).collect()
    }

    /// Aligned table plus, for sweeps, the trend verdict.
    pub fn table(&self) -> String {
        let mut out = render_table(&self.reports());
        if let (Some(ok), Some(sweep)) = (self.trend, &self.config.sweep) {
            out.push_str(&format!(
                "\ntrend: {} (slack {:.2} points)\n",
                if ok { "monotone" } else { "NOT monotone" },
                100.0 * sweep.trend_slack
            ));
        }
        out
    }

    /// Writes `report.csv`, `report.txt`, `resolved.toml` and, if enabled,
    /// `baseline.evtk` plus one `transfer-<i>.evtk` per level.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let resolved = self.config.to_toml();
        let mut csv = Vec::new();
        write_csv(&mut csv, &resolved, &self.reports())?;
        std::fs::write(dir.join("report.csv"), csv)?;
        std::fs::write(dir.join("report.txt"), self.table())?;
        std::fs::write(dir.join("resolved.toml"), &resolved)?;
        if self.config.output.checkpoints {
            let fp = self.config.fingerprint();
            save_checkpoint(&self.baseline, fp, &dir.join("baseline.evtk"))?;
            for (i, level) in self.levels.iter().enumerate() {
                save_checkpoint(&level.model, fp, &dir.join(format!("transfer-{i}.evtk")))?;
            }
        }
        Ok(())
    }
}

fn apply_level(sources: &[EvidenceSource], level: &Incompleteness, seed: u64) -> Result<Vec<EvidenceSource>> {
    sources
        .iter()
        .map(|s| match level {
            Incompleteness::None => Ok(s.clone()),
            // one seed for every source, so all sources keep the same samples
            Incompleteness::Percent { keep } => drop_percent(s, *keep, derive_seed(seed, "percent", 0)),
            Incompleteness::Classes { remove } => drop_classes(s, &remove.iter().copied().collect()),
        })
        .collect()
}

/// Pretrains the primary autoencoder, then transfers evidence at every level.
pub fn run_experiment(config: &ExperimentConfig, data: &DatasetBundle) -> Result<ExperimentOutput> {
    config.validate()?;
    config.validate_for(data)?;
    let dims = config.architecture.dims(data.features.ncols());
    log::info!("pretraining {dims:?} on {} samples", data.len());
    let pretrained = pretrain_primary(data.features.view(), &dims, &config.train)?;
    run_from_baseline(config, data, pretrained.model)
}

/// Transfers evidence starting from an already pretrained autoencoder.
pub fn run_from_baseline(config: &ExperimentConfig, data: &DatasetBundle, baseline: Network<f32>) -> Result<ExperimentOutput> {
    config.validate()?;
    config.validate_for(data)?;
    if baseline.input_dim() != data.features.ncols() || baseline.output_dim() != data.features.ncols() {
        return Err(Error::Shape(format!(
            "baseline autoencoder maps {} -> {}, data has {} features",
            baseline.input_dim(),
            baseline.output_dim(),
            data.features.ncols()
        )));
    }
    let seed = config.train.seed;
    let k = config.eval.clusters.unwrap_or_else(|| data.class_count());
    let restarts = config.eval.restarts;
    let kmeans_seed = derive_seed(seed, "kmeans", 0);
    let x = data.features.view();
    let baseline_scores = evaluate(&baseline, x, &data.labels, k, kmeans_seed, restarts)?;
    log::info!("baseline ACC {:.4} NMI {:.4}", baseline_scores.acc, baseline_scores.nmi);

    let sources: Vec<EvidenceSource> = config
        .evidence
        .iter()
        .enumerate()
        .map(|(j, spec)| spec.build(&data.labels, derive_seed(seed, "random-evidence", j as u64)))
        .collect::<Result<_>>()?;
    let names: Vec<String> = config.evidence.iter().map(ToString::to_string).collect();
    let levels = match &config.sweep {
        Some(sweep) => sweep.levels(),
        None => vec![config.incompleteness.clone()],
    };

    let mut outcomes = Vec::with_capacity(levels.len());
    for level in levels {
        let level_sources = apply_level(&sources, &level, seed)?;
        let codes = level_sources
            .par_iter()
            .enumerate()
            .map(|(j, s)| train_evidence_ae(s, &config.train, derive_seed(seed, "evidence-ae", j as u64)))
            .collect::<Result<Vec<_>>>()?;
        let state = TransferState::new(baseline.clone(), codes, seed)?;
        let labelled = state.labelled_indices().len();
        let transferred = evidence_transfer(x, &state, &config.train)?;
        let post = evaluate(&transferred.model, x, &data.labels, k, kmeans_seed, restarts)?;
        let configuration = format!("{}, {}", names.join(" + "), level.label(sources[0].width()));
        log::info!("{configuration}: ACC {:.4} NMI {:.4}", post.acc, post.nmi);
        let report = EvalReport::new(ReportRow {
            configuration,
            dataset: data.name.clone(),
            sources: sources.len(),
            labelled,
            clusters: k,
            restarts,
            baseline: baseline_scores,
            post,
            fingerprint: format!("{:016x}", config.fingerprint()),
            seed,
        });
        outcomes.push(LevelOutcome { level, report, model: transferred.model });
    }

    let trend = config.sweep.as_ref().filter(|_| outcomes.len() > 1).map(|sweep| {
        let mut ordered: Vec<(f64, f64)> = outcomes.iter().map(|o| (o.level.amount(), o.report.post_acc)).collect();
        ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
        ordered.windows(2).all(|w| w[1].1 >= w[0].1 - sweep.trend_slack)
    });

    Ok(ExperimentOutput { config: config.clone(), baseline, baseline_scores, levels: outcomes, trend })
}
