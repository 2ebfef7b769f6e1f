use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub acc: f64,
    pub nmi: f64,
}

/// One table row: baseline and post-transfer scores for a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub configuration: String,
    pub dataset: String,
    /// Number of evidence sources.
    pub sources: usize,
    /// Labelled samples used during transfer.
    pub labelled: usize,
    pub clusters: usize,
    pub restarts: usize,
    pub baseline_acc: f64,
    pub baseline_nmi: f64,
    pub post_acc: f64,
    pub post_nmi: f64,
    pub delta_acc: f64,
    pub delta_nmi: f64,
    pub fingerprint: String,
    pub seed: u64,
}

/// Fields a report row is built from; deltas are always derived.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub configuration: String,
    pub dataset: String,
    pub sources: usize,
    pub labelled: usize,
    pub clusters: usize,
    pub restarts: usize,
    pub baseline: Scores,
    pub post: Scores,
    pub fingerprint: String,
    pub seed: u64,
}

impl EvalReport {
    pub fn new(row: ReportRow) -> Self {
        Self {
            configuration: row.configuration,
            dataset: row.dataset,
            sources: row.sources,
            labelled: row.labelled,
            clusters: row.clusters,
            restarts: row.restarts,
            baseline_acc: row.baseline.acc,
            baseline_nmi: row.baseline.nmi,
            post_acc: row.post.acc,
            post_nmi: row.post.nmi,
            delta_acc: row.post.acc - row.baseline.acc,
            delta_nmi: row.post.nmi - row.baseline.nmi,
            fingerprint: row.fingerprint,
            seed: row.seed,
        }
    }

    pub fn baseline(&self) -> Scores {
        Scores { acc: self.baseline_acc, nmi: self.baseline_nmi }
    }

    pub fn post(&self) -> Scores {
        Scores { acc: self.post_acc, nmi: self.post_nmi }
    }

    fn deltas_consistent(&self) -> bool {
        self.delta_acc == self.post_acc - self.baseline_acc && self.delta_nmi == self.post_nmi - self.baseline_nmi
    }
}

/// Writes rows as CSV, preceded by `header` (typically the resolved
/// configuration) as `#` comment lines.
pub fn write_csv<W: Write>(mut out: W, header: &str, rows: &[EvalReport]) -> Result<()> {
    for line in header.lines() {
        writeln!(out, "# {line}")?;
    }
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_csv`], returning the comment header and rows.
pub fn read_csv<R: Read>(input: R) -> Result<(String, Vec<EvalReport>)> {
    let mut header = String::new();
    let mut body = String::new();
    for line in BufReader::new(input).lines() {
        let line = line?;
        match line.strip_prefix('#') {
            Some(rest) => {
                header.push_str(rest.strip_prefix(' ').unwrap_or(rest));
                header.push('\n');
            }
            None => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        let row: EvalReport = record.map_err(csv_error)?;
        if !row.deltas_consistent() {
            return Err(Error::Format(crate::error::FormatError::Corrupt(format!(
                "row {:?}: deltas do not equal post - baseline",
                row.configuration
            ))));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format(crate::error::FormatError::Corrupt("report has no rows".into())));
    }
    Ok((header, rows))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(crate::error::FormatError::Corrupt(e.to_string()))
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn signed_pct(x: f64) -> String {
    format!("({:+.2})", 100.0 * x)
}

/// Renders rows as an aligned table: a baseline row, then one row per
/// configuration with ACC(%) and NMI(%) and their deltas in parentheses.
pub fn render_table(rows: &[EvalReport]) -> String {
    let mut cells: Vec<[String; 3]> = vec![["configuration".into(), "ACC(%)".into(), "NMI(%)".into()]];
    if let Some(first) = rows.first() {
        cells.push([format!("baseline ({})", first.dataset), pct(first.baseline_acc), pct(first.baseline_nmi)]);
    }
    for r in rows {
        cells.push([
            r.configuration.clone(),
            format!("{} {}", pct(r.post_acc), signed_pct(r.delta_acc)),
            format!("{} {}", pct(r.post_nmi), signed_pct(r.delta_nmi)),
        ]);
    }
    align(&cells)
}

pub(crate) fn align<const C: usize>(cells: &[[String; C]]) -> String {
    let mut widths = [0usize; C];
    for row in cells {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (C - 1);
            let _ = writeln!(out, "{}", "-".repeat(total));
        }
    }
    out
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Merges rows from many reports. Rows sharing configuration and fingerprint
/// (the same experiment under different seeds) are collapsed into one line
/// showing mean ± sample standard deviation; lines are sorted by configuration.
pub fn aggregate_table(rows: &[EvalReport]) -> String {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(String, String), Vec<&EvalReport>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.configuration.clone(), r.fingerprint.clone())).or_default().push(r);
    }
    let fmt = |v: &[f64]| {
        let (m, s) = mean_std(v);
        format!("{:.2} ± {:.2}", 100.0 * m, 100.0 * s)
    };
    let mut cells: Vec<[String; 5]> = vec![[
        "configuration".into(),
        "seeds".into(),
        "ACC(%)".into(),
        "NMI(%)".into(),
        "ΔACC".into(),
    ]];
    let mut by_dataset: BTreeMap<&str, Vec<&EvalReport>> = BTreeMap::new();
    for r in rows {
        by_dataset.entry(&r.dataset).or_default().push(r);
    }
    for (dataset, rs) in &by_dataset {
        // one baseline sample per distinct (fingerprint, seed)
        let mut seen = std::collections::BTreeSet::new();
        let base: Vec<&EvalReport> = rs.iter().copied().filter(|r| seen.insert((&r.fingerprint, r.seed))).collect();
        let acc: Vec<f64> = base.iter().map(|r| r.baseline_acc).collect();
        let nmi: Vec<f64> = base.iter().map(|r| r.baseline_nmi).collect();
        cells.push([format!("baseline ({dataset})"), base.len().to_string(), fmt(&acc), fmt(&nmi), String::new()]);
    }
    for ((config, _), rs) in &groups {
        let acc: Vec<f64> = rs.iter().map(|r| r.post_acc).collect();
        let nmi: Vec<f64> = rs.iter().map(|r| r.post_nmi).collect();
        let delta: Vec<f64> = rs.iter().map(|r| r.delta_acc).collect();
        cells.push([
            config.clone(),
            rs.len().to_string(),
            fmt(&acc),
            fmt(&nmi),
            format!("({:+.2})", 100.0 * mean_std(&delta).0),
        ]);
    }
    align(&cells)
}
