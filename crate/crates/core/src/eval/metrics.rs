use std::collections::BTreeMap;

use super::hungarian::min_cost_assignment;
use crate::error::{Error, Result};

/// Counts table between two labelings. Rows follow the sorted distinct
/// values of `a`, columns those of `b`.
pub fn contingency<A: Copy + Ord, B: Copy + Ord>(a: &[A], b: &[B]) -> Result<Vec<Vec<u64>>> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "labelings differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let rows = dense_ids(a);
    let cols = dense_ids(b);
    let mut table = vec![vec![0u64; cols.len()]; rows.len()];
    for (x, y) in a.iter().zip(b) {
        table[rows[x]][cols[y]] += 1;
    }
    Ok(table)
}

fn dense_ids<T: Copy + Ord>(values: &[T]) -> BTreeMap<T, usize> {
    let mut ids: BTreeMap<T, usize> = values.iter().map(|&v| (v, 0)).collect();
    for (i, id) in ids.values_mut().enumerate() {
        *id = i;
    }
    ids
}

/// Unsupervised clustering accuracy: the best one-to-one matching of
/// clusters to classes, as a fraction of samples. The contingency table is
/// padded square and solved as an assignment problem.
pub fn clustering_accuracy<A: Copy + Ord, B: Copy + Ord>(pred: &[A], truth: &[B]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    if pred.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty labeling".into()));
    }
    let size = table.len().max(table[0].len());
    let max = table.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| max - table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0) as i64)
                .collect()
        })
        .collect();
    let (assignment, _) = min_cost_assignment(&cost);
    let matched: u64 = assignment
        .iter()
        .enumerate()
        .filter_map(|(i, &j)| table.get(i).and_then(|r| r.get(j)))
        .sum();
    Ok(matched as f64 / pred.len() as f64)
}

fn entropy_of_counts<'a>(counts: impl Iterator<Item = &'a u64>, n: f64) -> f64 {
    counts
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalised mutual information `I(pred; truth) / sqrt(H(pred) H(truth))`,
/// natural logarithms.
///
/// Degenerate cases: two single-cluster labelings score 1; when exactly one
/// side has zero entropy the score is 0.
pub fn nmi<A: Copy + Ord, B: Copy + Ord>(pred: &[A], truth: &[B]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    if pred.is_empty() {
        return Err(Error::InvalidArgument("NMI of an empty labeling".into()));
    }
    let n = pred.len() as f64;
    let row_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    let h_pred = entropy_of_counts(row_sums.iter(), n);
    let h_truth = entropy_of_counts(col_sums.iter(), n);
    if h_pred == 0.0 && h_truth == 0.0 {
        return Ok(1.0);
    }
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (n * c / (row_sums[i] as f64 * col_sums[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0))
}
