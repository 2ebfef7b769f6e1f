//! External categorical evidence: generators, one-hot encoding, and the two
//! incompleteness protocols (uniform sample dropping and class removal).

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Value stored for samples without evidence. Never compared against; all
/// consumers filter on the mask.
pub const MISSING: u32 = u32::MAX;

/// Re-draw attempts for the class-coverage guard in [`drop_percent`].
const COVERAGE_RETRIES: usize = 100;

/// One categorical evidence variable over `N` samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceSource {
    values: Vec<u32>,
    mask: Vec<bool>,
    width: usize,
}

/// `K >= 1` evidence sources over the same samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceSet {
    sources: Vec<EvidenceSource>,
}

/// One-hot rows for the available samples of a source.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHot {
    pub rows: Array2<f32>,
    /// `index[r]` is the sample position of row `r`.
    pub index: Vec<usize>,
}

impl EvidenceSource {
    /// Builds a source from optional per-sample values.
    pub fn new(values: Vec<Option<u32>>, width: usize) -> Result<Self> {
        if width < 1 {
            return Err(Error::Evidence("width must be positive".into()));
        }
        let mut vals = Vec::with_capacity(values.len());
        let mut mask = Vec::with_capacity(values.len());
        for (i, v) in values.into_iter().enumerate() {
            match v {
                Some(v) if (v as usize) < width => {
                    vals.push(v);
                    mask.push(true);
                }
                Some(v) => {
                    return Err(Error::Evidence(format!(
                        "sample {i}: value {v} outside width {width}"
                    )))
                }
                None => {
                    vals.push(MISSING);
                    mask.push(false);
                }
            }
        }
        Ok(Self {
            values: vals,
            mask,
            width,
        })
    }

    /// Fully available source.
    pub fn complete(values: Vec<u32>, width: usize) -> Result<Self> {
        Self::new(values.into_iter().map(Some).collect(), width)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Number of samples with evidence (`M`).
    pub fn available(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn get(&self, i: usize) -> Option<u32> {
        self.mask[i].then(|| self.values[i])
    }

    pub fn values(&self) -> impl Iterator<Item = Option<u32>> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// Indices of samples with evidence, ascending.
    pub fn available_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mask[i]).collect()
    }

    /// Distinct classes among available samples.
    pub fn observed_classes(&self) -> BTreeSet<u32> {
        self.values().flatten().collect()
    }

    fn with_mask(&self, mask: Vec<bool>) -> Self {
        let values = self
            .values
            .iter()
            .zip(&mask)
            .map(|(&v, &m)| if m { v } else { MISSING })
            .collect();
        Self {
            values,
            mask,
            width: self.width,
        }
    }
}

impl EvidenceSet {
    pub fn new(sources: Vec<EvidenceSource>) -> Result<Self> {
        let Some(first) = sources.first() else {
            return Err(Error::Evidence("evidence set needs at least one source".into()));
        };
        let n = first.len();
        if let Some(bad) = sources.iter().position(|s| s.len() != n) {
            return Err(Error::Evidence(format!(
                "source {bad} covers {} samples, expected {n}",
                sources[bad].len()
            )));
        }
        Ok(Self { sources })
    }

    pub fn sources(&self) -> &[EvidenceSource] {
        &self.sources
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// Samples with evidence from at least one source, ascending.
    pub fn labelled_indices(&self) -> Vec<usize> {
        let n = self.sources[0].len();
        (0..n)
            .filter(|&i| self.sources.iter().any(|s| s.mask[i]))
            .collect()
    }
}

fn check_width(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::Evidence(format!("evidence width must be >= 2, got {k}")));
    }
    Ok(())
}

/// The labels themselves as evidence; width is `max(label) + 1`.
pub fn labelset_evidence(labels: &[u32]) -> Result<EvidenceSource> {
    let width = labels.iter().max().map_or(0, |&m| m as usize + 1);
    EvidenceSource::complete(labels.to_vec(), width.max(1))
}

/// `label mod k`.
pub fn mod_evidence(labels: &[u32], k: usize) -> Result<EvidenceSource> {
    check_width(k)?;
    EvidenceSource::complete(labels.iter().map(|&y| y % k as u32).collect(), k)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// `FNV-1a(decimal string of label) mod k`.
pub fn hash_mod_evidence(labels: &[u32], k: usize) -> Result<EvidenceSource> {
    check_width(k)?;
    let values = labels
        .iter()
        .map(|y| (fnv1a(y.to_string().as_bytes()) % k as u64) as u32)
        .collect();
    EvidenceSource::complete(values, k)
}

/// Regroups labels through `grouping` (class → group id). Group ids are
/// re-indexed densely in ascending order, so the width is the number of
/// distinct groups.
pub fn superset_evidence(labels: &[u32], grouping: &BTreeMap<u32, u32>) -> Result<EvidenceSource> {
    let groups: BTreeSet<u32> = grouping.values().copied().collect();
    let dense: BTreeMap<u32, u32> = groups.iter().enumerate().map(|(i, &g)| (g, i as u32)).collect();
    let values = labels
        .iter()
        .enumerate()
        .map(|(i, y)| {
            grouping.get(y).map(|g| dense[g]).ok_or_else(|| {
                Error::Evidence(format!("sample {i}: label {y} missing from grouping"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EvidenceSource::complete(values, groups.len().max(1))
}

/// Grouping from explicit class lists: `groups[g]` holds the classes of group `g`.
pub fn grouping_from_lists(groups: &[Vec<u32>]) -> Result<BTreeMap<u32, u32>> {
    let mut map = BTreeMap::new();
    for (g, classes) in groups.iter().enumerate() {
        for &c in classes {
            if map.insert(c, g as u32).is_some() {
                return Err(Error::Evidence(format!("class {c} appears in two groups")));
            }
        }
    }
    Ok(map)
}

/// CIFAR-10 classes regrouped as vehicles, pets and wild animals.
pub fn cifar10_three_groups() -> BTreeMap<u32, u32> {
    // airplane 0, automobile 1, bird 2, cat 3, deer 4, dog 5, frog 6, horse 7, ship 8, truck 9
    grouping_from_lists(&[vec![0, 1, 8, 9], vec![3, 5], vec![2, 4, 6, 7]]).expect("disjoint groups")
}

/// Categorical values drawn uniformly at random, independent of any data.
pub fn uniform_random_evidence(n: usize, width: usize, seed: u64) -> Result<EvidenceSource> {
    check_width(width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n).map(|_| rng.random_range(0..width as u32)).collect();
    EvidenceSource::complete(values, width)
}

/// One-hot rows (`M × W`) for the available samples, in sample order.
pub fn one_hot(source: &EvidenceSource) -> OneHot {
    let index = source.available_indices();
    let mut rows = Array2::zeros((index.len(), source.width));
    for (r, &i) in index.iter().enumerate() {
        rows[[r, source.values[i] as usize]] = 1.0;
    }
    OneHot { rows, index }
}

/// Keeps `round(keep · M)` of the currently available samples, chosen
/// uniformly with `seed`.
///
/// When the kept count is at least `10 · W`, every class observed before
/// dropping must survive; the draw is repeated (up to 100 times) until it does.
pub fn drop_percent(source: &EvidenceSource, keep: f64, seed: u64) -> Result<EvidenceSource> {
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(Error::Evidence(format!("keep fraction must be in (0, 1], got {keep}")));
    }
    let available = source.available_indices();
    let target = (keep * available.len() as f64).round() as usize;
    if target == available.len() {
        return Ok(source.clone());
    }
    let classes = source.observed_classes();
    let guard = target >= 10 * source.width;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..COVERAGE_RETRIES {
        let mut mask = vec![false; source.len()];
        for pick in index::sample(&mut rng, available.len(), target) {
            mask[available[pick]] = true;
        }
        let dropped = source.with_mask(mask);
        if !guard || dropped.observed_classes() == classes {
            return Ok(dropped);
        }
    }
    Err(Error::Evidence(format!(
        "could not keep all {} classes with {target} samples after {COVERAGE_RETRIES} draws",
        classes.len()
    )))
}

/// Masks out every sample whose value is in `removed`. Width is unchanged.
pub fn drop_classes(source: &EvidenceSource, removed: &BTreeSet<u32>) -> Result<EvidenceSource> {
    if let Some(&bad) = removed.iter().find(|&&c| c as usize >= source.width) {
        return Err(Error::Evidence(format!(
            "class {bad} outside evidence width {}",
            source.width
        )));
    }
    let observed = source.observed_classes();
    if observed.iter().all(|c| removed.contains(c)) {
        return Err(Error::Evidence("removing every observed class leaves no evidence".into()));
    }
    let mask = source
        .values()
        .map(|v| v.is_some_and(|v| !removed.contains(&v)))
        .collect();
    Ok(source.with_mask(mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn digits() -> Vec<u32> {
        (0..10).collect()
    }

    #[test]
    fn mod_values() {
        let e = mod_evidence(&[7], 3).unwrap();
        assert_eq!(e.get(0), Some(1));
        assert!(mod_evidence(&[7], 1).is_err());
        let e = mod_evidence(&digits(), 3).unwrap();
        assert_eq!(e.observed_classes(), BTreeSet::from([0, 1, 2]));
        assert!(e.is_complete());
    }

    #[test]
    fn fnv1a_reference_values() {
        // published FNV-1a 64 test vectors
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn hash_mod_golden_partition() {
        // frozen from FNV-1a over "0".."9"
        let e = hash_mod_evidence(&digits(), 4).unwrap();
        let got: Vec<u32> = e.values().flatten().collect();
        assert_eq!(got, vec![3, 0, 1, 2, 3, 0, 1, 2, 3, 0]);
        assert!(hash_mod_evidence(&digits(), 1).is_err());
    }

    #[test]
    fn hash_mod_coarsens_by_congruence() {
        let labels: Vec<u32> = (0..200).collect();
        let four = hash_mod_evidence(&labels, 4).unwrap();
        let two = hash_mod_evidence(&labels, 2).unwrap();
        for (a, b) in four.values().zip(two.values()) {
            assert_eq!(a.unwrap() % 2, b.unwrap());
        }
        let again = hash_mod_evidence(&labels, 4).unwrap();
        assert_eq!(four, again);
    }

    #[test]
    fn superset_groupings() {
        let labels = digits();
        let identity: BTreeMap<u32, u32> = labels.iter().map(|&c| (c, c)).collect();
        let e = superset_evidence(&labels, &identity).unwrap();
        assert_eq!(e.values().flatten().collect::<Vec<_>>(), labels);

        let pairs = grouping_from_lists(&[vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7], vec![8, 9]]).unwrap();
        let e = superset_evidence(&labels, &pairs).unwrap();
        assert_eq!(e.width(), 5);
        for g in 0..5 {
            assert_eq!(e.values().filter(|&v| v == Some(g)).count(), 2);
        }

        let cifar = superset_evidence(&labels, &cifar10_three_groups()).unwrap();
        assert_eq!(cifar.width(), 3);

        let partial = grouping_from_lists(&[vec![0, 1]]).unwrap();
        assert!(superset_evidence(&labels, &partial).is_err());
        assert!(grouping_from_lists(&[vec![0], vec![0]]).is_err());
    }

    #[test]
    fn one_hot_rows_and_index() {
        let e = EvidenceSource::complete(vec![2], 4).unwrap();
        assert_eq!(one_hot(&e).rows.row(0).to_vec(), vec![0.0, 0.0, 1.0, 0.0]);

        let full = mod_evidence(&digits(), 3).unwrap();
        assert_eq!(one_hot(&full).rows.nrows(), 10);

        let values = (0..10).map(|i| [1, 4, 7].contains(&i).then_some(i % 3)).collect();
        let partial = EvidenceSource::new(values, 3).unwrap();
        let oh = one_hot(&partial);
        assert_eq!(oh.rows.nrows(), 3);
        assert_eq!(oh.index, vec![1, 4, 7]);
    }

    #[test]
    fn drop_percent_counts_and_determinism() {
        let labels: Vec<u32> = (0..10_000).map(|i| i % 10).collect();
        let full = labelset_evidence(&labels).unwrap();
        assert_eq!(drop_percent(&full, 1.0, 3).unwrap(), full);
        let tenth = drop_percent(&full, 0.1, 3).unwrap();
        assert_eq!(tenth.available(), 1000);
        assert_eq!(tenth.observed_classes().len(), 10);
        assert_eq!(drop_percent(&full, 0.1, 3).unwrap(), tenth);
        assert_ne!(drop_percent(&full, 0.1, 4).unwrap(), tenth);
        assert!(drop_percent(&full, 0.0, 3).is_err());
        assert!(drop_percent(&full, 1.5, 3).is_err());
    }

    #[test]
    fn drop_percent_rejects_unreachable_coverage() {
        // one rare class among 50k samples: each draw of 20 (>= 10 W) includes it with p = 4e-4
        let mut labels = vec![0u32; 49_999];
        labels.push(1);
        let e = EvidenceSource::complete(labels, 2).unwrap();
        assert!(drop_percent(&e, 20.0 / 50_000.0, 1).is_err());
    }

    #[test]
    fn drop_classes_behaviour() {
        let labels: Vec<u32> = (0..30).map(|i| i % 3).collect();
        let e = mod_evidence(&labels, 3).unwrap();
        assert_eq!(drop_classes(&e, &BTreeSet::new()).unwrap(), e);

        let two = drop_classes(&e, &BTreeSet::from([2])).unwrap();
        assert_eq!(two.observed_classes(), BTreeSet::from([0, 1]));
        assert_eq!(two.width(), 3);
        assert_eq!(one_hot(&two).rows.ncols(), 3);

        let ten = labelset_evidence(&(0..100).map(|i| i % 10).collect::<Vec<_>>()).unwrap();
        let eight = drop_classes(&ten, &BTreeSet::from([8, 9])).unwrap();
        assert_eq!(eight.observed_classes().len(), 8);
        assert_eq!(eight.available(), 80);

        assert!(drop_classes(&e, &BTreeSet::from([0, 1, 2])).is_err());
        assert!(drop_classes(&e, &BTreeSet::from([5])).is_err());
    }

    #[test]
    fn evidence_set_requires_matching_sources() {
        assert!(EvidenceSet::new(vec![]).is_err());
        let a = mod_evidence(&digits(), 3).unwrap();
        let b = mod_evidence(&digits()[..5], 3).unwrap();
        assert!(EvidenceSet::new(vec![a.clone(), b]).is_err());
        let set = EvidenceSet::new(vec![a.clone(), a]).unwrap();
        assert_eq!(set.labelled_indices().len(), 10);
    }

    proptest! {
        #[test]
        fn percent_composition(p1 in 0.2f64..1.0, p2 in 0.2f64..1.0, s1: u64, s2: u64) {
            let labels: Vec<u32> = (0..2000).map(|i| i % 4).collect();
            let full = labelset_evidence(&labels).unwrap();
            let once = drop_percent(&full, p1, s1).unwrap();
            let twice = drop_percent(&once, p2, s2).unwrap();
            let want = (p1 * p2 * 2000.0).round() as i64;
            prop_assert!((twice.available() as i64 - want).abs() <= 1);
        }

        #[test]
        fn class_drop_preserves_survivors(labels in prop::collection::vec(0u32..5, 10..200), c in 0u32..5) {
            let e = mod_evidence(&labels, 5).unwrap();
            prop_assume!(e.observed_classes().len() > 1);
            let d = drop_classes(&e, &BTreeSet::from([c])).unwrap();
            for (before, after) in e.values().zip(d.values()) {
                match after {
                    Some(v) => prop_assert_eq!(Some(v), before),
                    None => prop_assert_eq!(before, Some(c)),
                }
            }
        }

        #[test]
        fn one_hot_rows_are_exact(labels in prop::collection::vec(0u32..7, 1..100)) {
            let e = mod_evidence(&labels, 7).unwrap();
            let oh = one_hot(&e);
            for row in oh.rows.rows() {
                prop_assert_eq!(row.sum(), 1.0);
                prop_assert_eq!(row.iter().filter(|&&v| v != 0.0).count(), 1);
            }
        }
    }
}
