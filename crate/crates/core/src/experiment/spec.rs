use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::{
    cifar10_three_groups, grouping_from_lists, hash_mod_evidence, labelset_evidence, mod_evidence, superset_evidence,
    uniform_random_evidence, EvidenceSource,
};

/// How one evidence source is derived from the ground-truth labels.
///
/// Textual forms: `labelset`, `mod:K`, `hash-mod:K`, `random:W`,
/// `superset:cifar10`, `superset:0,1,8,9/3,5/2,4,6,7`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EvidenceSpec {
    Labelset,
    Mod(usize),
    HashMod(usize),
    /// Uniformly random values, unrelated to the data.
    Random(usize),
    Superset(Vec<Vec<u32>>),
    Cifar10Groups,
}

impl EvidenceSpec {
    /// Builds the source. `seed` only matters for random evidence.
    pub fn build(&self, labels: &[u32], seed: u64) -> Result<EvidenceSource> {
        match self {
            EvidenceSpec::Labelset => labelset_evidence(labels),
            EvidenceSpec::Mod(k) => mod_evidence(labels, *k),
            EvidenceSpec::HashMod(k) => hash_mod_evidence(labels, *k),
            EvidenceSpec::Random(w) => uniform_random_evidence(labels.len(), *w, seed),
            EvidenceSpec::Superset(groups) => superset_evidence(labels, &grouping_from_lists(groups)?),
            EvidenceSpec::Cifar10Groups => superset_evidence(labels, &cifar10_three_groups()),
        }
    }

    /// Grouping table for superset specs.
    pub fn grouping(&self) -> Option<Result<BTreeMap<u32, u32>>> {
        match self {
            EvidenceSpec::Superset(groups) => Some(grouping_from_lists(groups)),
            EvidenceSpec::Cifar10Groups => Some(Ok(cifar10_three_groups())),
            _ => None,
        }
    }
}

fn parse_width(kind: &str, arg: Option<&str>) -> Result<usize> {
    let arg = arg.ok_or_else(|| Error::Config(format!("evidence `{kind}` needs a width, e.g. `{kind}:3`")))?;
    arg.parse().map_err(|_| Error::Config(format!("evidence `{kind}`: `{arg}` is not a width")))
}

impl FromStr for EvidenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let spec = match kind {
            "labelset" if arg.is_none() => EvidenceSpec::Labelset,
            "mod" => EvidenceSpec::Mod(parse_width(kind, arg)?),
            "hash-mod" => EvidenceSpec::HashMod(parse_width(kind, arg)?),
            "random" => EvidenceSpec::Random(parse_width(kind, arg)?),
            "superset" => match arg {
                Some("cifar10") => EvidenceSpec::Cifar10Groups,
                Some(groups) if !groups.is_empty() => EvidenceSpec::Superset(
                    groups
                        .split('/')
                        .map(|g| {
                            g.split(',')
                                .map(|c| {
                                    c.trim()
                                        .parse::<u32>()
                                        .map_err(|_| Error::Config(format!("superset: `{c}` is not a class id")))
                                })
                                .collect::<Result<Vec<u32>>>()
                        })
                        .collect::<Result<_>>()?,
                ),
                _ => return Err(Error::Config("superset needs groups, e.g. `superset:0,1/2,3`".into())),
            },
            _ => return Err(Error::Config(format!("unknown evidence generator `{s}`"))),
        };
        if let EvidenceSpec::Mod(k) | EvidenceSpec::HashMod(k) | EvidenceSpec::Random(k) = spec {
            if k < 2 {
                return Err(Error::Config(format!("evidence `{s}`: width must be at least 2")));
            }
        }
        if let Some(g) = spec.grouping() {
            g.map_err(|e| Error::Config(format!("evidence `{s}`: {e}")))?;
        }
        Ok(spec)
    }
}

impl fmt::Display for EvidenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvidenceSpec::Labelset => write!(f, "labelset"),
            EvidenceSpec::Mod(k) => write!(f, "mod:{k}"),
            EvidenceSpec::HashMod(k) => write!(f, "hash-mod:{k}"),
            EvidenceSpec::Random(w) => write!(f, "random:{w}"),
            EvidenceSpec::Cifar10Groups => write!(f, "superset:cifar10"),
            EvidenceSpec::Superset(groups) => {
                let parts: Vec<String> = groups
                    .iter()
                    .map(|g| g.iter().map(u32::to_string).collect::<Vec<_>>().join(","))
                    .collect();
                write!(f, "superset:{}", parts.join("/"))
            }
        }
    }
}

impl TryFrom<String> for EvidenceSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EvidenceSpec> for String {
    fn from(s: EvidenceSpec) -> String {
        s.to_string()
    }
}

/// Which evidence is withheld before transfer.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Incompleteness {
    #[default]
    None,
    /// Keep this fraction of the samples, uniformly at random.
    Percent { keep: f64 },
    /// Withhold every sample whose evidence value is listed.
    Classes { remove: Vec<u32> },
}

impl Incompleteness {
    pub fn validate(&self) -> Result<()> {
        match self {
            Incompleteness::Percent { keep } if !(*keep > 0.0 && *keep <= 1.0) => {
                Err(Error::Config(format!("incompleteness.keep must be in (0, 1], got {keep}")))
            }
            _ => Ok(()),
        }
    }

    /// Fraction of the evidence retained, used to order sweep levels.
    pub(crate) fn amount(&self) -> f64 {
        match self {
            Incompleteness::None => 1.0,
            Incompleteness::Percent { keep } => *keep,
            Incompleteness::Classes { remove } => -(remove.len() as f64),
        }
    }

    /// Row label suffix: `M=N`, `M=0.3*N`, or `w: 10 -> 8` for a source of `width`.
    pub fn label(&self, width: usize) -> String {
        match self {
            Incompleteness::None => "M=N".into(),
            Incompleteness::Percent { keep } if *keep == 1.0 => "M=N".into(),
            Incompleteness::Percent { keep } => format!("M={keep}*N"),
            Incompleteness::Classes { remove } if remove.is_empty() => format!("w: {width}"),
            Incompleteness::Classes { remove } => format!("w: {width} -> {}", width.saturating_sub(remove.len())),
        }
    }
}
