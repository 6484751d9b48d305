//! Decisions, labeled datasets and evaluation records.

use std::fs;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the unit box `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Decision(Vec<f64>);

impl Decision {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidDecision { index, value });
        }
        Ok(Decision(values))
    }

    /// Clamps every coordinate into `[0, 1]`; non-finite entries map to 0.5.
    pub fn clamped(mut values: Vec<f64>) -> Self {
        for v in &mut values {
            *v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.5 };
        }
        Decision(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn distance(&self, other: &Decision) -> f64 {
        squared_distance(&self.0, &other.0).sqrt()
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            })
        }
    }
}

impl Deref for Decision {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Decision {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Decision::new(values)
    }
}

impl From<Decision> for Vec<f64> {
    fn from(d: Decision) -> Self {
        d.0
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawItem", into = "RawItem")]
pub struct LabeledDecision {
    pub decision: Decision,
    pub feasible: bool,
}

impl LabeledDecision {
    pub fn new(decision: Decision, feasible: bool) -> Self {
        LabeledDecision { decision, feasible }
    }

    pub fn label(&self) -> u8 {
        u8::from(self.feasible)
    }
}

#[derive(Serialize, Deserialize)]
struct RawItem {
    x: Decision,
    c: u8,
}

impl TryFrom<RawItem> for LabeledDecision {
    type Error = Error;
    fn try_from(raw: RawItem) -> Result<Self> {
        match raw.c {
            0 | 1 => Ok(LabeledDecision::new(raw.x, raw.c == 1)),
            other => Err(Error::InvalidConfig(format!(
                "feasibility label must be 0 or 1, got {other}"
            ))),
        }
    }
}

impl From<LabeledDecision> for RawItem {
    fn from(item: LabeledDecision) -> Self {
        RawItem {
            c: item.label(),
            x: item.decision,
        }
    }
}

/// An ordered corpus of labeled decisions sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct Dataset {
    d: usize,
    items: Vec<LabeledDecision>,
}

#[derive(Deserialize)]
struct RawDataset {
    d: usize,
    items: Vec<LabeledDecision>,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = Error;
    fn try_from(raw: RawDataset) -> Result<Self> {
        Dataset::new(raw.d, raw.items)
    }
}

impl Dataset {
    pub fn new(d: usize, items: Vec<LabeledDecision>) -> Result<Self> {
        for item in &items {
            item.decision.check_dim(d)?;
        }
        Ok(Dataset { d, items })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn items(&self) -> &[LabeledDecision] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn feasible_count(&self) -> usize {
        self.items.iter().filter(|i| i.feasible).count()
    }

    /// The decisions labeled feasible, in dataset order.
    pub fn feasible_subset(&self) -> Result<Vec<Decision>> {
        let feasible: Vec<Decision> = self
            .items
            .iter()
            .filter(|i| i.feasible)
            .map(|i| i.decision.clone())
            .collect();
        if feasible.is_empty() {
            return Err(Error::EmptyFeasibleSet);
        }
        Ok(feasible)
    }

    pub fn infeasible_subset(&self) -> Vec<Decision> {
        self.items
            .iter()
            .filter(|i| !i.feasible)
            .map(|i| i.decision.clone())
            .collect()
    }

    /// First `n` items, used for training-size ablations.
    pub fn truncated(&self, n: usize) -> Dataset {
        Dataset {
            d: self.d,
            items: self.items.iter().take(n).cloned().collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            d: usize,
            items: &'a [LabeledDecision],
        }
        Ok(serde_json::to_string(&Out {
            d: self.d,
            items: &self.items,
        })?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One objective evaluation made by an optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    /// 0 for the initial design, then 1..=T.
    pub iteration: usize,
    /// Search-space point that produced the decision, when the method has one.
    pub latent: Option<Vec<f64>>,
    pub decision: Decision,
    /// Whether the decision was replaced by its nearest feasible neighbor.
    pub projected: bool,
    pub value: f64,
    pub best: f64,
}

/// Minimum observed value over `records`.
pub fn best_so_far(records: &[EvaluationRecord]) -> Result<f64> {
    records
        .iter()
        .map(|r| r.value)
        .reduce(f64::min)
        .ok_or(Error::EmptyTrace)
}
