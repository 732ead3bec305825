use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::KLinePath;
use crate::trace::{EventKind, ReasoningTrace};

/// Reinforcement weight per kline. Weights start at zero and only grow.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KLineWeights(BTreeMap<KLinePath, u64>);

impl KLineWeights {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, path: &KLinePath) -> u64 {
        self.0.get(path).copied().unwrap_or(0)
    }

    pub fn set(&mut self, path: KLinePath, weight: u64) {
        self.0.insert(path, weight);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&KLinePath, u64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }
}

/// Adds one to every kline read by a rule that fired in `trace`. Errored
/// traces leave the weights untouched.
pub fn reinforce_kline(weights: &KLineWeights, trace: &ReasoningTrace) -> KLineWeights {
    let mut out = weights.clone();
    if trace.error.is_some() {
        return out;
    }
    let read: BTreeSet<&KLinePath> = trace
        .events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::RuleFired { reads, .. } => Some(reads),
            _ => None,
        })
        .flatten()
        .collect();
    for p in read {
        *out.0.entry(p.clone()).or_insert(0) += 1;
    }
    out
}

/// Highest weight wins; ties go to the lexicographically smallest path.
pub fn select_kline<'a>(weights: &KLineWeights, candidates: &'a [KLinePath]) -> Result<&'a KLinePath> {
    candidates
        .iter()
        .min_by(|a, b| {
            weights
                .get(b)
                .cmp(&weights.get(a))
                .then_with(|| a.to_string().cmp(&b.to_string()))
        })
        .ok_or(Error::EmptyCandidates)
}
