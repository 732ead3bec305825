use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::Registry;
use crate::error::{Error, Result};
use crate::lot::{run_lot, LotOptions};
use crate::model::{Digest, KLinePath, KnowledgeBase, Logged, SlotMap, SlotValue};
use crate::trace::{EventKind, ReasoningTrace, TraceEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modification {
    pub path: KLinePath,
    pub old: Logged,
    pub new: SlotValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotDiff {
    pub path: KLinePath,
    pub baseline: Logged,
    pub variant: Logged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfReport {
    pub baseline_id: String,
    pub variant_id: String,
    pub modifications: Vec<Modification>,
    /// Index of the first event that differs once state digests are set
    /// aside; `None` when the event streams agree.
    pub divergence: Option<usize>,
    /// Leaf slots whose final values differ between the arms.
    pub outcome_diff: Vec<SlotDiff>,
    pub baseline: ReasoningTrace,
    pub variant: ReasoningTrace,
}

impl WhatIfReport {
    /// Structured export: the report header followed by both traces.
    pub fn to_structured(&self) -> String {
        let header = serde_json::json!({
            "what_if": {
                "baseline_id": self.baseline_id,
                "variant_id": self.variant_id,
                "modifications": self.modifications,
                "divergence": self.divergence,
                "outcome_diff": self.outcome_diff,
            }
        });
        let mut out = header.to_string();
        out.push('\n');
        out.push_str(&self.baseline.to_structured());
        out.push_str(&self.variant.to_structured());
        out
    }
}

/// Event with digests blanked: the variant's state differs by construction,
/// so digests alone never count as divergence.
fn comparable(e: &TraceEvent) -> TraceEvent {
    let blank = Digest::of_bytes(&[]);
    let mut e = e.clone();
    match &mut e.kind {
        EventKind::StepActivated { input_digest, .. } => *input_digest = blank,
        EventKind::StepCompleted { output_digest, .. } => *output_digest = blank,
        _ => {}
    }
    e
}

fn divergence(a: &ReasoningTrace, b: &ReasoningTrace) -> Option<usize> {
    let n = a.events.len().min(b.events.len());
    (0..n)
        .find(|&i| comparable(&a.events[i]) != comparable(&b.events[i]))
        .or((a.events.len() != b.events.len()).then_some(n))
}

fn flatten(prefix: &mut Vec<String>, slots: &SlotMap, out: &mut BTreeMap<Vec<String>, SlotValue>) {
    for (k, v) in slots {
        prefix.push(k.clone());
        match v {
            SlotValue::Map(m) if !m.is_empty() => flatten(prefix, m, out),
            other => {
                out.insert(prefix.clone(), other.clone());
            }
        }
        prefix.pop();
    }
}

fn leaves(kb: &KnowledgeBase) -> BTreeMap<Vec<String>, SlotValue> {
    let mut out = BTreeMap::new();
    for ks in kb.knowledge_sources() {
        flatten(&mut vec![ks.appellation.clone()], &ks.slots, &mut out);
    }
    out
}

fn outcome_diff(a: &KnowledgeBase, b: &KnowledgeBase) -> Vec<SlotDiff> {
    let (la, lb) = (leaves(a), leaves(b));
    let mut keys: Vec<&Vec<String>> = la.keys().chain(lb.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter(|k| la.get(*k) != lb.get(*k))
        .map(|k| SlotDiff {
            path: KLinePath::new(k.iter().cloned()).expect("non-empty"),
            baseline: Logged::from_option(la.get(k).cloned()),
            variant: Logged::from_option(lb.get(k).cloned()),
        })
        .collect()
}

/// Runs `lot` twice on copies of `kb`: as is, and with `modifications`
/// applied first. The caller's knowledge base is not touched.
pub fn what_if(
    reg: &Registry,
    kb: &KnowledgeBase,
    lot: &str,
    opts: &LotOptions,
    modifications: &[(KLinePath, SlotValue)],
) -> Result<WhatIfReport> {
    let arm = |arm: &'static str| {
        move |e: Error| Error::WhatIfArm {
            arm,
            source: Box::new(e),
        }
    };
    let base_id = format!(
        "{}/baseline",
        opts.trace_id.clone().unwrap_or_else(|| format!("{lot}@{}", opts.clock))
    );
    let var_id = base_id.replace("/baseline", "/variant");

    let mut base_kb = kb.snapshot();
    let baseline = run_lot(reg, &mut base_kb, lot, &opts.clone().id(base_id.clone())).map_err(arm("baseline"))?;

    let mut var_kb = kb.snapshot();
    let mut mods = Vec::new();
    for (path, value) in modifications {
        let (ks, sp) = var_kb.split_kline(path).map_err(arm("variant"))?;
        let old = Logged::from_option(var_kb.get_slot(&ks, &sp).cloned());
        var_kb
            .attributed(opts.clock, "what-if", |kb| kb.set_slot(&ks, &sp, value.clone()))
            .map_err(arm("variant"))?;
        mods.push(Modification {
            path: path.clone(),
            old,
            new: value.clone(),
        });
    }
    var_kb.take_pulses();
    let variant = run_lot(reg, &mut var_kb, lot, &opts.clone().id(var_id.clone())).map_err(arm("variant"))?;

    Ok(WhatIfReport {
        baseline_id: base_id,
        variant_id: var_id,
        modifications: mods,
        divergence: divergence(&baseline, &variant),
        outcome_diff: outcome_diff(&base_kb, &var_kb),
        baseline,
        variant,
    })
}
