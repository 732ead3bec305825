use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::Registry;
use crate::error::Result;
use crate::lot::{chain_lots, run_lot, LotOptions};
use crate::model::{insert_at, remove_at, KnowledgeBase, Logged, SlotMap, SlotPath, SlotValue};
use crate::trace::ReasoningTrace;

/// A line-of-thought run (or a chained sequence of them) with the state it
/// started from, so it can be re-executed later.
#[derive(Debug, Clone)]
pub struct Recording {
    pub initial: KnowledgeBase,
    /// One entry for a single run, several for a chain.
    pub lots: Vec<String>,
    pub opts: LotOptions,
    pub trace: ReasoningTrace,
}

fn execute(reg: &Registry, kb: &mut KnowledgeBase, lots: &[String], opts: &LotOptions) -> Result<ReasoningTrace> {
    match lots {
        [one] => run_lot(reg, kb, one, opts),
        many => {
            let names: Vec<&str> = many.iter().map(String::as_str).collect();
            chain_lots(reg, kb, &names, opts)
        }
    }
}

pub fn record(reg: &Registry, kb: &mut KnowledgeBase, lot: &str, opts: &LotOptions) -> Result<Recording> {
    record_chain(reg, kb, &[lot], opts)
}

pub fn record_chain(reg: &Registry, kb: &mut KnowledgeBase, lots: &[&str], opts: &LotOptions) -> Result<Recording> {
    let initial = kb.snapshot();
    let lots: Vec<String> = lots.iter().map(|s| s.to_string()).collect();
    let trace = execute(reg, kb, &lots, opts)?;
    Ok(Recording {
        initial,
        lots,
        opts: opts.clone(),
        trace,
    })
}

/// Re-runs a recording from its initial state; true when the new trace
/// matches the recorded one apart from wall-clock fields.
pub fn replay(reg: &Registry, rec: &Recording) -> Result<bool> {
    let mut kb = rec.initial.snapshot();
    let again = execute(reg, &mut kb, &rec.lots, &rec.opts)?;
    Ok(again.normalized().to_structured() == rec.trace.normalized().to_structured())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub ok: bool,
    pub entries_checked: usize,
    pub problems: Vec<String>,
}

struct Shadow {
    slots: SlotMap,
    version: u64,
}

fn apply(slots: &mut SlotMap, path: &SlotPath, new: &Logged) -> std::result::Result<(), String> {
    if path.is_root() {
        match new {
            Logged::Value(SlotValue::Map(m)) => *slots = m.clone(),
            Logged::Unset => slots.clear(),
            Logged::Value(other) => return Err(format!("root replaced by a {}", other.type_name())),
        }
        return Ok(());
    }
    match new {
        Logged::Value(v) => insert_at(slots, path.segments(), v.clone())
            .map(|_| ())
            .map_err(|_| format!("path {path} runs through a scalar")),
        Logged::Unset => remove_at(slots, path.segments())
            .map(|_| ())
            .map_err(|_| format!("path {path} runs through a scalar")),
    }
}

/// Knowledge sources that did not exist in `initial` start from the
/// slots their creating function logged.
fn created_base(initial: &KnowledgeBase, fin: &KnowledgeBase, ks: &str) -> Option<SlotMap> {
    let entry = fin
        .function_log()
        .iter()
        .skip(initial.function_log().len())
        .find(|e| e.output_ks.iter().any(|o| o == ks))?;
    let mut slots = SlotMap::new();
    for (k, v) in &entry.outputs {
        let path = SlotPath::parse(k).ok()?;
        insert_at(&mut slots, path.segments(), v.clone()).ok()?;
    }
    Some(slots)
}

/// Checks that every difference between `initial` and `fin` is accounted
/// for by the version log: replaying the new entries over `initial` must
/// reproduce each knowledge source's slots and version exactly.
pub fn audit(initial: &KnowledgeBase, fin: &KnowledgeBase) -> AuditReport {
    let mut problems = Vec::new();
    let before = initial.version_log();
    let after = fin.version_log();
    if after.len() < before.len() || after[..before.len()] != *before {
        problems.push("version log was rewritten".to_string());
    }

    let mut shadow: BTreeMap<String, Shadow> = initial
        .knowledge_sources()
        .map(|k| {
            (
                k.appellation.clone(),
                Shadow {
                    slots: k.slots.clone(),
                    version: k.version,
                },
            )
        })
        .collect();

    let fresh = &after[before.len().min(after.len())..];
    for e in fresh {
        if !shadow.contains_key(&e.appellation) {
            match created_base(initial, fin, &e.appellation) {
                Some(slots) => {
                    shadow.insert(e.appellation.clone(), Shadow { slots, version: 1 });
                }
                None => {
                    problems.push(format!("{} mutated before any recorded creation", e.appellation));
                    continue;
                }
            }
        }
        let s = shadow.get_mut(&e.appellation).expect("inserted");
        if e.version != s.version + 1 {
            problems.push(format!(
                "{} jumps from version {} to {}",
                e.appellation, s.version, e.version
            ));
        }
        s.version = e.version;
        if let Err(msg) = apply(&mut s.slots, &e.path, &e.new) {
            problems.push(format!("{}: {msg}", e.appellation));
        }
    }

    for k in fin.knowledge_sources() {
        let name = &k.appellation;
        if !shadow.contains_key(name) {
            match created_base(initial, fin, name) {
                Some(slots) => {
                    shadow.insert(name.clone(), Shadow { slots, version: 1 });
                }
                None => {
                    problems.push(format!("{name} appeared without a log entry"));
                    continue;
                }
            }
        }
        let s = &shadow[name];
        if s.version != k.version {
            problems.push(format!(
                "{name}: version {} but log accounts for {}",
                k.version, s.version
            ));
        }
        if s.slots != k.slots {
            problems.push(format!("{name}: slots differ from the logged history"));
        }
    }
    for name in shadow.keys() {
        if fin.ks(name).is_none() {
            problems.push(format!("{name} disappeared"));
        }
    }

    AuditReport {
        ok: problems.is_empty(),
        entries_checked: fresh.len(),
        problems,
    }
}
