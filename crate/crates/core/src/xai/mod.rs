//! Explanations: explains rendering, narratives, what-if comparison,
//! version history and audit replay.

mod audit;
mod whatif;

use std::fmt::Write;

use crate::drel;
use crate::error::Result;
use crate::model::{render_plain, KnowledgeBase, SlotPath, Tick, VersionEntry};
use crate::trace::{EventKind, ReasoningTrace};

pub use audit::{audit, record, record_chain, replay, AuditReport, Recording};
pub use whatif::{what_if, Modification, SlotDiff, WhatIfReport};

/// Renders the explains template of `ks`. `{a.b}` placeholders read the
/// slot `a/b` (inherited values included); placeholders that do not
/// resolve render as `{?a.b}`. Without a template the text is
/// `activated <ks>`.
pub fn render_explains(kb: &KnowledgeBase, ks: &str, clock: Tick) -> String {
    let template = kb.ks(ks).and_then(|k| k.explains.as_deref()).unwrap_or("");
    if template.trim().is_empty() {
        return format!("activated {ks}");
    }
    let mut out = String::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let Some(close) = after.find('}') else {
            out.push_str(&rest[open..]);
            return out;
        };
        let key = after[..close].trim();
        let value = SlotPath::new(key.split('.'))
            .ok()
            .and_then(|p| drel::resolve_attribute(kb, ks, &p, clock).ok())
            .map(|(v, _)| render_plain(&v));
        match value {
            Some(v) => out.push_str(&v),
            None => {
                let _ = write!(out, "{{?{key}}}");
            }
        }
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    out
}

fn quoted(labels: &[String]) -> String {
    if labels.is_empty() {
        return "none".to_string();
    }
    labels.iter().map(|l| format!("'{l}'")).collect::<Vec<_>>().join(", ")
}

/// One line per activation, rule firing and fork decision, plus a final
/// line when the trace ended in an error.
pub fn narrative(trace: &ReasoningTrace) -> String {
    let mut out = String::new();
    for e in &trace.events {
        let body = match &e.kind {
            EventKind::StepActivated { explains, .. } => explains.clone(),
            EventKind::RuleFired { rule, bindings, .. } => {
                let b: Vec<String> = bindings
                    .iter()
                    .map(|(k, v)| format!("?{k}={}", render_plain(v)))
                    .collect();
                if b.is_empty() {
                    format!("rule {rule} fired")
                } else {
                    format!("rule {rule} fired with {}", b.join(", "))
                }
            }
            EventKind::ForkTaken { taken, untaken, .. } => {
                format!("fork: took '{taken}'; not taken: {}", quoted(untaken))
            }
            EventKind::Errored {
                error_kind, message, ..
            } => format!("error {error_kind}: {message}"),
            _ => continue,
        };
        let _ = writeln!(out, "t={} {}: {body}", e.tick, e.subject);
    }
    out
}

/// Version-log entries of `ks`, oldest first, optionally limited to
/// entries touching `path` (its ancestors and descendants included).
pub fn history<'a>(kb: &'a KnowledgeBase, ks: &str, path: Option<&SlotPath>) -> Result<Vec<&'a VersionEntry>> {
    kb.require_ks(ks)?;
    Ok(kb
        .version_log()
        .iter()
        .filter(|e| e.appellation == ks)
        .filter(|e| path.is_none_or(|p| e.path.starts_with(p) || p.starts_with(&e.path)))
        .collect())
}
