//! Generic pattern-processing blueprints: match a graph pattern, then
//! generate new structure from each match.

use serde::{Deserialize, Serialize};

use super::matcher::{bindings_of, match_patterns, var_key, MatchCtx};
use super::rule::{Pattern, Rule};
use super::wm::WorkingMemory;
use crate::error::{Error, Result};
use crate::expr::{Condition, Env, EvalCtx, FunctionTable};
use crate::model::{FunctionLogEntry, KnowledgeBase, KnowledgeSource, SlotPath, SlotValue, Tick};

/// Variable bindings of one match, keyed `?name`.
pub type BindingSet = Env;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub cloud: String,
    pub slots: Vec<(SlotPath, Condition)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GppbTemplate {
    pub name: String,
    pub patterns: Vec<Pattern>,
    /// Constants fixed before matching.
    pub instantiation: Vec<(String, SlotValue)>,
    /// `None` or an empty slot list generates nothing.
    pub output: Option<OutputSpec>,
}

impl GppbTemplate {
    pub fn new(name: impl Into<String>) -> Self {
        GppbTemplate {
            name: name.into(),
            patterns: Vec::new(),
            instantiation: Vec::new(),
            output: None,
        }
    }

    /// Output expressions may only use pattern variables and constants.
    pub fn validate(&self) -> Result<()> {
        let mut rule = Rule::new(&self.name, "template");
        rule.patterns = self.patterns.clone();
        let consts: Vec<&str> = self.instantiation.iter().map(|(k, _)| k.as_str()).collect();
        rule.validate(&consts)?;
        let mut bound: Vec<String> = consts.iter().map(|s| s.to_string()).collect();
        for p in &self.patterns {
            bound.extend(p.binds());
        }
        for (_, e) in self.output.iter().flat_map(|o| &o.slots) {
            if let Some(v) = e.expr().variables().into_iter().find(|v| !bound.contains(v)) {
                return Err(Error::UnboundVariable(format!("{v} in template `{}`", self.name)));
            }
        }
        Ok(())
    }

    fn seed(&self) -> Env {
        self.instantiation
            .iter()
            .map(|(k, v)| (var_key(k), v.clone()))
            .collect()
    }
}

/// All matches, ordered by their bound appellations. Read-only.
pub fn match_template(kb: &KnowledgeBase, functions: &FunctionTable, tpl: &GppbTemplate) -> Result<Vec<BindingSet>> {
    let wm = WorkingMemory::new();
    let ctx = MatchCtx {
        kb,
        wm: &wm,
        functions,
        clock: kb.tick(),
    };
    match_patterns(&ctx, &tpl.patterns, tpl.seed())
}

/// Generates the output knowledge source for one match as
/// `<template>.<counter>` inside the output cloud (created on demand), and
/// logs the run. Returns the generated appellation, if any.
pub fn apply_template(
    kb: &mut KnowledgeBase,
    functions: &FunctionTable,
    tpl: &GppbTemplate,
    bindings: &BindingSet,
    tick: Tick,
) -> Result<Option<String>> {
    let mut outputs = Vec::new();
    let mut created = None;
    if let Some(spec) = tpl.output.as_ref().filter(|o| !o.slots.is_empty()) {
        let mut ks = KnowledgeSource::new("");
        {
            let ctx = EvalCtx::new(kb, bindings, tick).functions(functions);
            for (path, e) in &spec.slots {
                let v = ctx.eval(e.expr())?;
                outputs.push((path.to_string(), v.clone()));
                if let Err(depth) = crate::model::insert_at(&mut ks.slots, path.segments(), v) {
                    return Err(Error::PathThroughScalar {
                        ks: tpl.name.clone(),
                        path: path.segments()[..=depth].join("/"),
                    });
                }
            }
        }
        let n = kb.next_template_counter(&tpl.name);
        let name = format!("{}.{n}", tpl.name);
        if kb.ks(&name).is_some() || kb.cloud(&name).is_some() {
            return Err(Error::AppellationConflict {
                appellation: name.clone(),
                existing: kb.ks(&name).map(|k| k.owner_cloud.clone()).unwrap_or_default(),
                requested: spec.cloud.clone(),
            });
        }
        ks.appellation = name.clone();
        ks.explains = Some(format!("generated by template {}", tpl.name));
        if kb.cloud(&spec.cloud).is_none() {
            kb.add_cloud(&spec.cloud)?;
        }
        kb.attributed(tick, format!("template {}", tpl.name), |kb| kb.put_ks(ks, &spec.cloud))?;
        created = Some(name);
    }
    kb.log_function(FunctionLogEntry {
        seq: 0,
        function: tpl.name.clone(),
        kind: "template".into(),
        subject: created.clone().unwrap_or_default(),
        inputs: bindings_of(bindings),
        outputs,
        output_ks: created.iter().cloned().collect(),
        tick,
    });
    Ok(created)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        kb.add_cloud("Plant").unwrap();
        for (n, p) in [("P1", 1.5), ("P2", 2.5), ("P3", 1.9)] {
            kb.put_ks(
                KnowledgeSource::new(n)
                    .with_slot("type", "Pump")
                    .with_slot("pressure", p),
                "Plant",
            )
            .unwrap();
        }
        kb
    }

    fn low_pressure() -> GppbTemplate {
        let mut t = GppbTemplate::new("PumpDiag");
        t.patterns.push(Pattern::Ks {
            var: "p".into(),
            cloud: Some("Plant".into()),
            cond: Condition::parse("?p.type == 'Pump' and ?p.pressure < ?threshold").unwrap(),
        });
        t.instantiation.push(("threshold".into(), SlotValue::num(2.0)));
        t.output = Some(OutputSpec {
            cloud: "Cloud-Diagnostics".into(),
            slots: vec![
                (
                    SlotPath::parse("candidate").unwrap(),
                    Condition::parse("'PumpCavitation'").unwrap(),
                ),
                (SlotPath::parse("pump").unwrap(), Condition::parse("?p").unwrap()),
            ],
        });
        t
    }

    #[test]
    fn matches_low_pressure_pumps_read_only() {
        let kb = plant();
        let d = kb.digest();
        let t = low_pressure();
        t.validate().unwrap();
        let m = match_template(&kb, &FunctionTable::new(), &t).unwrap();
        let pumps: Vec<String> = m.iter().map(|b| b["?p"].to_string()).collect();
        assert_eq!(pumps, ["P1", "P3"]);
        assert_eq!(kb.digest(), d);
    }

    #[test]
    fn apply_names_with_counter() {
        let mut kb = plant();
        let t = low_pressure();
        let f = FunctionTable::new();
        let m = match_template(&kb, &f, &t).unwrap();
        assert_eq!(
            apply_template(&mut kb, &f, &t, &m[0], 1).unwrap().unwrap(),
            "PumpDiag.1"
        );
        assert_eq!(
            apply_template(&mut kb, &f, &t, &m[1], 2).unwrap().unwrap(),
            "PumpDiag.2"
        );
        let out = kb.ks("PumpDiag.1").unwrap();
        assert_eq!(out.owner_cloud, "Cloud-Diagnostics");
        assert_eq!(out.slots["candidate"], SlotValue::text("PumpCavitation"));
        assert_eq!(kb.ks("P1").unwrap().version, 1);
    }

    #[test]
    fn empty_output_only_logs() {
        let mut kb = plant();
        let mut t = low_pressure();
        t.output = None;
        let d = kb.digest();
        let f = FunctionTable::new();
        let m = match_template(&kb, &f, &t).unwrap();
        assert_eq!(apply_template(&mut kb, &f, &t, &m[0], 1).unwrap(), None);
        assert_eq!(kb.digest(), d);
        assert_eq!(kb.function_log().len(), 1);
    }

    #[test]
    fn unbound_output_variable_rejected() {
        let mut t = low_pressure();
        t.output
            .as_mut()
            .unwrap()
            .slots
            .push((SlotPath::parse("x").unwrap(), Condition::parse("?ghost").unwrap()));
        assert!(matches!(t.validate(), Err(Error::UnboundVariable(_))));
    }
}
