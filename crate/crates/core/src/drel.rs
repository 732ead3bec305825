//! Dynamic relations: condition-gated attribute sharing between knowledge
//! sources, evaluated at resolution time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Condition, Env, EvalCtx, ReadMode};
use crate::model::{KnowledgeBase, SlotPath, SlotValue, Tick};

/// `target_ks` inherits `shared_attributes` from `source_ks` while
/// `condition` holds. Inside the condition `source` and `target` are bound
/// to the two knowledge sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DRel {
    pub appellation: String,
    pub source_ks: String,
    pub target_ks: String,
    /// Leaf paths or subtree roots.
    pub shared_attributes: Vec<SlotPath>,
    pub condition: Condition,
    pub priority: i64,
}

impl DRel {
    pub fn shares(&self, path: &SlotPath) -> bool {
        self.shared_attributes.iter().any(|a| path.starts_with(a))
    }

    fn bindings(&self) -> Env {
        let mut env = Env::new();
        env.insert("source".into(), SlotValue::Ref(self.source_ks.clone()));
        env.insert("target".into(), SlotValue::Ref(self.target_ks.clone()));
        env
    }

    /// Evaluates the gating condition against local values only.
    pub fn is_satisfied(&self, kb: &KnowledgeBase, clock: Tick) -> Result<bool> {
        let env = self.bindings();
        EvalCtx::new(kb, &env, clock)
            .mode(ReadMode::Local)
            .eval_bool(self.condition.expr())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Local,
    /// Provided by `from` through relation `drel`; `via` lists further
    /// hops when multi-hop resolution is enabled.
    Inherited {
        drel: String,
        from: String,
        via: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResolveOptions {
    /// Follow relations transitively (with cycle detection).
    pub multi_hop: bool,
}

/// Evaluates `cond` with roles bound to knowledge-source appellations.
/// Values are read locally; the logical clock feeds `elapsed_since`.
pub fn eval_condition(
    kb: &KnowledgeBase,
    cond: &Condition,
    bindings: &BTreeMap<String, String>,
    clock: Tick,
) -> Result<bool> {
    let env: Env = bindings
        .iter()
        .map(|(role, ks)| (role.clone(), SlotValue::Ref(ks.clone())))
        .collect();
    EvalCtx::new(kb, &env, clock)
        .mode(ReadMode::Local)
        .eval_bool(cond.expr())
}

/// Local value if present, otherwise the value offered by the winning
/// satisfied relation (priority desc, appellation asc).
pub fn resolve_attribute(
    kb: &KnowledgeBase,
    ks: &str,
    path: &SlotPath,
    clock: Tick,
) -> Result<(SlotValue, Provenance)> {
    resolve_attribute_with(kb, ks, path, clock, ResolveOptions::default())
}

pub fn resolve_attribute_with(
    kb: &KnowledgeBase,
    ks: &str,
    path: &SlotPath,
    clock: Tick,
    opts: ResolveOptions,
) -> Result<(SlotValue, Provenance)> {
    kb.require_ks(ks)?;
    let mut visited = vec![ks.to_string()];
    resolve_inner(kb, ks, path, clock, opts, &mut visited)
}

fn resolve_inner(
    kb: &KnowledgeBase,
    ks: &str,
    path: &SlotPath,
    clock: Tick,
    opts: ResolveOptions,
    visited: &mut Vec<String>,
) -> Result<(SlotValue, Provenance)> {
    if let Some(v) = kb.get_slot(ks, path) {
        return Ok((v.clone(), Provenance::Local));
    }
    let mut candidates: Vec<&DRel> = kb.drels().filter(|d| d.target_ks == ks && d.shares(path)).collect();
    sort_drels(&mut candidates);
    for d in candidates {
        if !d.is_satisfied(kb, clock)? {
            continue;
        }
        if let Some(v) = kb.get_slot(&d.source_ks, path) {
            return Ok((
                v.clone(),
                Provenance::Inherited {
                    drel: d.appellation.clone(),
                    from: d.source_ks.clone(),
                    via: Vec::new(),
                },
            ));
        }
        if opts.multi_hop {
            if visited.contains(&d.source_ks) {
                let mut cycle = visited.clone();
                cycle.push(d.source_ks.clone());
                return Err(Error::InheritanceCycle(cycle));
            }
            visited.push(d.source_ks.clone());
            match resolve_inner(kb, &d.source_ks, path, clock, opts, visited) {
                Ok((v, Provenance::Inherited { drel, from, mut via })) => {
                    via.insert(0, drel);
                    return Ok((
                        v,
                        Provenance::Inherited {
                            drel: d.appellation.clone(),
                            from,
                            via,
                        },
                    ));
                }
                Ok((v, Provenance::Local)) => unreachable!("local handled above: {v}"),
                Err(Error::Unresolvable { .. }) => {
                    visited.pop();
                }
                Err(e) => return Err(e),
            }
        }
    }
    Err(Error::Unresolvable {
        ks: ks.to_string(),
        path: path.to_string(),
    })
}

fn sort_drels(v: &mut [&DRel]) {
    v.sort_by(|a, b| {
        b.priority
            .cmp(&a.priority)
            .then_with(|| a.appellation.cmp(&b.appellation))
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveDrel<'a> {
    pub drel: &'a DRel,
    pub satisfied: bool,
    /// Set when the condition could not be evaluated.
    pub error: Option<Error>,
}

/// Every relation touching `ks`, with its current truth value.
pub fn active_drels<'a>(kb: &'a KnowledgeBase, ks: &str, clock: Tick) -> Vec<ActiveDrel<'a>> {
    let mut touching: Vec<&DRel> = kb.drels().filter(|d| d.source_ks == ks || d.target_ks == ks).collect();
    sort_drels(&mut touching);
    touching
        .into_iter()
        .map(|d| match d.is_satisfied(kb, clock) {
            Ok(satisfied) => ActiveDrel {
                drel: d,
                satisfied,
                error: None,
            },
            Err(e) => ActiveDrel {
                drel: d,
                satisfied: false,
                error: Some(e),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::KnowledgeSource;

    fn speed() -> SlotPath {
        SlotPath::parse("speed").unwrap()
    }

    fn helo_fixture() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        kb.add_cloud("Cloud-FC").unwrap();
        kb.put_ks(KnowledgeSource::new("ship").with_slot("speed", 18.0), "Cloud-FC")
            .unwrap();
        kb.put_ks(KnowledgeSource::new("helo").with_slot("location", "ship"), "Cloud-FC")
            .unwrap();
        kb.add_drel(DRel {
            appellation: "DRel-helo-speed".into(),
            source_ks: "ship".into(),
            target_ks: "helo".into(),
            shared_attributes: vec![speed()],
            condition: Condition::parse("target.location == source.appellation").unwrap(),
            priority: 0,
        })
        .unwrap();
        kb
    }

    #[test]
    fn helo_inherits_while_on_ship() {
        let mut kb = helo_fixture();
        let (v, prov) = resolve_attribute(&kb, "helo", &speed(), 0).unwrap();
        assert_eq!(v, SlotValue::num(18.0));
        assert!(matches!(prov, Provenance::Inherited { ref drel, .. } if drel == "DRel-helo-speed"));

        kb.set_slot("helo", &SlotPath::parse("location").unwrap(), "airborne".into())
            .unwrap();
        assert!(matches!(
            resolve_attribute(&kb, "helo", &speed(), 0),
            Err(Error::Unresolvable { .. })
        ));
    }

    #[test]
    fn local_value_wins() {
        let mut kb = helo_fixture();
        kb.set_slot("helo", &speed(), SlotValue::num(5.0)).unwrap();
        let (v, prov) = resolve_attribute(&kb, "helo", &speed(), 0).unwrap();
        assert_eq!((v, prov), (SlotValue::num(5.0), Provenance::Local));
    }

    #[test]
    fn eval_condition_with_role_bindings() {
        let kb = helo_fixture();
        let cond = Condition::parse("target.location == source.appellation").unwrap();
        let b: BTreeMap<String, String> = [("source", "ship"), ("target", "helo")]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert!(eval_condition(&kb, &cond, &b, 0).unwrap());
    }

    #[test]
    fn active_drels_lists_relations() {
        let kb = helo_fixture();
        let act = active_drels(&kb, "helo", 0);
        assert_eq!(act.len(), 1);
        assert!(act[0].satisfied);
        assert!(active_drels(&kb, "nobody", 0).is_empty());
    }

    #[test]
    fn subtree_sharing() {
        let mut kb = KnowledgeBase::new();
        kb.add_cloud("C").unwrap();
        let mut m = crate::model::SlotMap::new();
        m.insert("Status".into(), "On".into());
        kb.put_ks(
            KnowledgeSource::new("pump").with_slot("MotorState", SlotValue::Map(m)),
            "C",
        )
        .unwrap();
        kb.put_ks(KnowledgeSource::new("valve"), "C").unwrap();
        kb.add_drel(DRel {
            appellation: "d".into(),
            source_ks: "pump".into(),
            target_ks: "valve".into(),
            shared_attributes: vec![SlotPath::parse("MotorState").unwrap()],
            condition: Condition::parse("true").unwrap(),
            priority: 0,
        })
        .unwrap();
        let (v, _) = resolve_attribute(&kb, "valve", &SlotPath::parse("MotorState/Status").unwrap(), 0).unwrap();
        assert_eq!(v, SlotValue::text("On"));
    }

    #[test]
    fn multi_hop_is_opt_in_and_detects_cycles() {
        let mut kb = KnowledgeBase::new();
        kb.add_cloud("C").unwrap();
        for n in ["a", "b", "c"] {
            kb.put_ks(KnowledgeSource::new(n), "C").unwrap();
        }
        kb.set_slot("c", &speed(), SlotValue::num(3.0)).unwrap();
        let rel = |name: &str, s: &str, t: &str| DRel {
            appellation: name.into(),
            source_ks: s.into(),
            target_ks: t.into(),
            shared_attributes: vec![speed()],
            condition: Condition::parse("true").unwrap(),
            priority: 0,
        };
        kb.add_drel(rel("ab", "b", "a")).unwrap();
        kb.add_drel(rel("bc", "c", "b")).unwrap();
        assert!(resolve_attribute(&kb, "a", &speed(), 0).is_err());
        let opts = ResolveOptions { multi_hop: true };
        let (v, prov) = resolve_attribute_with(&kb, "a", &speed(), 0, opts).unwrap();
        assert_eq!(v, SlotValue::num(3.0));
        assert_eq!(
            prov,
            Provenance::Inherited {
                drel: "ab".into(),
                from: "c".into(),
                via: vec!["bc".into()]
            }
        );

        let mut cyc = KnowledgeBase::new();
        cyc.add_cloud("C").unwrap();
        cyc.put_ks(KnowledgeSource::new("a"), "C").unwrap();
        cyc.put_ks(KnowledgeSource::new("b"), "C").unwrap();
        cyc.add_drel(rel("ab", "b", "a")).unwrap();
        cyc.add_drel(rel("ba", "a", "b")).unwrap();
        assert!(matches!(
            resolve_attribute_with(&cyc, "a", &speed(), 0, opts),
            Err(Error::InheritanceCycle(_))
        ));
    }
}
