//! Set-at-a-time pattern matching shared by rules and templates.

use std::collections::BTreeSet;

use super::rule::{Aggregate, Pattern, Term};
use super::wm::WorkingMemory;
use crate::error::{Error, Result};
use crate::expr::{Condition, Env, EvalCtx, FunctionTable};
use crate::model::{KLinePath, KnowledgeBase, SlotValue, Tick};

/// Read-only inputs to matching.
#[derive(Clone, Copy)]
pub struct MatchCtx<'a> {
    pub kb: &'a KnowledgeBase,
    pub wm: &'a WorkingMemory,
    pub functions: &'a FunctionTable,
    pub clock: Tick,
}

impl<'a> MatchCtx<'a> {
    fn eval_ctx(&self, env: &'a Env) -> EvalCtx<'a> {
        EvalCtx::new(self.kb, env, self.clock).functions(self.functions)
    }

    /// For candidate filtering, where reads are not reported.
    fn probe(&self, env: &'a Env) -> EvalCtx<'a> {
        self.eval_ctx(env).untracked()
    }
}

pub(crate) fn var_key(var: &str) -> String {
    format!("?{var}")
}

/// Canonical text of the pattern variables in `env`, used for ordering and
/// refraction.
pub fn bindings_key(env: &Env) -> String {
    env.iter()
        .filter(|(k, _)| k.starts_with('?'))
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Pattern variables of `env` without the `?` prefix.
pub fn bindings_of(env: &Env) -> Vec<(String, SlotValue)> {
    env.iter()
        .filter_map(|(k, v)| k.strip_prefix('?').map(|n| (n.to_string(), v.clone())))
        .collect()
}

/// A missing slot makes a candidate fail to match instead of aborting.
fn holds(ctx: &EvalCtx<'_>, cond: &Condition) -> Result<bool> {
    match ctx.eval_bool(cond.expr()) {
        Ok(b) => Ok(b),
        Err(Error::Unresolvable { .. } | Error::UnknownPath(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Env keys of the variable terms, computed once per pattern.
fn term_keys(args: &[Term]) -> Vec<Option<String>> {
    args.iter()
        .map(|t| match t {
            Term::Var(v) => Some(var_key(v)),
            Term::Const(_) => None,
        })
        .collect()
}

/// Value the first argument must take, when a constant or bound variable
/// fixes it.
fn fixed_first<'e>(args: &'e [Term], keys: &[Option<String>], env: &'e Env) -> Option<&'e SlotValue> {
    match (args.first()?, keys.first()?) {
        (Term::Const(c), _) => Some(c),
        (Term::Var(_), Some(k)) => env.get(k),
        (Term::Var(_), None) => None,
    }
}

fn unify(args: &[Term], keys: &[Option<String>], values: &[SlotValue], env: &Env) -> Option<Env> {
    if args.len() != values.len() {
        return None;
    }
    // check before cloning; most candidate facts fail
    let mut fresh: Vec<(&str, &SlotValue)> = Vec::new();
    for ((t, key), v) in args.iter().zip(keys).zip(values) {
        match (t, key) {
            (Term::Const(c), _) => {
                if !c.loosely_equals(v) {
                    return None;
                }
            }
            (Term::Var(_), Some(key)) => {
                let bound = env
                    .get(key)
                    .or_else(|| fresh.iter().find(|(k, _)| k == key).map(|(_, v)| *v));
                match bound {
                    Some(b) if !b.loosely_equals(v) => return None,
                    Some(_) => {}
                    None => fresh.push((key, v)),
                }
            }
            (Term::Var(_), None) => unreachable!("keys come from term_keys"),
        }
    }
    let mut out = env.clone();
    for (k, v) in fresh {
        out.insert(k.to_string(), v.clone());
    }
    Some(out)
}

fn step(ctx: &MatchCtx<'_>, pattern: &Pattern, envs: Vec<Env>) -> Result<Vec<Env>> {
    let mut out = Vec::new();
    match pattern {
        Pattern::Ks { var, cloud, cond } => {
            let key = var_key(var);
            let candidates: Vec<String> = match cloud {
                Some(c) => {
                    if ctx.kb.cloud(c).is_none() {
                        return Err(Error::UnknownCloud(c.clone()));
                    }
                    ctx.kb.members_recursive(c).into_iter().collect()
                }
                None => ctx.kb.ks_names().map(str::to_string).collect(),
            };
            for env in envs {
                if let Some(bound) = env.get(&key) {
                    let ok = bound
                        .as_str()
                        .is_some_and(|n| candidates.binary_search_by(|c| c.as_str().cmp(n)).is_ok());
                    if ok && holds(&ctx.probe(&env), cond)? {
                        out.push(env);
                    }
                    continue;
                }
                for name in &candidates {
                    let mut e = env.clone();
                    e.insert(key.clone(), SlotValue::Ref(name.clone()));
                    if holds(&ctx.probe(&e), cond)? {
                        out.push(e);
                    }
                }
            }
        }
        Pattern::Fact { name, args } => {
            let keys = term_keys(args);
            for env in &envs {
                for f in ctx.wm.candidates(name, fixed_first(args, &keys, env)) {
                    if let Some(e) = unify(args, &keys, &f.args, env) {
                        out.push(e);
                    }
                }
            }
        }
        Pattern::Absent { name, args } => {
            let keys = term_keys(args);
            for env in envs {
                let found = ctx
                    .wm
                    .candidates(name, fixed_first(args, &keys, &env))
                    .any(|f| unify(args, &keys, &f.args, &env).is_some());
                if !found {
                    out.push(env);
                }
            }
        }
        Pattern::Test(cond) => {
            for env in envs {
                if holds(&ctx.probe(&env), cond)? {
                    out.push(env);
                }
            }
        }
        Pattern::Aggregate { kind, expr, var } => {
            // the tie-break key is only rendered when a tie happens
            let mut best: Option<(f64, Option<String>, Env)> = None;
            for env in envs {
                let v = match ctx.probe(&env).eval(expr.expr()) {
                    Ok(v) => v,
                    Err(Error::Unresolvable { .. } | Error::UnknownPath(_)) => continue,
                    Err(e) => return Err(e),
                };
                let n = v
                    .as_number()
                    .ok_or_else(|| Error::NonNumericValue(expr.source().to_string()))?;
                match &mut best {
                    None => best = Some((n, None, env)),
                    Some((b, bk, benv)) => {
                        let strictly = match kind {
                            Aggregate::Minimize => n < *b,
                            Aggregate::Maximize => n > *b,
                        };
                        if strictly {
                            best = Some((n, None, env));
                        } else if n == *b {
                            let key = bindings_key(&env);
                            let held = bk.get_or_insert_with(|| bindings_key(benv));
                            if key < *held {
                                best = Some((n, Some(key), env));
                            }
                        }
                    }
                }
            }
            if let Some((n, _, mut env)) = best {
                env.insert(var_key(var), SlotValue::num(n));
                out.push(env);
            }
        }
    }
    Ok(out)
}

/// All binding environments satisfying `patterns`, extending `seed`, in
/// lexicographic order of their bindings.
pub fn match_patterns(ctx: &MatchCtx<'_>, patterns: &[Pattern], seed: Env) -> Result<Vec<Env>> {
    let mut envs = vec![seed];
    for p in patterns {
        envs = step(ctx, p, envs)?;
        if envs.is_empty() {
            break;
        }
    }
    let mut keyed: Vec<(String, Env)> = envs.into_iter().map(|e| (bindings_key(&e), e)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    Ok(keyed.into_iter().map(|(_, e)| e).collect())
}

/// Slots consulted when re-checking `patterns` under a final binding: the
/// justification of a match.
pub fn justification(ctx: &MatchCtx<'_>, patterns: &[Pattern], env: &Env) -> Vec<KLinePath> {
    let ec = ctx.eval_ctx(env);
    for p in patterns {
        let expr = match p {
            Pattern::Ks { cond, .. } | Pattern::Test(cond) => cond,
            Pattern::Aggregate { expr, .. } => expr,
            Pattern::Fact { .. } | Pattern::Absent { .. } => continue,
        };
        let _ = ec.eval(expr.expr());
    }
    let reads: BTreeSet<KLinePath> = ec.take_reads();
    reads.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::KnowledgeSource;

    fn pumps() -> KnowledgeBase {
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
        kb.put_ks(KnowledgeSource::new("V1").with_slot("type", "Valve"), "Plant")
            .unwrap();
        kb
    }

    fn run(kb: &KnowledgeBase, wm: &WorkingMemory, ps: &[Pattern], seed: Env) -> Vec<Env> {
        let f = FunctionTable::new();
        let ctx = MatchCtx {
            kb,
            wm,
            functions: &f,
            clock: 0,
        };
        match_patterns(&ctx, ps, seed).unwrap()
    }

    fn names(envs: &[Env], var: &str) -> Vec<String> {
        envs.iter().map(|e| e[&var_key(var)].to_string()).collect()
    }

    #[test]
    fn missing_slot_is_non_match() {
        let kb = pumps();
        let p = Pattern::Ks {
            var: "p".into(),
            cloud: Some("Plant".into()),
            cond: Condition::parse("?p.pressure < 2.0").unwrap(),
        };
        let out = run(&kb, &WorkingMemory::new(), &[p], Env::new());
        assert_eq!(names(&out, "p"), ["P1", "P3"]);
    }

    #[test]
    fn join_absent_and_aggregate() {
        let kb = pumps();
        let mut wm = WorkingMemory::new();
        wm.assert_fact("Serviced", vec![SlotValue::reference("P3")]);
        let ps = vec![
            Pattern::Ks {
                var: "p".into(),
                cloud: None,
                cond: Condition::parse("?p.type == 'Pump'").unwrap(),
            },
            Pattern::Absent {
                name: "Serviced".into(),
                args: vec![Term::Var("p".into())],
            },
        ];
        assert_eq!(names(&run(&kb, &wm, &ps, Env::new()), "p"), ["P1", "P2"]);

        let mut agg = ps.clone();
        agg.push(Pattern::Aggregate {
            kind: Aggregate::Maximize,
            expr: Condition::parse("?p.pressure").unwrap(),
            var: "top".into(),
        });
        let out = run(&kb, &wm, &agg, Env::new());
        assert_eq!(names(&out, "p"), ["P2"]);
        assert_eq!(out[0]["?top"], SlotValue::num(2.5));
    }

    #[test]
    fn aggregate_ties_pick_smallest_binding() {
        let mut kb = KnowledgeBase::new();
        kb.add_cloud("C").unwrap();
        for n in ["b", "a", "c"] {
            kb.put_ks(KnowledgeSource::new(n).with_slot("v", 1.0), "C").unwrap();
        }
        let ps = vec![
            Pattern::Ks {
                var: "x".into(),
                cloud: Some("C".into()),
                cond: Condition::parse("true").unwrap(),
            },
            Pattern::Aggregate {
                kind: Aggregate::Minimize,
                expr: Condition::parse("?x.v").unwrap(),
                var: "m".into(),
            },
        ];
        assert_eq!(names(&run(&kb, &WorkingMemory::new(), &ps, Env::new()), "x"), ["a"]);
    }

    #[test]
    fn fact_unification_respects_bound_vars() {
        let kb = KnowledgeBase::new();
        let mut wm = WorkingMemory::new();
        wm.assert_fact("E", vec![SlotValue::text("a"), SlotValue::text("b")]);
        wm.assert_fact("E", vec![SlotValue::text("b"), SlotValue::text("c")]);
        let ps = vec![
            Pattern::Fact {
                name: "E".into(),
                args: vec![Term::Var("x".into()), Term::Var("y".into())],
            },
            Pattern::Fact {
                name: "E".into(),
                args: vec![Term::Var("y".into()), Term::Var("z".into())],
            },
        ];
        let out = run(&kb, &wm, &ps, Env::new());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0]["?z"], SlotValue::text("c"));
    }
}
