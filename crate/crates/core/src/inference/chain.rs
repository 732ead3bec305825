use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::matcher::{bindings_key, bindings_of, justification, match_patterns, var_key, MatchCtx};
use super::ops::run_responder;
use super::rule::{Action, Rule, Term};
use super::wm::{Fact, WorkingMemory};
use crate::engine::Registry;
use crate::error::{Error, Result};
use crate::expr::{Env, EvalCtx};
use crate::model::{KLinePath, KnowledgeBase, SlotValue, Tick};

#[derive(Debug, Clone)]
pub struct ChainOptions {
    pub max_cycles: usize,
    /// Bindings visible to every pattern and action (e.g. `Self`).
    pub globals: Env,
    pub clock: Tick,
}

impl ChainOptions {
    pub fn new(max_cycles: usize, clock: Tick) -> Self {
        ChainOptions {
            max_cycles,
            globals: Env::new(),
            clock,
        }
    }

    pub fn global(mut self, name: impl Into<String>, value: impl Into<SlotValue>) -> Self {
        self.globals.insert(name.into(), value.into());
        self
    }
}

/// One rule firing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Firing {
    pub rule: String,
    pub rule_set: String,
    pub bindings: Vec<(String, SlotValue)>,
    /// Slots whose values justified the match.
    pub reads: Vec<KLinePath>,
    pub tick: Tick,
}

/// An outward instruction produced by a rule (e.g. a game move).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub name: String,
    pub args: Vec<SlotValue>,
    pub origin: String,
}

/// Activation trigger for a line of thought, or for one responder of a
/// knowledge source. Impulses never carry state deltas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Impulse {
    pub target: String,
    pub responder: Option<String>,
    pub reason: String,
    pub tick: Tick,
}

/// Everything produced while running rules and responders, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Effects {
    pub fired: Vec<Firing>,
    pub commands: Vec<Command>,
    pub impulses: Vec<Impulse>,
    pub anomalies: Vec<super::AnomalyEvent>,
    /// Sequence numbers of function-log entries written.
    pub functions: Vec<u64>,
    pub halted: bool,
    pub cycle_limit_hit: bool,
}

impl Effects {
    pub fn absorb(&mut self, other: Effects) {
        self.fired.extend(other.fired);
        self.commands.extend(other.commands);
        self.impulses.extend(other.impulses);
        self.anomalies.extend(other.anomalies);
        self.functions.extend(other.functions);
        self.halted |= other.halted;
        self.cycle_limit_hit |= other.cycle_limit_hit;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainResult {
    pub fired: Vec<Firing>,
    pub commands: Vec<Command>,
    pub impulses: Vec<Impulse>,
    /// Activations were still pending when `max_cycles` was reached.
    pub cycle_limit_hit: bool,
    pub halted: bool,
    pub(crate) nested: Effects,
}

impl ChainResult {
    pub fn into_effects(self) -> Effects {
        let mut e = Effects {
            fired: self.fired,
            commands: self.commands,
            impulses: self.impulses,
            halted: self.halted,
            cycle_limit_hit: self.cycle_limit_hit,
            ..Effects::default()
        };
        e.anomalies = self.nested.anomalies;
        e.functions = self.nested.functions;
        e
    }
}

struct Activation {
    salience: i64,
    specificity: usize,
    index: usize,
    key: String,
    env: Env,
}

fn term_value(t: &Term, env: &Env) -> Result<SlotValue> {
    match t {
        Term::Const(c) => Ok(c.clone()),
        Term::Var(v) => env
            .get(&var_key(v))
            .cloned()
            .ok_or_else(|| Error::UnboundVariable(v.clone())),
    }
}

fn ks_of(env: &Env, var: &str) -> Result<String> {
    let v = env
        .get(&var_key(var))
        .ok_or_else(|| Error::UnboundVariable(var.to_string()))?;
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| Error::Invalid(format!("?{var} is bound to {v}, not a knowledge source")))
}

/// Match, select, act until quiescence, halt or `max_cycles` firings.
pub fn forward_chain(
    reg: &Registry,
    kb: &mut KnowledgeBase,
    rules: &[&Rule],
    wm: &mut WorkingMemory,
    opts: &ChainOptions,
) -> Result<ChainResult> {
    if opts.max_cycles == 0 {
        return Err(Error::Invalid("max_cycles must be at least 1".into()));
    }
    let mut result = ChainResult::default();
    let mut refracted: BTreeSet<(String, String)> = BTreeSet::new();
    let mut cycles = 0;
    loop {
        let best = {
            let ctx = MatchCtx {
                kb,
                wm,
                functions: &reg.functions,
                clock: opts.clock,
            };
            let mut best: Option<Activation> = None;
            for (index, rule) in rules.iter().enumerate() {
                for env in match_patterns(&ctx, &rule.patterns, opts.globals.clone())? {
                    let key = bindings_key(&env);
                    if refracted.contains(&(rule.name.clone(), key.clone())) {
                        continue;
                    }
                    let a = Activation {
                        salience: rule.salience,
                        specificity: rule.specificity(),
                        index,
                        key,
                        env,
                    };
                    let wins = match &best {
                        None => true,
                        Some(b) => {
                            (
                                b.salience,
                                b.specificity,
                                std::cmp::Reverse(b.index),
                                std::cmp::Reverse(&b.key),
                            ) < (
                                a.salience,
                                a.specificity,
                                std::cmp::Reverse(a.index),
                                std::cmp::Reverse(&a.key),
                            )
                        }
                    };
                    if wins {
                        best = Some(a);
                    }
                }
            }
            best
        };
        let Some(act) = best else { break };
        if cycles >= opts.max_cycles {
            result.cycle_limit_hit = true;
            break;
        }
        cycles += 1;
        let rule = rules[act.index];
        refracted.insert((rule.name.clone(), act.key.clone()));
        let reads = {
            let ctx = MatchCtx {
                kb,
                wm,
                functions: &reg.functions,
                clock: opts.clock,
            };
            justification(&ctx, &rule.patterns, &act.env)
        };
        result.fired.push(Firing {
            rule: rule.name.clone(),
            rule_set: rule.rule_set.clone(),
            bindings: bindings_of(&act.env),
            reads,
            tick: opts.clock,
        });
        if fire(reg, kb, wm, rule, &act.env, opts, &mut result)? {
            result.halted = true;
            break;
        }
    }
    Ok(result)
}

/// Runs a rule's actions. Returns true on `halt`.
fn fire(
    reg: &Registry,
    kb: &mut KnowledgeBase,
    wm: &mut WorkingMemory,
    rule: &Rule,
    env: &Env,
    opts: &ChainOptions,
    result: &mut ChainResult,
) -> Result<bool> {
    let cause = format!("rule {}", rule.name);
    for action in &rule.actions {
        match action {
            Action::Assert { name, args } => {
                let args = args.iter().map(|t| term_value(t, env)).collect::<Result<_>>()?;
                wm.assert(Fact {
                    name: name.clone(),
                    args,
                    origin: Some(rule.name.clone()),
                });
            }
            Action::SetSlot { var, path, expr } => {
                let ks = ks_of(env, var)?;
                let value = EvalCtx::new(kb, env, opts.clock)
                    .functions(&reg.functions)
                    .eval(expr.expr())?;
                kb.attributed(opts.clock, cause.clone(), |kb| kb.set_slot(&ks, path, value))?;
            }
            Action::Command { name, args } => {
                let ctx = EvalCtx::new(kb, env, opts.clock).functions(&reg.functions);
                let args = args.iter().map(|a| ctx.eval(a.expr())).collect::<Result<_>>()?;
                result.commands.push(Command {
                    name: name.clone(),
                    args,
                    origin: rule.name.clone(),
                });
            }
            Action::Invoke { var, responder } => {
                let ks = ks_of(env, var)?;
                let mut fx = Effects::default();
                run_responder(reg, kb, wm, &ks, responder, opts.clock, env, &mut fx)?;
                result.fired.append(&mut fx.fired);
                result.commands.append(&mut fx.commands);
                result.impulses.append(&mut fx.impulses);
                result.nested.absorb(fx);
            }
            Action::Impulse(target) => result.impulses.push(Impulse {
                target: target.clone(),
                responder: None,
                reason: rule.name.clone(),
                tick: opts.clock,
            }),
            Action::Halt => return Ok(true),
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::rule::Pattern;

    fn atom(name: &str) -> Pattern {
        Pattern::Fact {
            name: name.into(),
            args: vec![],
        }
    }

    fn implies(name: &str, from: &[&str], to: &str) -> Rule {
        let mut r = Rule::new(name, "S");
        for f in from {
            r = r.when(atom(f));
        }
        r.then(Action::Assert {
            name: to.into(),
            args: vec![],
        })
    }

    fn run(rules: &[Rule], facts: &[&str]) -> (WorkingMemory, ChainResult) {
        let reg = Registry::default();
        let mut kb = KnowledgeBase::new();
        let mut wm = WorkingMemory::new();
        for f in facts {
            wm.assert_fact(f, vec![]);
        }
        let refs: Vec<&Rule> = rules.iter().collect();
        let r = forward_chain(&reg, &mut kb, &refs, &mut wm, &ChainOptions::new(100, 0)).unwrap();
        (wm, r)
    }

    #[test]
    fn two_step_chain() {
        let rules = [implies("AB", &["A"], "B"), implies("BC", &["B"], "C")];
        let (wm, r) = run(&rules, &["A"]);
        assert!(wm.contains("C", &[]));
        let order: Vec<&str> = r.fired.iter().map(|f| f.rule.as_str()).collect();
        assert_eq!(order, ["AB", "BC"]);
    }

    #[test]
    fn refraction_and_halt() {
        let rules = [implies("AB", &["A"], "B")];
        let (_, r) = run(&rules, &["A"]);
        assert_eq!(r.fired.len(), 1);

        let stop = Rule::new("Stop", "S").when(atom("A")).salience(5).then(Action::Halt);
        let (wm, r) = run(&[stop, implies("AB", &["A"], "B")], &["A"]);
        assert!(r.halted);
        assert!(!wm.contains("B", &[]));
    }

    #[test]
    fn conflict_resolution_order() {
        let low = implies("Low", &["A"], "X").salience(1);
        let specific = implies("Specific", &["A", "B"], "Y");
        let general = implies("General", &["A"], "Z");
        let (_, r) = run(&[general, specific, low], &["A", "B"]);
        let order: Vec<&str> = r.fired.iter().map(|f| f.rule.as_str()).collect();
        assert_eq!(order, ["Low", "Specific", "General"]);
    }

    #[test]
    fn cycle_limit_is_a_flag() {
        let rules = [implies("AB", &["A"], "B"), implies("BC", &["B"], "C")];
        let reg = Registry::default();
        let mut kb = KnowledgeBase::new();
        let mut wm = WorkingMemory::new();
        wm.assert_fact("A", vec![]);
        let refs: Vec<&Rule> = rules.iter().collect();
        let r = forward_chain(&reg, &mut kb, &refs, &mut wm, &ChainOptions::new(1, 0)).unwrap();
        assert_eq!(r.fired.len(), 1);
        assert!(r.cycle_limit_hit);
    }
}
