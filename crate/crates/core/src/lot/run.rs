use crate::engine::Registry;
use crate::error::{Error, Result};
use crate::expr::{Env, EvalCtx};
use crate::inference::{forward_chain, run_responder, ChainOptions, Effects, WorkingMemory};
use crate::model::{KnowledgeBase, Pulse, SlotValue, Tick};
use crate::trace::{EventKind, ReasoningTrace};
use crate::xai::render_explains;

use super::{BranchTarget, ForkPredicate, LineOfThought, StepAction};

#[derive(Debug, Clone, Default)]
pub struct LotOptions {
    /// Tick of the `lot_started` event; steps follow at later ticks.
    pub clock: Tick,
    /// Bindings visible to responders, rules and fork predicates.
    pub inputs: Env,
    /// Defaults to `<lot>@<clock>`.
    pub trace_id: Option<String>,
}

impl LotOptions {
    pub fn at(clock: Tick) -> Self {
        LotOptions {
            clock,
            ..LotOptions::default()
        }
    }

    pub fn input(mut self, name: impl Into<String>, value: impl Into<SlotValue>) -> Self {
        self.inputs.insert(name.into(), value.into());
        self
    }

    pub fn id(mut self, id: impl Into<String>) -> Self {
        self.trace_id = Some(id.into());
        self
    }
}

/// Marker: the failure has already been written to the trace.
struct Failed;

enum Flow {
    Done,
    Halt,
}

struct Runner<'a> {
    reg: &'a Registry,
    kb: &'a mut KnowledgeBase,
    trace: ReasoningTrace,
    tick: Tick,
    inputs: Env,
    steps_run: usize,
}

impl Runner<'_> {
    fn fail(&mut self, lot: &str, step: Option<usize>, err: Error) -> Failed {
        self.trace.record_error(self.tick, lot, step, &err);
        Failed
    }

    fn env_for(&self, ks: &str) -> Env {
        let mut env = self.inputs.clone();
        env.insert("self".into(), SlotValue::Ref(ks.to_string()));
        env
    }

    fn record_effects(&mut self, subject: &str, fx: Effects) {
        let tick = self.tick;
        for f in fx.fired {
            self.trace.push(
                tick,
                subject,
                EventKind::RuleFired {
                    rule: f.rule,
                    rule_set: f.rule_set,
                    bindings: f.bindings,
                    reads: f.reads,
                },
            );
        }
        for p in self.kb.take_pulses() {
            let Pulse {
                source, path, old, new, ..
            } = p;
            self.trace
                .push(tick, source, EventKind::PulseEmitted { path, old, new });
        }
        for i in fx.impulses {
            self.trace.push(
                tick,
                subject,
                EventKind::ImpulseEmitted {
                    target: i.target,
                    reason: i.reason,
                },
            );
        }
        for c in fx.commands {
            self.trace.push(
                tick,
                subject,
                EventKind::CommandEmitted {
                    name: c.name,
                    args: c.args,
                },
            );
        }
        for seq in fx.functions {
            let function = self.kb.function_log()[seq as usize - 1].function.clone();
            self.trace
                .push(tick, subject, EventKind::FunctionLogged { function, seq });
        }
    }

    fn run_rules(&mut self, set: &str, ks: &str, wm: &mut WorkingMemory) -> Result<Effects> {
        let rules = self.reg.rules.set(set)?;
        let opts = ChainOptions {
            max_cycles: self.reg.limits.max_cycles,
            globals: self.env_for(ks),
            clock: self.tick,
        };
        Ok(forward_chain(self.reg, self.kb, &rules, wm, &opts)?.into_effects())
    }

    /// Runs one line of thought. Step numbers in events are one-based.
    fn run(&mut self, name: &str, depth: usize, wm: &mut WorkingMemory) -> std::result::Result<Flow, Failed> {
        let Some(lot) = self.kb.lot(name).cloned() else {
            return Err(self.fail(name, None, Error::UnknownLot(name.to_string())));
        };
        self.trace.push(
            self.tick,
            name,
            EventKind::LotStarted {
                lot: name.to_string(),
                depth,
            },
        );
        for j in &lot.juncture_links {
            self.trace
                .push(self.tick, name, EventKind::JunctureTouched { juncture: j.clone() });
        }
        let flow = self.steps(&lot, depth, wm)?;
        self.trace
            .push(self.tick, name, EventKind::LotFinished { lot: name.to_string() });
        Ok(flow)
    }

    fn steps(
        &mut self,
        lot: &LineOfThought,
        depth: usize,
        wm: &mut WorkingMemory,
    ) -> std::result::Result<Flow, Failed> {
        let name = lot.name.as_str();
        let mut pc = 0;
        while pc < lot.steps.len() {
            let step = &lot.steps[pc];
            let number = pc + 1;
            self.steps_run += 1;
            if self.steps_run > self.reg.limits.step_limit {
                let limit = self.reg.limits.step_limit;
                return Err(self.fail(
                    name,
                    Some(number),
                    Error::StepLimitExceeded {
                        lot: name.to_string(),
                        limit,
                    },
                ));
            }
            self.tick += 1;
            if self.kb.ks(&step.target).is_none() {
                return Err(self.fail(name, Some(number), Error::UnknownKs(step.target.clone())));
            }
            let explains = render_explains(self.kb, &step.target, self.tick);
            self.trace.push(
                self.tick,
                &step.target,
                EventKind::StepActivated {
                    lot: name.to_string(),
                    step: number,
                    action: step.action.label(),
                    input_digest: self.kb.digest(),
                    explains,
                },
            );
            let mut fx = Effects::default();
            let ran = match &step.action {
                StepAction::None => Ok(true),
                StepAction::Responder(r) => {
                    let env = self.env_for(&step.target);
                    run_responder(self.reg, self.kb, wm, &step.target, r, self.tick, &env, &mut fx)
                }
                StepAction::RuleSet(s) => self.run_rules(s, &step.target, wm).map(|e| {
                    fx = e;
                    true
                }),
            };
            let ran = match ran {
                Ok(r) => r,
                Err(e) => {
                    self.record_effects(&step.target, fx);
                    return Err(self.fail(name, Some(number), e));
                }
            };
            self.record_effects(&step.target, fx);
            self.trace.push(
                self.tick,
                &step.target,
                EventKind::StepCompleted {
                    lot: name.to_string(),
                    step: number,
                    output_digest: self.kb.digest(),
                    skipped: !ran,
                },
            );
            let Some(fork) = &step.fork else {
                pc += 1;
                continue;
            };
            let value = match &fork.predicate {
                ForkPredicate::Expr(c) => {
                    let env = self.env_for(&step.target);
                    EvalCtx::new(self.kb, &env, self.tick)
                        .functions(&self.reg.functions)
                        .eval(c.expr())
                }
                ForkPredicate::RuleSet { set, fact } => match self.run_rules(set, &step.target, wm) {
                    Ok(fx) => {
                        self.record_effects(&step.target, fx);
                        Ok(SlotValue::Bool(wm.has_name(fact)))
                    }
                    Err(e) => Err(e),
                },
            };
            let value = match value {
                Ok(v) => v,
                Err(e) => {
                    let err = Error::ForkPredicateError {
                        step: number,
                        source: Box::new(e),
                    };
                    return Err(self.fail(name, Some(number), err));
                }
            };
            let branch = match fork.select(&value) {
                Ok(b) => b.clone(),
                Err(e) => return Err(self.fail(name, Some(number), e)),
            };
            self.trace.push(
                self.tick,
                &step.target,
                EventKind::ForkTaken {
                    fork: fork.name.clone(),
                    value,
                    taken: branch.label.clone(),
                    untaken: fork
                        .branches
                        .iter()
                        .filter(|b| b.label != branch.label)
                        .map(|b| b.label.clone())
                        .collect(),
                },
            );
            match branch.target {
                BranchTarget::Next => pc += 1,
                BranchTarget::Step(j) => pc = j,
                BranchTarget::Halt => return Ok(Flow::Halt),
                BranchTarget::Lot(next) => {
                    let limit = self.reg.limits.lot_depth;
                    if depth + 1 >= limit {
                        return Err(self.fail(name, Some(number), Error::DepthLimitExceeded { limit }));
                    }
                    // control transfers: this line ends when the nested one does
                    return self.run(&next, depth + 1, wm);
                }
            }
        }
        Ok(Flow::Done)
    }
}

fn start<'a>(reg: &'a Registry, kb: &'a mut KnowledgeBase, opts: &LotOptions, id: String, entry: String) -> Runner<'a> {
    Runner {
        reg,
        kb,
        trace: ReasoningTrace::new(id, entry, opts.clock),
        tick: opts.clock,
        inputs: opts.inputs.clone(),
        steps_run: 0,
    }
}

fn check_targets(kb: &KnowledgeBase, lot: &str) -> Result<()> {
    let l = kb.lot(lot).ok_or_else(|| Error::UnknownLot(lot.to_string()))?;
    for t in l.targets() {
        kb.require_ks(t)?;
    }
    Ok(())
}

/// Executes a line of thought. Precondition failures (unknown line, missing
/// step targets) are returned as errors; failures during execution end the
/// run and are recorded in the returned trace.
pub fn run_lot(reg: &Registry, kb: &mut KnowledgeBase, lot: &str, opts: &LotOptions) -> Result<ReasoningTrace> {
    check_targets(kb, lot)?;
    let stale = kb.take_pulses();
    let id = opts.trace_id.clone().unwrap_or_else(|| format!("{lot}@{}", opts.clock));
    let mut r = start(reg, kb, opts, id, lot.to_string());
    let mut wm = WorkingMemory::new();
    let _ = r.run(lot, 0, &mut wm);
    let trace = r.trace;
    restore(kb, stale);
    Ok(trace)
}

fn restore(kb: &mut KnowledgeBase, stale: Vec<Pulse>) {
    // pulses queued before the run stay queued for the caller
    kb.requeue_pulses(stale);
}

/// Runs lines of thought back to back in one trace, each seeing the state
/// the previous one committed. A failure stops the sequence and records
/// its position.
pub fn chain_lots(
    reg: &Registry,
    kb: &mut KnowledgeBase,
    sequence: &[&str],
    opts: &LotOptions,
) -> Result<ReasoningTrace> {
    for (position, lot) in sequence.iter().enumerate() {
        check_targets(kb, lot).map_err(|e| Error::InSequence {
            position,
            source: Box::new(e),
        })?;
    }
    let stale = kb.take_pulses();
    let id = opts
        .trace_id
        .clone()
        .unwrap_or_else(|| format!("{}@{}", sequence.join("+"), opts.clock));
    let mut r = start(reg, kb, opts, id, sequence.join(" > "));
    for (position, lot) in sequence.iter().enumerate() {
        let mut wm = WorkingMemory::new();
        match r.run(lot, 0, &mut wm) {
            Ok(Flow::Done) => {}
            Ok(Flow::Halt) => break,
            Err(Failed) => {
                if let Some(e) = r.trace.error.as_mut() {
                    e.position = Some(position);
                }
                break;
            }
        }
    }
    let trace = r.trace;
    restore(kb, stale);
    Ok(trace)
}
