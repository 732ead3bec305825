//! The event loop: pulses wake attractors, impulses start lines of thought.

use serde::{Deserialize, Serialize};

use super::chain::{Effects, Impulse};
use super::ops::run_responder;
use super::wm::WorkingMemory;
use crate::engine::Registry;
use crate::error::{Error, Result};
use crate::expr::{Env, EvalCtx};
use crate::lot::{run_lot, LotOptions};
use crate::model::{KnowledgeBase, Pulse, SlotValue, Tick};
use crate::trace::ReasoningTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Pulse(Pulse),
    Impulse(Impulse),
}

#[derive(Debug, Clone, Default)]
pub struct DispatchOutcome {
    /// Events produced while handling the input, in wave order.
    pub emitted: Vec<Event>,
    pub effects: Effects,
    /// Lines of thought started by impulses.
    pub traces: Vec<ReasoningTrace>,
    pub waves: usize,
}

/// Handles `event` and everything it causes, breadth-first. Wave `n` runs
/// at tick `clock + n`. Fails once a cascade would need more than
/// `limits.cascade_depth` waves.
pub fn dispatch(reg: &Registry, kb: &mut KnowledgeBase, event: Event, clock: Tick) -> Result<DispatchOutcome> {
    let limit = reg.limits.cascade_depth;
    let mut out = DispatchOutcome::default();
    let mut wave = vec![event];
    while !wave.is_empty() {
        if out.waves >= limit {
            return Err(Error::CascadeLimitExceeded { limit });
        }
        let tick = clock + out.waves as u64;
        let mut next = Vec::new();
        for ev in wave {
            match ev {
                Event::Pulse(p) => on_pulse(reg, kb, &p, tick, &mut out.effects)?,
                Event::Impulse(i) => on_impulse(reg, kb, &i, tick, &mut out)?,
            }
            next.extend(kb.take_pulses().into_iter().map(Event::Pulse));
            next.extend(out.effects.impulses.drain(..).map(Event::Impulse));
        }
        out.emitted.extend(next.iter().cloned());
        out.waves += 1;
        wave = next;
    }
    Ok(out)
}

fn on_pulse(reg: &Registry, kb: &mut KnowledgeBase, p: &Pulse, tick: Tick, effects: &mut Effects) -> Result<()> {
    // decide against the state the pulse describes, then run in order
    let mut ready: Vec<(String, String, Env)> = Vec::new();
    for ks in kb.knowledge_sources() {
        for a in &ks.attractors {
            if a.watch_ks != p.source || !(p.path.starts_with(&a.watch_path) || a.watch_path.starts_with(&p.path)) {
                continue;
            }
            let mut env = Env::new();
            env.insert("self".into(), SlotValue::Ref(ks.appellation.clone()));
            env.insert("source".into(), SlotValue::Ref(p.source.clone()));
            let ok = match EvalCtx::new(kb, &env, tick)
                .functions(&reg.functions)
                .eval_bool(a.condition.expr())
            {
                Ok(b) => b,
                Err(Error::Unresolvable { .. }) => false,
                Err(e) => return Err(e),
            };
            if ok {
                ready.push((ks.appellation.clone(), a.responder.clone(), env));
            }
        }
    }
    let mut wm = WorkingMemory::new();
    for (ks, responder, env) in ready {
        run_responder(reg, kb, &mut wm, &ks, &responder, tick, &env, effects)?;
    }
    Ok(())
}

fn on_impulse(
    reg: &Registry,
    kb: &mut KnowledgeBase,
    i: &Impulse,
    tick: Tick,
    out: &mut DispatchOutcome,
) -> Result<()> {
    if kb.lot(&i.target).is_some() {
        let opts = LotOptions::at(tick);
        let trace = run_lot(reg, kb, &i.target, &opts)?;
        // lines of thought drain their own pulses into the trace
        out.traces.push(trace);
        return Ok(());
    }
    let Some(ks) = kb.ks(&i.target) else {
        return Err(Error::UnknownLot(i.target.clone()));
    };
    let responder = match &i.responder {
        Some(r) => r.clone(),
        None => ks
            .responders
            .first()
            .map(|r| r.name.clone())
            .ok_or_else(|| Error::UnknownResponder {
                ks: i.target.clone(),
                responder: "<any>".into(),
            })?,
    };
    let mut wm = WorkingMemory::new();
    run_responder(
        reg,
        kb,
        &mut wm,
        &i.target,
        &responder,
        tick,
        &Env::new(),
        &mut out.effects,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Condition;
    use crate::model::{AttractorBinding, KnowledgeSource, Logged, ResponderBinding, SlotPath};

    fn plant() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        kb.add_cloud("Plant").unwrap();
        kb.put_ks(KnowledgeSource::new("KS-FlowMeter").with_slot("reading", 10.0), "Plant")
            .unwrap();
        let mut pump = KnowledgeSource::new("KS-Pump")
            .with_slot("status", "running")
            .with_responder(ResponderBinding::new("suspect", "set").param("status", "suspect-blockage"));
        pump.attractors.push(AttractorBinding {
            watch_ks: "KS-FlowMeter".into(),
            watch_path: SlotPath::parse("reading").unwrap(),
            condition: Condition::parse("source.reading == 0").unwrap(),
            responder: "suspect".into(),
        });
        kb.put_ks(pump, "Plant").unwrap();
        kb
    }

    fn drop_flow(kb: &mut KnowledgeBase) -> Pulse {
        kb.set_slot(
            "KS-FlowMeter",
            &SlotPath::parse("reading").unwrap(),
            SlotValue::num(0.0),
        )
        .unwrap();
        kb.take_pulses().pop().unwrap()
    }

    #[test]
    fn blocked_pump_attractor() {
        let mut kb = plant();
        let p = drop_flow(&mut kb);
        assert_eq!(p.old, Logged::Value(SlotValue::num(10.0)));
        let out = dispatch(&Registry::default(), &mut kb, Event::Pulse(p), 5).unwrap();
        assert_eq!(
            kb.get_slot("KS-Pump", &SlotPath::parse("status").unwrap()),
            Some(&SlotValue::text("suspect-blockage"))
        );
        assert_eq!(out.emitted.len(), 1);
        assert_eq!(
            kb.version_log().last().unwrap().cause.as_deref(),
            Some("KS-Pump.suspect")
        );
    }

    #[test]
    fn unwatched_pulse_is_noop() {
        let mut kb = plant();
        kb.set_slot("KS-Pump", &SlotPath::parse("other").unwrap(), SlotValue::num(1.0))
            .unwrap();
        let p = kb.take_pulses().pop().unwrap();
        let d = kb.digest();
        let out = dispatch(&Registry::default(), &mut kb, Event::Pulse(p), 0).unwrap();
        assert!(out.emitted.is_empty());
        assert_eq!(kb.digest(), d);
    }

    #[test]
    fn runaway_cascade_is_bounded() {
        let mut kb = KnowledgeBase::new();
        kb.add_cloud("C").unwrap();
        let mut k = KnowledgeSource::new("K")
            .with_slot("n", 0.0)
            .with_responder(ResponderBinding::new("inc", "compute").param("n", "self.n + 1"));
        k.attractors.push(AttractorBinding {
            watch_ks: "K".into(),
            watch_path: SlotPath::parse("n").unwrap(),
            condition: Condition::parse("true").unwrap(),
            responder: "inc".into(),
        });
        kb.put_ks(k, "C").unwrap();
        kb.set_slot("K", &SlotPath::parse("n").unwrap(), SlotValue::num(1.0))
            .unwrap();
        let p = kb.take_pulses().pop().unwrap();
        let mut reg = Registry::default();
        reg.limits.cascade_depth = 5;
        assert_eq!(
            dispatch(&reg, &mut kb, Event::Pulse(p), 0).unwrap_err(),
            Error::CascadeLimitExceeded { limit: 5 }
        );
    }
}
