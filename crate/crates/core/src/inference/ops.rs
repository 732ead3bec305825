//! Named responder operations and reasoning paradigms.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::anomaly::detect_anomalies;
use super::chain::{forward_chain, ChainOptions, ChainResult, Effects, Impulse};
use super::rule::Rule;
use super::template::{apply_template, match_template};
use super::wm::WorkingMemory;
use crate::engine::Registry;
use crate::error::{Error, Result};
use crate::expr::{Condition, Env, EvalCtx};
use crate::model::{FunctionLogEntry, KnowledgeBase, ResponderBinding, SlotPath, SlotValue, Tick};

/// Everything an operation may touch while a responder runs.
pub struct OpCtx<'a> {
    pub reg: &'a Registry,
    pub kb: &'a mut KnowledgeBase,
    pub wm: &'a mut WorkingMemory,
    /// Knowledge source owning the responder.
    pub ks: &'a str,
    pub responder: &'a ResponderBinding,
    pub tick: Tick,
    /// `self`, `source` and caller bindings.
    pub env: &'a Env,
    pub effects: &'a mut Effects,
}

impl OpCtx<'_> {
    pub fn param(&self, key: &str) -> Result<&SlotValue> {
        self.responder.params.get(key).ok_or_else(|| {
            Error::Invalid(format!(
                "responder `{}` on `{}` needs parameter `{key}`",
                self.responder.name, self.ks
            ))
        })
    }

    pub fn param_text(&self, key: &str) -> Result<&str> {
        let v = self.param(key)?;
        v.as_str().ok_or_else(|| {
            Error::Invalid(format!(
                "parameter `{key}` of responder `{}` must be a name or string, found {v}",
                self.responder.name
            ))
        })
    }
}

pub type OpFn = Arc<dyn Fn(&mut OpCtx<'_>) -> Result<()> + Send + Sync>;

#[derive(Clone, Default)]
pub struct OperationRegistry(BTreeMap<String, OpFn>);

impl fmt::Debug for OperationRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.keys()).finish()
    }
}

/// Parameter keys name slots with `.` or `/` separators.
fn param_path(key: &str) -> Result<SlotPath> {
    SlotPath::new(key.split(['.', '/']))
}

impl OperationRegistry {
    pub fn register(
        &mut self,
        name: impl Into<String>,
        f: impl Fn(&mut OpCtx<'_>) -> Result<()> + Send + Sync + 'static,
    ) {
        self.0.insert(name.into(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&OpFn> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// `noop`, `set`, `compute`, `rules`, `detect`, `impulse`, `template`
    /// and `elaborate`.
    pub fn with_builtins() -> Self {
        let mut r = OperationRegistry::default();
        r.register("noop", |_| Ok(()));
        r.register("set", |cx| {
            for (k, v) in &cx.responder.params {
                cx.kb.set_slot(cx.ks, &param_path(k)?, v.clone())?;
            }
            Ok(())
        });
        r.register("compute", |cx| {
            // evaluate everything against the pre-state, then commit
            let mut values = Vec::new();
            {
                let ec = EvalCtx::new(cx.kb, cx.env, cx.tick).functions(&cx.reg.functions);
                for (k, v) in &cx.responder.params {
                    let src = v.as_str().ok_or_else(|| {
                        Error::Invalid(format!("compute parameter `{k}` must be an expression string"))
                    })?;
                    values.push((param_path(k)?, ec.eval(Condition::parse(src)?.expr())?));
                }
            }
            for (p, v) in values {
                cx.kb.set_slot(cx.ks, &p, v)?;
            }
            Ok(())
        });
        r.register("rules", |cx| {
            let set = cx.param_text("set")?.to_string();
            let paradigm = match cx.responder.params.get("paradigm") {
                Some(p) => p.as_str().unwrap_or_default().to_string(),
                None => "forward-chaining".to_string(),
            };
            let max_cycles = match cx.responder.params.get("max_cycles") {
                Some(v) => v
                    .as_number()
                    .ok_or_else(|| Error::NonNumericValue("max_cycles".into()))? as usize,
                None => cx.reg.limits.max_cycles,
            };
            let rules = cx.reg.rules.set(&set)?;
            let run = cx
                .reg
                .paradigms
                .get(&paradigm)
                .ok_or_else(|| Error::UnknownParadigm(paradigm.clone()))?;
            let opts = ChainOptions {
                max_cycles,
                globals: cx.env.clone(),
                clock: cx.tick,
            };
            let res = run(cx.reg, cx.kb, &rules, cx.wm, &opts)?;
            cx.effects.absorb(res.into_effects());
            Ok(())
        });
        r.register("detect", |cx| {
            let specs: Vec<_> = match cx.responder.params.get("specs").and_then(|v| v.as_list()) {
                Some(names) => {
                    let names: Vec<&str> = names.iter().filter_map(|n| n.as_str()).collect();
                    cx.reg
                        .anomalies
                        .iter()
                        .filter(|s| names.contains(&s.name.as_str()))
                        .cloned()
                        .collect()
                }
                None => cx.reg.anomalies.clone(),
            };
            let events = detect_anomalies(cx.kb, &specs, cx.tick)?;
            for ev in events {
                let spec = specs.iter().find(|s| s.name == ev.spec).expect("event from spec");
                if let Some(i) = ev.impulse(spec) {
                    cx.effects.impulses.push(i);
                }
                cx.effects.anomalies.push(ev);
            }
            Ok(())
        });
        r.register("impulse", |cx| {
            let target = cx.param_text("target")?.to_string();
            let responder = cx.responder.param_str("responder").map(str::to_string);
            cx.effects.impulses.push(Impulse {
                target,
                responder,
                reason: format!("{}.{}", cx.ks, cx.responder.name),
                tick: cx.tick,
            });
            Ok(())
        });
        r.register("template", |cx| {
            let name = cx.param_text("template")?.to_string();
            let names: Vec<String> = match cx.reg.assemblies.get(&name) {
                Some(members) => members.clone(),
                None => vec![name],
            };
            for n in names {
                let tpl = cx
                    .reg
                    .templates
                    .get(&n)
                    .ok_or_else(|| Error::Invalid(format!("unknown template `{n}`")))?;
                for b in match_template(cx.kb, &cx.reg.functions, tpl)? {
                    apply_template(cx.kb, &cx.reg.functions, tpl, &b, cx.tick)?;
                    cx.effects.functions.push(cx.kb.function_log().len() as u64);
                }
            }
            Ok(())
        });
        r.register("elaborate", |cx| {
            let name = cx.param_text("plan")?.to_string();
            let plan = cx
                .reg
                .plans
                .get(&name)
                .ok_or_else(|| Error::Invalid(format!("unknown elaboration plan `{name}`")))?;
            let out = crate::elaboration::elaborate(cx.kb, &cx.reg.transformations, plan, cx.tick)?;
            cx.effects.functions.extend(out.log_entries);
            Ok(())
        });
        r
    }
}

pub type ParadigmFn = Arc<
    dyn Fn(&Registry, &mut KnowledgeBase, &[&Rule], &mut WorkingMemory, &ChainOptions) -> Result<ChainResult>
        + Send
        + Sync,
>;

/// Reasoning paradigms runnable by the `rules` operation. Plugins share
/// the forward-chaining signature.
#[derive(Clone, Default)]
pub struct ParadigmRegistry(BTreeMap<String, ParadigmFn>);

impl fmt::Debug for ParadigmRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.keys()).finish()
    }
}

impl ParadigmRegistry {
    pub fn with_builtins() -> Self {
        let mut r = ParadigmRegistry::default();
        r.register("forward-chaining", forward_chain);
        r
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        f: impl Fn(&Registry, &mut KnowledgeBase, &[&Rule], &mut WorkingMemory, &ChainOptions) -> Result<ChainResult>
            + Send
            + Sync
            + 'static,
    ) {
        self.0.insert(name.into(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&ParadigmFn> {
        self.0.get(name)
    }
}

/// Runs one responder of `ks`. Returns false when its trigger condition
/// does not hold. Mutations are attributed to `KS.responder`, and the run
/// is recorded in the function log.
#[allow(clippy::too_many_arguments)]
pub fn run_responder(
    reg: &Registry,
    kb: &mut KnowledgeBase,
    wm: &mut WorkingMemory,
    ks: &str,
    responder: &str,
    tick: Tick,
    env: &Env,
    effects: &mut Effects,
) -> Result<bool> {
    let binding = kb
        .require_ks(ks)?
        .responder(responder)
        .cloned()
        .ok_or_else(|| Error::UnknownResponder {
            ks: ks.to_string(),
            responder: responder.to_string(),
        })?;
    let mut env = env.clone();
    env.insert("self".into(), SlotValue::Ref(ks.to_string()));
    if let Some(trigger) = &binding.trigger {
        let ok = EvalCtx::new(kb, &env, tick)
            .functions(&reg.functions)
            .eval_bool(trigger.expr())?;
        if !ok {
            return Ok(false);
        }
    }
    let op = reg
        .operations
        .get(&binding.op)
        .ok_or_else(|| Error::UnknownOperation(binding.op.clone()))?
        .clone();
    let before = kb.pending_pulses().len();
    let cause = format!("{ks}.{responder}");
    kb.attributed(tick, cause, |kb| {
        let mut cx = OpCtx {
            reg,
            kb,
            wm,
            ks,
            responder: &binding,
            tick,
            env: &env,
            effects,
        };
        op(&mut cx)
    })?;
    let outputs: Vec<(String, SlotValue)> = kb.pending_pulses()[before.min(kb.pending_pulses().len())..]
        .iter()
        .filter_map(|p| p.new.value().map(|v| (format!("{}/{}", p.source, p.path), v.clone())))
        .collect();
    let seq = kb.log_function(FunctionLogEntry {
        seq: 0,
        function: format!("{ks}.{responder}"),
        kind: "responder".into(),
        subject: ks.to_string(),
        inputs: binding.params.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        outputs,
        output_ks: Vec::new(),
        tick,
    });
    effects.functions.push(seq);
    Ok(true)
}
