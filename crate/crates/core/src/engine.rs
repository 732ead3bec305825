//! Session state: the knowledge base plus everything that is not slot
//! data (rules, templates, operations, limits) and the logical clock.

use std::collections::BTreeMap;

use crate::elaboration::{
    builtin_transformations, elaborate, ElaborationOutcome, ElaborationPlan, TransformationRegistry,
};
use crate::error::{Error, Result};
use crate::expr::FunctionTable;
use crate::inference::{
    dispatch, forward_chain, AnomalySpec, ChainOptions, ChainResult, DispatchOutcome, Event, GppbTemplate,
    OperationRegistry, ParadigmRegistry, RuleBase, WorkingMemory,
};
use crate::ksynth::Pack;
use crate::lot::{self, reinforce_kline, KLineWeights, LotOptions};
use crate::model::{KLinePath, KnowledgeBase, SlotValue, Tick};
use crate::trace::ReasoningTrace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Limits {
    /// Default cap on forward-chaining cycles per call.
    pub max_cycles: usize,
    /// Waves per dispatch cascade.
    pub cascade_depth: usize,
    /// Nested line-of-thought depth.
    pub lot_depth: usize,
    /// Steps executed per line of thought, counting jumps.
    pub step_limit: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_cycles: 10_000,
            cascade_depth: 32,
            lot_depth: 16,
            step_limit: 10_000,
        }
    }
}

/// Non-slot definitions a session runs against.
#[derive(Debug, Clone)]
pub struct Registry {
    pub rules: RuleBase,
    pub templates: BTreeMap<String, GppbTemplate>,
    /// Named template collections.
    pub assemblies: BTreeMap<String, Vec<String>>,
    pub anomalies: Vec<AnomalySpec>,
    pub plans: BTreeMap<String, ElaborationPlan>,
    pub functions: FunctionTable,
    pub operations: OperationRegistry,
    pub paradigms: ParadigmRegistry,
    pub transformations: TransformationRegistry,
    pub limits: Limits,
}

impl Default for Registry {
    fn default() -> Self {
        Registry {
            rules: RuleBase::new(),
            templates: BTreeMap::new(),
            assemblies: BTreeMap::new(),
            anomalies: Vec::new(),
            plans: BTreeMap::new(),
            functions: FunctionTable::new(),
            operations: OperationRegistry::with_builtins(),
            paradigms: ParadigmRegistry::with_builtins(),
            transformations: builtin_transformations(),
            limits: Limits::default(),
        }
    }
}

impl Registry {
    /// Builtins plus the definitions of a loaded pack.
    pub fn from_pack(pack: &Pack) -> Self {
        Registry {
            rules: pack.rules.clone(),
            templates: pack.templates.clone(),
            assemblies: pack.assemblies.clone(),
            anomalies: pack.anomalies.clone(),
            plans: pack.plans.clone(),
            ..Registry::default()
        }
    }
}

/// One reasoning session. Cloning gives an independent copy.
#[derive(Debug, Clone)]
pub struct Engine {
    pub kb: KnowledgeBase,
    pub registry: Registry,
    pub weights: KLineWeights,
    /// Next tick to hand out.
    pub clock: Tick,
}

impl Engine {
    pub fn new(kb: KnowledgeBase, registry: Registry) -> Self {
        Engine {
            kb,
            registry,
            weights: KLineWeights::default(),
            clock: 1,
        }
    }

    pub fn from_pack(pack: Pack) -> Self {
        let registry = Registry::from_pack(&pack);
        Engine::new(pack.kb, registry)
    }

    /// Parses KSYNTH text and builds a session from it.
    pub fn from_ksynth(text: &str) -> Result<Self> {
        Ok(Engine::from_pack(crate::ksynth::load_str(text)?))
    }

    fn advance(&mut self, trace: &ReasoningTrace) {
        self.clock = self.clock.max(trace.end_tick + 1);
    }

    pub fn run_lot(&mut self, lot: &str) -> Result<ReasoningTrace> {
        self.run_lot_with(lot, LotOptions::at(self.clock))
    }

    pub fn run_lot_with(&mut self, lot: &str, mut opts: LotOptions) -> Result<ReasoningTrace> {
        opts.clock = opts.clock.max(self.clock);
        let trace = lot::run_lot(&self.registry, &mut self.kb, lot, &opts)?;
        self.advance(&trace);
        Ok(trace)
    }

    pub fn chain_lots(&mut self, sequence: &[&str]) -> Result<ReasoningTrace> {
        let trace = lot::chain_lots(&self.registry, &mut self.kb, sequence, &LotOptions::at(self.clock))?;
        self.advance(&trace);
        Ok(trace)
    }

    /// Runs one rule set to quiescence at the next tick.
    pub fn forward_chain(&mut self, rule_set: &str, wm: &mut WorkingMemory) -> Result<ChainResult> {
        let rules = self.registry.rules.set(rule_set)?;
        let opts = ChainOptions::new(self.registry.limits.max_cycles, self.clock);
        let r = forward_chain(&self.registry, &mut self.kb, &rules, wm, &opts)?;
        self.clock += 1;
        Ok(r)
    }

    pub fn dispatch(&mut self, event: Event) -> Result<DispatchOutcome> {
        let out = dispatch(&self.registry, &mut self.kb, event, self.clock)?;
        self.clock += out.waves.max(1) as u64;
        for t in &out.traces {
            self.clock = self.clock.max(t.end_tick + 1);
        }
        Ok(out)
    }

    /// Writes a slot at the next tick and dispatches the resulting pulse.
    pub fn set_and_dispatch(&mut self, path: &KLinePath, value: SlotValue, cause: &str) -> Result<DispatchOutcome> {
        let (ks, sp) = self.kb.split_kline(path)?;
        let tick = self.clock;
        self.kb.attributed(tick, cause, |kb| kb.set_slot(&ks, &sp, value))?;
        self.clock += 1;
        let mut total = DispatchOutcome::default();
        for p in self.kb.take_pulses() {
            let out = self.dispatch(Event::Pulse(p))?;
            total.emitted.extend(out.emitted);
            total.effects.absorb(out.effects);
            total.traces.extend(out.traces);
            total.waves += out.waves;
        }
        Ok(total)
    }

    pub fn elaborate(&mut self, plan: &str) -> Result<ElaborationOutcome> {
        let p = self
            .registry
            .plans
            .get(plan)
            .ok_or_else(|| Error::Invalid(format!("unknown elaboration plan `{plan}`")))?
            .clone();
        let out = elaborate(&mut self.kb, &self.registry.transformations, &p, self.clock)?;
        self.clock += 1;
        Ok(out)
    }

    /// Reads a kline path, optionally under the assumptions of a dimension.
    pub fn query(&self, path: &KLinePath, dimension: Option<&str>) -> Result<SlotValue> {
        let dim = match dimension {
            Some(d) => Some(
                self.kb
                    .dimension(d)
                    .ok_or_else(|| Error::UnknownDimension(d.to_string()))?,
            ),
            None => None,
        };
        crate::ksynth::kline::resolve_kline_at(&self.kb, path, dim, self.clock)
    }

    pub fn reinforce(&mut self, trace: &ReasoningTrace) {
        self.weights = reinforce_kline(&self.weights, trace);
    }
}
