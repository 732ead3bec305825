//! Cloud elaboration: typed transformation functions that derive a new
//! cloud of knowledge sources from an existing one.

mod builtins;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::drel;
use crate::error::{Error, Result};
use crate::model::{FunctionLogEntry, KnowledgeBase, KnowledgeSource, SlotMap, SlotPath, SlotValue, Tick};

pub use builtins::builtin_transformations;

/// The closed vocabulary of transformation kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FnType {
    Augmentation,
    Calculation,
    Inference,
    Classification,
    Prediction,
    PatternRecognition,
}

impl FnType {
    pub const ALL: [FnType; 6] = [
        FnType::Augmentation,
        FnType::Calculation,
        FnType::Inference,
        FnType::Classification,
        FnType::Prediction,
        FnType::PatternRecognition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FnType::Augmentation => "Augmentation",
            FnType::Calculation => "Calculation",
            FnType::Inference => "Inference",
            FnType::Classification => "Classification",
            FnType::Prediction => "Prediction",
            FnType::PatternRecognition => "Pattern Recognition",
        }
    }
}

impl fmt::Display for FnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FnType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| !matches!(c, ' ' | '_' | '-')).collect();
        FnType::ALL
            .into_iter()
            .find(|t| t.name().replace(' ', "").eq_ignore_ascii_case(&norm))
            .ok_or_else(|| Error::InvalidFnType(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDecl {
    pub path: SlotPath,
    pub optional: bool,
}

/// Input values handed to a function body. Reading a path the function
/// did not declare is an error, so logged inputs are always complete.
pub struct Inputs<'a> {
    function: &'a str,
    declared: &'a [InputDecl],
    values: BTreeMap<String, SlotValue>,
}

impl Inputs<'_> {
    fn check(&self, path: &str) -> Result<()> {
        if self.declared.iter().any(|d| d.path.to_string() == path) {
            Ok(())
        } else {
            Err(Error::UndeclaredInput {
                function: self.function.to_string(),
                path: path.to_string(),
            })
        }
    }

    /// Value of an optional input, `None` when it was not available.
    pub fn opt(&self, path: &str) -> Result<Option<&SlotValue>> {
        self.check(path)?;
        Ok(self.values.get(path))
    }

    pub fn get(&self, path: &str) -> Result<&SlotValue> {
        self.opt(path)?.ok_or_else(|| Error::MissingInput {
            ks: String::new(),
            path: path.to_string(),
        })
    }

    pub fn number(&self, path: &str) -> Result<f64> {
        self.get(path)?
            .as_number()
            .ok_or_else(|| Error::NonNumericValue(path.to_string()))
    }

    pub fn numbers(&self, path: &str) -> Result<Vec<f64>> {
        let v = self.get(path)?;
        v.as_list()
            .and_then(|l| l.iter().map(SlotValue::as_number).collect::<Option<Vec<_>>>())
            .ok_or_else(|| Error::NonNumericValue(path.to_string()))
    }

    pub fn text(&self, path: &str) -> Result<&str> {
        let v = self.get(path)?;
        v.as_str()
            .ok_or_else(|| Error::Invalid(format!("input `{path}` is not text")))
    }
}

/// What a function body produces: output slots and an optional remark
/// appended to the generated explanation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FnOutput {
    pub slots: SlotMap,
    pub note: Option<String>,
}

impl FnOutput {
    pub fn slot(mut self, name: &str, value: impl Into<SlotValue>) -> Self {
        self.slots.insert(name.to_string(), value.into());
        self
    }
}

pub type FnBody = Arc<dyn Fn(&Inputs<'_>) -> Result<FnOutput> + Send + Sync>;

#[derive(Clone)]
pub struct TransformationFn {
    pub name: String,
    pub fn_type: FnType,
    pub inputs: Vec<InputDecl>,
    /// Appellation of the generated knowledge source.
    pub output_ks: String,
    pub body: FnBody,
}

impl fmt::Debug for TransformationFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformationFn")
            .field("name", &self.name)
            .field("fn_type", &self.fn_type)
            .field("inputs", &self.inputs)
            .field("output_ks", &self.output_ks)
            .finish()
    }
}

impl TransformationFn {
    /// `fn_type` is parsed against the six kinds.
    pub fn new(
        name: &str,
        fn_type: &str,
        output_ks: &str,
        inputs: &[&str],
        body: impl Fn(&Inputs<'_>) -> Result<FnOutput> + Send + Sync + 'static,
    ) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| {
                let (p, optional) = match p.strip_suffix('?') {
                    Some(p) => (p, true),
                    None => (*p, false),
                };
                Ok(InputDecl {
                    path: SlotPath::parse(p)?,
                    optional,
                })
            })
            .collect::<Result<_>>()?;
        Ok(TransformationFn {
            name: name.to_string(),
            fn_type: fn_type.parse()?,
            inputs,
            output_ks: output_ks.to_string(),
            body: Arc::new(body),
        })
    }

    fn run(&self, values: BTreeMap<String, SlotValue>) -> Result<FnOutput> {
        let inputs = Inputs {
            function: &self.name,
            declared: &self.inputs,
            values,
        };
        (self.body)(&inputs)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TransformationRegistry(BTreeMap<String, TransformationFn>);

impl TransformationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, f: TransformationFn) {
        self.0.insert(f.name.clone(), f);
    }

    pub fn get(&self, name: &str) -> Result<&TransformationFn> {
        self.0
            .get(name)
            .ok_or_else(|| Error::UnknownTransformation(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElaborationPlan {
    pub name: String,
    pub source_cloud: String,
    pub target_cloud: String,
    /// (source knowledge source, function) pairs, run in order.
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElaborationOutcome {
    pub target: String,
    pub outputs: Vec<String>,
    /// Function-log sequence numbers, one per output.
    pub log_entries: Vec<u64>,
}

/// Runs every pair of `plan` and commits the outputs into a new target
/// cloud. Nothing is written unless every function succeeds.
pub fn elaborate(
    kb: &mut KnowledgeBase,
    reg: &TransformationRegistry,
    plan: &ElaborationPlan,
    tick: Tick,
) -> Result<ElaborationOutcome> {
    if kb.cloud(&plan.source_cloud).is_none() {
        return Err(Error::UnknownCloud(plan.source_cloud.clone()));
    }
    let taken = |kb: &KnowledgeBase, n: &str| kb.cloud(n).is_some() || kb.ks(n).is_some();
    if taken(kb, &plan.target_cloud) {
        return Err(Error::OutputCollision(plan.target_cloud.clone()));
    }
    let members = kb.members_recursive(&plan.source_cloud);
    let mut staged: Vec<(KnowledgeSource, FunctionLogEntry)> = Vec::new();
    for (ks, fname) in &plan.pairs {
        if !members.contains(ks) {
            return Err(Error::UnknownKs(ks.clone()));
        }
        let f = reg.get(fname)?;
        if taken(kb, &f.output_ks) || staged.iter().any(|(o, _)| o.appellation == f.output_ks) {
            return Err(Error::OutputCollision(f.output_ks.clone()));
        }
        let mut values = BTreeMap::new();
        for d in &f.inputs {
            match drel::resolve_attribute(kb, ks, &d.path, tick) {
                Ok((v, _)) => {
                    values.insert(d.path.to_string(), v);
                }
                Err(Error::Unresolvable { .. }) if d.optional => {}
                Err(Error::Unresolvable { .. }) => {
                    return Err(Error::MissingInput {
                        ks: ks.clone(),
                        path: d.path.to_string(),
                    })
                }
                Err(e) => return Err(e),
            }
        }
        let out = f.run(values.clone()).map_err(|e| match e {
            Error::MissingInput { path, .. } => Error::MissingInput { ks: ks.clone(), path },
            other => other,
        })?;
        let used: Vec<&str> = values.keys().map(String::as_str).collect();
        let mut explains = format!(
            "{} ({}) derived from {} using {}",
            f.name,
            f.fn_type,
            ks,
            if used.is_empty() {
                "no inputs".to_string()
            } else {
                used.join(", ")
            }
        );
        if let Some(n) = &out.note {
            explains.push_str("; ");
            explains.push_str(n);
        }
        let mut oks = KnowledgeSource::new(&f.output_ks).with_explains(explains);
        oks.slots = out.slots.clone();
        let entry = FunctionLogEntry {
            seq: 0,
            function: f.name.clone(),
            kind: f.fn_type.name().to_string(),
            subject: ks.clone(),
            inputs: values.into_iter().collect(),
            outputs: out.slots.into_iter().collect(),
            output_ks: vec![f.output_ks.clone()],
            tick,
        };
        staged.push((oks, entry));
    }
    kb.add_cloud(&plan.target_cloud)?;
    let mut outcome = ElaborationOutcome {
        target: plan.target_cloud.clone(),
        outputs: Vec::new(),
        log_entries: Vec::new(),
    };
    for (oks, entry) in staged {
        outcome.outputs.push(oks.appellation.clone());
        kb.attributed(tick, format!("elaboration {}", plan.name), |kb| {
            kb.put_ks(oks, &plan.target_cloud)
        })?;
        outcome.log_entries.push(kb.log_function(entry));
    }
    Ok(outcome)
}

/// Re-runs a logged transformation from its recorded inputs and reports
/// whether it reproduces the recorded outputs.
pub fn replay_entry(reg: &TransformationRegistry, entry: &FunctionLogEntry) -> Result<bool> {
    let f = reg.get(&entry.function)?;
    let out = f.run(entry.inputs.iter().cloned().collect())?;
    let outputs: Vec<(String, SlotValue)> = out.slots.into_iter().collect();
    Ok(outputs == entry.outputs)
}
