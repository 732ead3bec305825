//! Lines of thought: explicit, ordered reasoning paths with forks.

mod kline;
mod run;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Condition;
use crate::model::SlotValue;

pub use kline::{reinforce_kline, select_kline, KLineWeights};
pub use run::{chain_lots, run_lot, LotOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineOfThought {
    pub name: String,
    pub steps: Vec<Step>,
    pub juncture_links: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// Knowledge source activated by the step.
    pub target: String,
    pub action: StepAction,
    pub fork: Option<Fork>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    /// Activation only: the step is recorded, nothing runs.
    None,
    Responder(String),
    RuleSet(String),
}

impl StepAction {
    pub fn label(&self) -> String {
        match self {
            StepAction::None => "activate".to_string(),
            StepAction::Responder(r) => format!("responder {r}"),
            StepAction::RuleSet(s) => format!("rules {s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fork {
    pub name: String,
    pub predicate: ForkPredicate,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForkPredicate {
    /// Evaluated with `self` bound to the step's knowledge source.
    Expr(Condition),
    /// Runs a rule set and yields whether a fact named `fact` is in
    /// working memory afterwards.
    RuleSet { set: String, fact: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub label: String,
    /// `None` marks the default branch.
    pub when: Option<SlotValue>,
    pub target: BranchTarget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchTarget {
    Next,
    /// Zero-based step index within the same line of thought.
    Step(usize),
    /// Transfers control to another line of thought; the current one ends
    /// when the nested one does.
    Lot(String),
    Halt,
}

impl Fork {
    /// Branch selected for a predicate value: first exact match, then the
    /// default branch.
    pub fn select(&self, value: &SlotValue) -> Result<&Branch> {
        self.branches
            .iter()
            .find(|b| b.when.as_ref().is_some_and(|w| w.loosely_equals(value)))
            .or_else(|| self.branches.iter().find(|b| b.when.is_none()))
            .ok_or_else(|| Error::NoBranch {
                fork: self.name.clone(),
                value: value.to_string(),
            })
    }
}

impl LineOfThought {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Invalid(format!("line of thought `{}`: {msg}", self.name)));
        if self.steps.is_empty() {
            return bad("has no steps".into());
        }
        for (i, step) in self.steps.iter().enumerate() {
            let Some(fork) = &step.fork else { continue };
            let mut labels = BTreeSet::new();
            let mut defaults = 0;
            for b in &fork.branches {
                if !labels.insert(b.label.as_str()) {
                    return bad(format!("fork `{}` repeats branch `{}`", fork.name, b.label));
                }
                if b.when.is_none() {
                    defaults += 1;
                }
                if let BranchTarget::Step(j) = b.target {
                    if j >= self.steps.len() {
                        return bad(format!(
                            "step {} branch `{}` jumps to missing step {}",
                            i + 1,
                            b.label,
                            j + 1
                        ));
                    }
                }
            }
            if fork.branches.is_empty() {
                return bad(format!("fork `{}` has no branches", fork.name));
            }
            if defaults > 1 {
                return bad(format!("fork `{}` has several default branches", fork.name));
            }
        }
        Ok(())
    }

    /// Knowledge sources in step order.
    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.target.as_str())
    }
}
