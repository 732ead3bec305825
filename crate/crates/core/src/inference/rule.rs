use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Condition;
use crate::model::{SlotPath, SlotValue};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Var(String),
    Const(SlotValue),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Minimize,
    Maximize,
}

/// One antecedent element. Patterns are joined left to right; a variable
/// bound by an earlier pattern restricts later ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// Binds `var` to each knowledge source (optionally inside `cloud` and
    /// its sub-clouds) for which `cond` holds. A slot missing on a
    /// candidate makes that candidate a non-match.
    Ks {
        var: String,
        cloud: Option<String>,
        cond: Condition,
    },
    Fact {
        name: String,
        args: Vec<Term>,
    },
    /// Negation as absence.
    Absent {
        name: String,
        args: Vec<Term>,
    },
    Test(Condition),
    /// Keeps the single binding with the smallest (or largest) value of
    /// `expr`, ties going to the lowest bindings key, and binds that value
    /// to `var`.
    Aggregate {
        kind: Aggregate,
        expr: Condition,
        var: String,
    },
}

impl Pattern {
    /// Variables this pattern can bind.
    pub fn binds(&self) -> Vec<String> {
        match self {
            Pattern::Ks { var, .. } | Pattern::Aggregate { var, .. } => vec![var.clone()],
            Pattern::Fact { args, .. } => args
                .iter()
                .filter_map(|t| match t {
                    Term::Var(v) => Some(v.clone()),
                    Term::Const(_) => None,
                })
                .collect(),
            Pattern::Absent { .. } | Pattern::Test(_) => Vec::new(),
        }
    }

    /// Variables the pattern reads without binding them.
    fn uses(&self) -> Vec<String> {
        match self {
            Pattern::Ks { cond, .. } | Pattern::Test(cond) => cond.expr().variables(),
            Pattern::Aggregate { expr, .. } => expr.expr().variables(),
            Pattern::Absent { .. } | Pattern::Fact { .. } => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Assert {
        name: String,
        args: Vec<Term>,
    },
    SetSlot {
        var: String,
        path: SlotPath,
        expr: Condition,
    },
    Command {
        name: String,
        args: Vec<Condition>,
    },
    Invoke {
        var: String,
        responder: String,
    },
    Impulse(String),
    Halt,
}

impl Action {
    fn uses(&self) -> Vec<String> {
        match self {
            Action::Assert { args, .. } => args
                .iter()
                .filter_map(|t| match t {
                    Term::Var(v) => Some(v.clone()),
                    Term::Const(_) => None,
                })
                .collect(),
            Action::SetSlot { var, expr, .. } => {
                let mut v = expr.expr().variables();
                v.push(var.clone());
                v
            }
            Action::Command { args, .. } => args.iter().flat_map(|a| a.expr().variables()).collect(),
            Action::Invoke { var, .. } => vec![var.clone()],
            Action::Impulse(_) | Action::Halt => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub name: String,
    pub rule_set: String,
    pub patterns: Vec<Pattern>,
    pub actions: Vec<Action>,
    pub salience: i64,
}

impl Rule {
    pub fn new(name: impl Into<String>, rule_set: impl Into<String>) -> Self {
        Rule {
            name: name.into(),
            rule_set: rule_set.into(),
            patterns: Vec::new(),
            actions: Vec::new(),
            salience: 0,
        }
    }

    pub fn when(mut self, p: Pattern) -> Self {
        self.patterns.push(p);
        self
    }

    pub fn then(mut self, a: Action) -> Self {
        self.actions.push(a);
        self
    }

    pub fn salience(mut self, s: i64) -> Self {
        self.salience = s;
        self
    }

    /// Number of antecedent patterns.
    pub fn specificity(&self) -> usize {
        self.patterns.len()
    }

    /// Every variable used by a pattern or action must be bound by an
    /// earlier pattern. `globals` names variables supplied by the caller.
    pub fn validate(&self, globals: &[&str]) -> Result<()> {
        let mut bound: BTreeSet<String> = globals.iter().map(|g| g.to_string()).collect();
        for p in &self.patterns {
            // absent patterns may mention fresh variables: they are
            // existentially quantified inside the negation
            // a knowledge-source pattern tests its own variable
            if let Pattern::Ks { var, .. } = p {
                bound.insert(var.clone());
            }
            for v in p.uses() {
                if !bound.contains(&v) {
                    return Err(Error::UnboundVariable(format!("{v} in rule `{}`", self.name)));
                }
            }
            bound.extend(p.binds());
        }
        for a in &self.actions {
            for v in a.uses() {
                if !bound.contains(&v) {
                    return Err(Error::UnboundVariable(format!("{v} in rule `{}`", self.name)));
                }
            }
        }
        Ok(())
    }
}

/// All rules of a session, in definition order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleBase {
    rules: Vec<Rule>,
}

impl RuleBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, rule: Rule) -> Result<()> {
        if self.rules.iter().any(|r| r.name == rule.name) {
            return Err(Error::DuplicateAppellation(rule.name));
        }
        rule.validate(&[])?;
        self.rules.push(rule);
        Ok(())
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Rules of one set, in definition order.
    pub fn set(&self, name: &str) -> Result<Vec<&Rule>> {
        let rules: Vec<&Rule> = self.rules.iter().filter(|r| r.rule_set == name).collect();
        if rules.is_empty() {
            return Err(Error::UnknownRuleSet(name.to_string()));
        }
        Ok(rules)
    }

    pub fn set_names(&self) -> BTreeSet<&str> {
        self.rules.iter().map(|r| r.rule_set.as_str()).collect()
    }

    pub fn has_set(&self, name: &str) -> bool {
        self.rules.iter().any(|r| r.rule_set == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbound_consequent_variable_rejected() {
        let r = Rule::new("R", "S")
            .when(Pattern::Fact {
                name: "A".into(),
                args: vec![Term::Var("x".into())],
            })
            .then(Action::Assert {
                name: "B".into(),
                args: vec![Term::Var("y".into())],
            });
        assert!(matches!(r.validate(&[]), Err(Error::UnboundVariable(_))));
        let mut rb = RuleBase::new();
        assert!(rb.add(r).is_err());
    }

    #[test]
    fn globals_count_as_bound() {
        let r = Rule::new("R", "S").when(Pattern::Test(Condition::parse("?n > 1").unwrap()));
        assert!(r.validate(&[]).is_err());
        r.validate(&["n"]).unwrap();
    }
}
