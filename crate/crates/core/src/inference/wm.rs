use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::model::SlotValue;

/// A transient assertion. Facts about knowledge-source slots are not
/// copied here: `match` patterns read the knowledge base directly, so that
/// projection is always current after a commit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub name: String,
    pub args: Vec<SlotValue>,
    /// Rule that asserted the fact; `None` for caller-supplied facts.
    pub origin: Option<String>,
}

impl Fact {
    pub fn new(name: impl Into<String>, args: Vec<SlotValue>) -> Self {
        Fact {
            name: name.into(),
            args,
            origin: None,
        }
    }
}

impl std::fmt::Display for Fact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.name, args.join(", "))
    }
}

fn first_key(name: &str, first: &SlotValue) -> String {
    let mut k = format!("{}:{name}|", name.len());
    first.loose_key(&mut k);
    k
}

fn key(name: &str, args: &[SlotValue]) -> String {
    let mut k = format!("{}:{name}", name.len());
    for a in args {
        k.push('|');
        a.loose_key(&mut k);
    }
    k
}

#[derive(Debug, Clone, Default)]
pub struct WorkingMemory {
    facts: Vec<Fact>,
    by_name: BTreeMap<String, Vec<usize>>,
    /// Facts by name and first argument, for joins on a bound variable.
    by_first: HashMap<String, Vec<usize>>,
    keys: HashSet<String>,
}

impl PartialEq for WorkingMemory {
    fn eq(&self, other: &Self) -> bool {
        self.facts == other.facts
    }
}

impl WorkingMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a fact unless an equal one is present. Returns whether it was new.
    pub fn assert(&mut self, fact: Fact) -> bool {
        if !self.keys.insert(key(&fact.name, &fact.args)) {
            return false;
        }
        self.by_name
            .entry(fact.name.clone())
            .or_default()
            .push(self.facts.len());
        if let Some(first) = fact.args.first() {
            self.by_first
                .entry(first_key(&fact.name, first))
                .or_default()
                .push(self.facts.len());
        }
        self.facts.push(fact);
        true
    }

    /// Shorthand for a caller-supplied fact.
    pub fn assert_fact(&mut self, name: &str, args: Vec<SlotValue>) -> bool {
        self.assert(Fact::new(name, args))
    }

    pub fn contains(&self, name: &str, args: &[SlotValue]) -> bool {
        self.keys.contains(&key(name, args))
    }

    pub fn has_name(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn named<'a>(&'a self, name: &str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.by_name.get(name).into_iter().flatten().map(|&i| &self.facts[i])
    }

    /// Facts named `name`, narrowed to those whose first argument loosely
    /// equals `first` when it is given.
    pub fn candidates<'a>(&'a self, name: &str, first: Option<&SlotValue>) -> Box<dyn Iterator<Item = &'a Fact> + 'a> {
        match first {
            None => Box::new(self.named(name)),
            Some(v) => Box::new(
                self.by_first
                    .get(&first_key(name, v))
                    .into_iter()
                    .flatten()
                    .map(|&i| &self.facts[i]),
            ),
        }
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Removes every fact with the given name.
    pub fn retract_all(&mut self, name: &str) {
        if self.by_name.remove(name).is_none() {
            return;
        }
        let facts = std::mem::take(&mut self.facts);
        self.by_name.clear();
        self.by_first.clear();
        self.keys.clear();
        for f in facts.into_iter().filter(|f| f.name != name) {
            self.assert(f);
        }
    }
}
