use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Ordered slot map. Insertion order is kept so documents serialize back
/// in the order they were written.
pub type SlotMap = IndexMap<String, SlotValue>;

/// A slot filler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotValue {
    Text(String),
    Number {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
    },
    Bool(bool),
    /// Appellation of another knowledge source.
    Ref(String),
    List(Vec<SlotValue>),
    Map(SlotMap),
}

impl SlotValue {
    pub fn text(s: impl Into<String>) -> Self {
        SlotValue::Text(s.into())
    }

    pub fn num(value: f64) -> Self {
        SlotValue::Number { value, unit: None }
    }

    pub fn with_unit(value: f64, unit: impl Into<String>) -> Self {
        SlotValue::Number {
            value,
            unit: Some(unit.into()),
        }
    }

    pub fn reference(s: impl Into<String>) -> Self {
        SlotValue::Ref(s.into())
    }

    pub fn pair(a: f64, b: f64) -> Self {
        SlotValue::List(vec![SlotValue::num(a), SlotValue::num(b)])
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            SlotValue::Number { value, .. } => Some(*value),
            _ => None,
        }
    }

    /// Text and references both expose their string.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            SlotValue::Text(s) | SlotValue::Ref(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            SlotValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SlotValue]> {
        match self {
            SlotValue::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&SlotMap> {
        match self {
            SlotValue::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_scalar(&self) -> bool {
        !matches!(self, SlotValue::Map(_))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            SlotValue::Text(_) => "text",
            SlotValue::Number { .. } => "number",
            SlotValue::Bool(_) => "boolean",
            SlotValue::Ref(_) => "reference",
            SlotValue::List(_) => "list",
            SlotValue::Map(_) => "map",
        }
    }

    /// Equality used by conditions and pattern unification: units are
    /// annotations and do not take part, text and references compare by
    /// their string.
    pub fn loosely_equals(&self, other: &SlotValue) -> bool {
        match (self, other) {
            (SlotValue::Number { value: a, .. }, SlotValue::Number { value: b, .. }) => a == b,
            (a, b) if a.as_str().is_some() && b.as_str().is_some() => a.as_str() == b.as_str(),
            (SlotValue::Bool(a), SlotValue::Bool(b)) => a == b,
            (SlotValue::List(a), SlotValue::List(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.loosely_equals(y))
            }
            (SlotValue::Map(a), SlotValue::Map(b)) => {
                a.len() == b.len() && a.iter().all(|(k, v)| b.get(k).is_some_and(|w| v.loosely_equals(w)))
            }
            _ => false,
        }
    }

    /// Canonical text such that values that are `loosely_equals` get the
    /// same key (NaN aside).
    pub(crate) fn loose_key(&self, out: &mut String) {
        use std::fmt::Write;
        match self {
            SlotValue::Number { value, .. } => {
                let v = if *value == 0.0 { 0.0 } else { *value };
                let _ = write!(out, "n{v:?}");
            }
            SlotValue::Text(s) | SlotValue::Ref(s) => {
                let _ = write!(out, "s{}:{s}", s.len());
            }
            SlotValue::Bool(b) => out.push(if *b { 'T' } else { 'F' }),
            SlotValue::List(items) => {
                out.push('[');
                for i in items {
                    i.loose_key(out);
                    out.push(',');
                }
                out.push(']');
            }
            SlotValue::Map(m) => {
                let mut keys: Vec<&String> = m.keys().collect();
                keys.sort();
                out.push('{');
                for k in keys {
                    let _ = write!(out, "{}:{k}=", k.len());
                    m[k].loose_key(out);
                    out.push(',');
                }
                out.push('}');
            }
        }
    }

    /// Depth of nested maps and lists; scalars are depth 0.
    pub fn depth(&self) -> usize {
        match self {
            SlotValue::List(items) => 1 + items.iter().map(|v| v.depth()).max().unwrap_or(0),
            SlotValue::Map(m) => 1 + m.values().map(|v| v.depth()).max().unwrap_or(0),
            _ => 0,
        }
    }
}

impl From<f64> for SlotValue {
    fn from(v: f64) -> Self {
        SlotValue::num(v)
    }
}

impl From<i64> for SlotValue {
    fn from(v: i64) -> Self {
        SlotValue::num(v as f64)
    }
}

impl From<bool> for SlotValue {
    fn from(v: bool) -> Self {
        SlotValue::Bool(v)
    }
}

impl From<&str> for SlotValue {
    fn from(v: &str) -> Self {
        SlotValue::Text(v.to_string())
    }
}

impl From<String> for SlotValue {
    fn from(v: String) -> Self {
        SlotValue::Text(v)
    }
}

impl fmt::Display for SlotValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotValue::Text(s) => write!(f, "{s:?}"),
            SlotValue::Number { value, unit: None } => write!(f, "{value}"),
            SlotValue::Number { value, unit: Some(u) } => write!(f, "{value} {u:?}"),
            SlotValue::Bool(b) => write!(f, "{b}"),
            SlotValue::Ref(r) => write!(f, "{r}"),
            SlotValue::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            SlotValue::Map(m) => {
                f.write_str("{")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k} = {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Renders a value for human-facing text (explains, narratives): text is
/// printed without quotes.
pub fn render_plain(v: &SlotValue) -> String {
    match v {
        SlotValue::Text(s) => s.clone(),
        SlotValue::Number { value, unit: None } => format!("{value}"),
        SlotValue::Number { value, unit: Some(u) } => format!("{value} {u}"),
        other => other.to_string(),
    }
}
