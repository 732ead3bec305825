//! Condition expression language shared by relations, attractors, forks,
//! rule patterns and computed responders.

mod eval;
mod parse;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use eval::{Env, EvalCtx, FunctionTable, NativeFn, ReadMode, BUILTINS};
pub use parse::{parse_expr, BinOp, Expr, ExprKind};

use crate::error::Result;

/// A parsed expression that remembers its source text. Equality and
/// serialization go through the source.
#[derive(Clone)]
pub struct Condition {
    source: String,
    expr: Expr,
}

impl Condition {
    pub fn parse(source: &str) -> Result<Self> {
        Ok(Condition {
            source: source.to_string(),
            expr: parse_expr(source)?,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl PartialEq for Condition {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl fmt::Debug for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Condition({:?})", self.source)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for Condition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Condition::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::model::{KnowledgeBase, KnowledgeSource, SlotValue};

    fn kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        kb.add_cloud("C").unwrap();
        kb.put_ks(
            KnowledgeSource::new("a")
                .with_slot("pos", SlotValue::pair(0.0, 0.0))
                .with_slot("n", 5.0)
                .with_slot("name", "alpha"),
            "C",
        )
        .unwrap();
        kb.put_ks(
            KnowledgeSource::new("b").with_slot("pos", SlotValue::pair(3.0, 4.0)),
            "C",
        )
        .unwrap();
        kb
    }

    fn eval(src: &str) -> Result<SlotValue> {
        let kb = kb();
        let mut env = Env::new();
        env.insert("source".into(), SlotValue::reference("a"));
        env.insert("target".into(), SlotValue::reference("b"));
        env.insert("?x".into(), SlotValue::num(2.0));
        let ctx = EvalCtx::new(&kb, &env, 10);
        ctx.eval(&parse_expr(src)?)
    }

    #[test]
    fn distance_three_four_five() {
        assert_eq!(eval("distance(source.pos, target.pos)").unwrap(), SlotValue::num(5.0));
        assert_eq!(
            eval("distance(source.pos, target.pos) < 10").unwrap(),
            SlotValue::Bool(true)
        );
    }

    #[test]
    fn short_circuit_skips_errors() {
        assert_eq!(eval("false and nosuch.slot == 1").unwrap(), SlotValue::Bool(false));
        assert_eq!(eval("true or 1 == 'x'").unwrap(), SlotValue::Bool(true));
    }

    #[test]
    fn type_mismatch_is_an_error() {
        assert!(matches!(eval("source.n == 'five'"), Err(Error::TypeMismatch { .. })));
        assert!(matches!(eval("source.n and true"), Err(Error::TypeMismatch { .. })));
        assert!(matches!(eval("source.name < 3"), Err(Error::TypeMismatch { .. })));
    }

    #[test]
    fn missing_paths() {
        assert!(matches!(eval("source.nothing"), Err(Error::Unresolvable { .. })));
        assert!(matches!(eval("ghost.x"), Err(Error::UnknownPath(_))));
        assert!(matches!(eval("?y + 1"), Err(Error::UnboundVariable(_))));
        assert_eq!(eval("exists(source.nothing)").unwrap(), SlotValue::Bool(false));
        assert_eq!(eval("exists(source.n)").unwrap(), SlotValue::Bool(true));
    }

    #[test]
    fn appellation_pseudo_slot_and_bare_names() {
        assert_eq!(eval("source.appellation == a").unwrap(), SlotValue::Bool(true));
        assert_eq!(eval("a.name").unwrap(), SlotValue::text("alpha"));
        assert_eq!(eval("@a/n").unwrap(), SlotValue::num(5.0));
    }

    #[test]
    fn arithmetic_and_builtins() {
        assert_eq!(eval("?x * 3 - 1").unwrap(), SlotValue::num(5.0));
        assert_eq!(eval("min(3, source.n - 1)").unwrap(), SlotValue::num(3.0));
        assert_eq!(eval("max(0, 5 - source.n)").unwrap(), SlotValue::num(0.0));
        assert_eq!(eval("elapsed_since(4)").unwrap(), SlotValue::num(6.0));
        assert_eq!(eval("if(?x > 1, 'big', 'small')").unwrap(), SlotValue::text("big"));
        assert_eq!(eval("'a' + 'b'").unwrap(), SlotValue::text("ab"));
        assert!(matches!(eval("1 / 0"), Err(Error::Arithmetic(_))));
        assert!(matches!(eval("nosuchfn(1)"), Err(Error::UnknownFunction(_))));
    }

    #[test]
    fn reads_are_recorded() {
        let kb = kb();
        let env = Env::new();
        let ctx = EvalCtx::new(&kb, &env, 0);
        ctx.eval(&parse_expr("a.n + 1").unwrap()).unwrap();
        let reads: Vec<String> = ctx.take_reads().iter().map(|p| p.to_string()).collect();
        assert_eq!(reads, vec!["a/n"]);
    }
}
