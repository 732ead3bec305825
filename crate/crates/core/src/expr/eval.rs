use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::parse::{BinOp, Expr, ExprKind};
use crate::drel;
use crate::error::{Error, Result};
use crate::model::{lookup, KLinePath, KnowledgeBase, SlotPath, SlotValue, Tick};

/// Name → value bindings. Roles (`source`, `self`) are stored under their
/// bare name, pattern variables under `?name`.
pub type Env = BTreeMap<String, SlotValue>;

pub type NativeFn = Arc<dyn Fn(&[SlotValue]) -> Result<SlotValue> + Send + Sync>;

/// User functions callable from expressions (e.g. `CalculateDice`).
#[derive(Clone, Default)]
pub struct FunctionTable(BTreeMap<String, NativeFn>);

impl FunctionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        f: impl Fn(&[SlotValue]) -> Result<SlotValue> + Send + Sync + 'static,
    ) {
        self.0.insert(name.into(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&NativeFn> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }
}

impl fmt::Debug for FunctionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.keys()).finish()
    }
}

/// Builtins handled by the evaluator itself.
pub const BUILTINS: &[&str] = &["distance", "elapsed_since", "exists", "if", "min", "max", "abs", "len"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadMode {
    /// Only values stored on the knowledge source itself.
    Local,
    /// Local values, falling back to dynamic relations.
    Inherit,
}

/// Read-only evaluation context.
pub struct EvalCtx<'a> {
    pub kb: &'a KnowledgeBase,
    pub env: &'a Env,
    pub clock: Tick,
    pub mode: ReadMode,
    pub functions: Option<&'a FunctionTable>,
    reads: RefCell<BTreeSet<KLinePath>>,
    track: bool,
}

impl<'a> EvalCtx<'a> {
    pub fn new(kb: &'a KnowledgeBase, env: &'a Env, clock: Tick) -> Self {
        EvalCtx {
            kb,
            env,
            clock,
            mode: ReadMode::Inherit,
            functions: None,
            reads: RefCell::new(BTreeSet::new()),
            track: true,
        }
    }

    /// Skips recording reads, for evaluations nobody will ask about.
    pub fn untracked(mut self) -> Self {
        self.track = false;
        self
    }

    pub fn mode(mut self, mode: ReadMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn functions(mut self, functions: &'a FunctionTable) -> Self {
        self.functions = Some(functions);
        self
    }

    /// Slot paths read so far, as knowledge-source rooted klines.
    pub fn take_reads(&self) -> BTreeSet<KLinePath> {
        std::mem::take(&mut self.reads.borrow_mut())
    }

    pub fn eval_bool(&self, e: &Expr) -> Result<bool> {
        match self.eval(e)? {
            SlotValue::Bool(b) => Ok(b),
            other => Err(Error::TypeMismatch {
                position: e.pos,
                detail: format!("expected boolean, found {}", other.type_name()),
            }),
        }
    }

    pub fn read_slot(&self, ks: &str, path: &[String]) -> Result<SlotValue> {
        let Some(frame) = self.kb.ks(ks) else {
            return Err(Error::UnknownPath(format!("{ks}/{}", path.join("/"))));
        };
        if path.len() == 1 && path[0] == "appellation" {
            return Ok(SlotValue::Text(ks.to_string()));
        }
        // local values need no relation lookup
        let local = lookup(&frame.slots, path);
        if local.is_some() && !self.track {
            return Ok(local.cloned().expect("checked"));
        }
        let sp = SlotPath::new(path.iter().cloned())?;
        let v = match (local, self.mode) {
            (Some(v), _) => v.clone(),
            (None, ReadMode::Local) => {
                return Err(Error::Unresolvable {
                    ks: ks.to_string(),
                    path: sp.to_string(),
                })
            }
            (None, ReadMode::Inherit) => drel::resolve_attribute(self.kb, ks, &sp, self.clock)?.0,
        };
        if self.track {
            self.reads.borrow_mut().insert(KLinePath::of_slot(ks, &sp));
        }
        Ok(v)
    }

    fn read_kline(&self, path: &KLinePath) -> Result<SlotValue> {
        let segs = path.segments();
        if segs.len() > 1 && self.kb.ks(&segs[0]).is_some() {
            return self.read_slot(&segs[0], &segs[1..]);
        }
        let (ks, sp) = crate::ksynth::kline::locate(self.kb, path)?;
        self.read_slot(ks, sp.segments())
    }

    pub fn eval(&self, e: &Expr) -> Result<SlotValue> {
        match &e.kind {
            ExprKind::Lit(v) => Ok(v.clone()),
            ExprKind::List(items) => Ok(SlotValue::List(
                items.iter().map(|i| self.eval(i)).collect::<Result<_>>()?,
            )),
            ExprKind::KLine(p) => self.read_kline(p),
            ExprKind::Ref {
                head,
                is_var,
                path,
                key,
            } => match self.env.get(key) {
                Some(v) if path.is_empty() => Ok(v.clone()),
                Some(v) => match v.as_str() {
                    Some(ks) => self.read_slot(ks, path),
                    None => Err(Error::TypeMismatch {
                        position: e.pos,
                        detail: format!("`{key}` is a {}, not a knowledge source reference", v.type_name()),
                    }),
                },
                None if *is_var => Err(Error::UnboundVariable(head.clone())),
                None if path.is_empty() => Ok(SlotValue::Ref(head.clone())),
                None => self.read_slot(head, path),
            },
            ExprKind::Not(inner) => Ok(SlotValue::Bool(!self.eval_bool(inner)?)),
            ExprKind::Neg(inner) => {
                let v = self.eval(inner)?;
                let n = number(&v, inner.pos)?;
                Ok(SlotValue::num(-n))
            }
            ExprKind::Binary(op, l, r) => self.binary(*op, l, r, e.pos),
            ExprKind::Call(name, args) => self.call(name, args, e.pos),
        }
    }

    fn binary(&self, op: BinOp, l: &Expr, r: &Expr, pos: usize) -> Result<SlotValue> {
        match op {
            BinOp::And => {
                if !self.eval_bool(l)? {
                    return Ok(SlotValue::Bool(false));
                }
                return Ok(SlotValue::Bool(self.eval_bool(r)?));
            }
            BinOp::Or => {
                if self.eval_bool(l)? {
                    return Ok(SlotValue::Bool(true));
                }
                return Ok(SlotValue::Bool(self.eval_bool(r)?));
            }
            _ => {}
        }
        let a = self.eval(l)?;
        let b = self.eval(r)?;
        let mismatch = || Error::TypeMismatch {
            position: pos,
            detail: format!("`{}` between {} and {}", op.symbol(), a.type_name(), b.type_name()),
        };
        match op {
            BinOp::Eq | BinOp::Ne => {
                if family(&a) != family(&b) {
                    return Err(mismatch());
                }
                let eq = a.loosely_equals(&b);
                Ok(SlotValue::Bool(if op == BinOp::Eq { eq } else { !eq }))
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let ord = match (&a, &b) {
                    (SlotValue::Number { value: x, .. }, SlotValue::Number { value: y, .. }) => {
                        x.partial_cmp(y).ok_or_else(mismatch)?
                    }
                    _ => match (a.as_str(), b.as_str()) {
                        (Some(x), Some(y)) => x.cmp(y),
                        _ => return Err(mismatch()),
                    },
                };
                use std::cmp::Ordering::*;
                let res = match op {
                    BinOp::Lt => ord == Less,
                    BinOp::Le => ord != Greater,
                    BinOp::Gt => ord == Greater,
                    _ => ord != Less,
                };
                Ok(SlotValue::Bool(res))
            }
            BinOp::Add => match (&a, &b) {
                (SlotValue::Number { value: x, .. }, SlotValue::Number { value: y, .. }) => Ok(SlotValue::num(x + y)),
                (SlotValue::Text(x), SlotValue::Text(y)) => Ok(SlotValue::Text(format!("{x}{y}"))),
                _ => Err(mismatch()),
            },
            BinOp::Sub | BinOp::Mul | BinOp::Div => {
                let (x, y) = match (&a, &b) {
                    (SlotValue::Number { value: x, .. }, SlotValue::Number { value: y, .. }) => (*x, *y),
                    _ => return Err(mismatch()),
                };
                Ok(SlotValue::num(match op {
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    _ => {
                        if y == 0.0 {
                            return Err(Error::Arithmetic(format!("division by zero at offset {pos}")));
                        }
                        x / y
                    }
                }))
            }
            BinOp::And | BinOp::Or => unreachable!(),
        }
    }

    fn call(&self, name: &str, args: &[Expr], pos: usize) -> Result<SlotValue> {
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::TypeMismatch {
                    position: pos,
                    detail: format!("{name}() takes {n} arguments, got {}", args.len()),
                })
            }
        };
        match name {
            "if" => {
                arity(3)?;
                if self.eval_bool(&args[0])? {
                    self.eval(&args[1])
                } else {
                    self.eval(&args[2])
                }
            }
            "exists" => {
                arity(1)?;
                match self.eval(&args[0]) {
                    Ok(_) => Ok(SlotValue::Bool(true)),
                    Err(Error::Unresolvable { .. } | Error::UnknownPath(_)) => Ok(SlotValue::Bool(false)),
                    Err(e) => Err(e),
                }
            }
            _ => {
                let vals = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>>>()?;
                match name {
                    "distance" => {
                        arity(2)?;
                        let a = coords(&vals[0], args[0].pos)?;
                        let b = coords(&vals[1], args[1].pos)?;
                        if a.len() != b.len() {
                            return Err(Error::TypeMismatch {
                                position: pos,
                                detail: format!("distance between {}-d and {}-d points", a.len(), b.len()),
                            });
                        }
                        let d2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
                        Ok(SlotValue::num(d2.sqrt()))
                    }
                    "elapsed_since" => {
                        arity(1)?;
                        let t = number(&vals[0], args[0].pos)?;
                        Ok(SlotValue::num(self.clock as f64 - t))
                    }
                    "min" | "max" if !vals.is_empty() => {
                        let mut best = number(&vals[0], args[0].pos)?;
                        for (v, a) in vals.iter().zip(args).skip(1) {
                            let n = number(v, a.pos)?;
                            best = if name == "min" { best.min(n) } else { best.max(n) };
                        }
                        Ok(SlotValue::num(best))
                    }
                    "abs" => {
                        arity(1)?;
                        Ok(SlotValue::num(number(&vals[0], args[0].pos)?.abs()))
                    }
                    "len" => {
                        arity(1)?;
                        match &vals[0] {
                            SlotValue::List(l) => Ok(SlotValue::num(l.len() as f64)),
                            SlotValue::Map(m) => Ok(SlotValue::num(m.len() as f64)),
                            SlotValue::Text(s) => Ok(SlotValue::num(s.chars().count() as f64)),
                            other => Err(Error::TypeMismatch {
                                position: args[0].pos,
                                detail: format!("len() of {}", other.type_name()),
                            }),
                        }
                    }
                    _ => match self.functions.and_then(|f| f.get(name)) {
                        Some(f) => f(&vals),
                        None => Err(Error::UnknownFunction(name.to_string())),
                    },
                }
            }
        }
    }
}

#[derive(PartialEq)]
enum Family {
    Number,
    Str,
    Bool,
    List,
    Map,
}

fn family(v: &SlotValue) -> Family {
    match v {
        SlotValue::Number { .. } => Family::Number,
        SlotValue::Text(_) | SlotValue::Ref(_) => Family::Str,
        SlotValue::Bool(_) => Family::Bool,
        SlotValue::List(_) => Family::List,
        SlotValue::Map(_) => Family::Map,
    }
}

fn number(v: &SlotValue, pos: usize) -> Result<f64> {
    v.as_number().ok_or_else(|| Error::TypeMismatch {
        position: pos,
        detail: format!("expected number, found {}", v.type_name()),
    })
}

fn coords(v: &SlotValue, pos: usize) -> Result<Vec<f64>> {
    let items = v.as_list().ok_or_else(|| Error::TypeMismatch {
        position: pos,
        detail: format!("expected coordinate list, found {}", v.type_name()),
    })?;
    items.iter().map(|i| number(i, pos)).collect()
}
