//! Recursive-descent parser for KSYNTH.
//!
//! ```text
//! document  := item*
//! item      := "use" STRING | "cloud" cloud | "lot" lot | "dimension" dim
//!            | "juncture" junc | "rule" rule | "template" tpl
//!            | "assembly" asm | "anomaly" anomaly | "elaborate" elab
//! cloud     := NAME "{" ("tag" NAME | "cloud" cloud | "ks" ks)* "}"
//! ks        := NAME "{" (slot | "explains" STRING | responder | attractor | drel)* "}"
//! slot      := "slot" NAME ("=" value | "{" slot* "}")
//! value     := STRING | NUMBER STRING? | "true" | "false" | NAME
//!            | "[" (value ("," value)*)? "]" | "{" (NAME "=" value ("," ...)*)? "}"
//! responder := "responder" NAME "{" ("op" NAME | "param" NAME "=" value | "when" STRING)* "}"
//! attractor := "attractor" "{" "on" path "when" STRING "run" NAME "}"
//! drel      := "drel" NAME "{" "from" NAME "share" path ("," path)* "when" STRING ("priority" NUMBER)? "}"
//! lot       := NAME "{" ("juncture" NAME | step)* "}"
//! step      := "step" NAME ("run" NAME | "rules" NAME)? fork?
//! fork      := "fork" NAME (STRING | "rules" NAME "fact" NAME) "{" branch* "}"
//! branch    := "branch" NAME ("=" value | "default") "->" ("next" | "step" NUMBER | "lot" NAME | "halt")
//! dim       := NAME "{" ("description" STRING | "juncture" NAME | "assume" path "=" value)* "}"
//! junc      := NAME "{" ("dimension" NAME | "lot" NAME)* "}"
//! rule      := NAME "{" ("set" NAME | "salience" NUMBER | pattern | "then" action)* "}"
//! pattern   := "match" VAR ("in" NAME)? STRING | "fact" NAME "(" terms ")"
//!            | "absent" NAME "(" terms ")" | "test" STRING
//!            | ("minimize" | "maximize") STRING "as" VAR
//! action    := "assert" NAME "(" terms ")" | "set" VAR path "=" STRING
//!            | "command" NAME "(" (STRING ("," STRING)*)? ")" | "invoke" VAR NAME
//!            | "impulse" NAME | "halt"
//! tpl       := NAME "{" (pattern | "bind" VAR "=" value
//!            | "output" "in" NAME "{" ("slot" path "=" STRING)* "}")* "}"
//! asm       := NAME "{" ("template" NAME)* "}"
//! anomaly   := NAME "{" "path" path "min" NUMBER "max" NUMBER ("impulse" NAME)? "}"
//! elab      := NAME "{" "from" NAME "into" NAME ("apply" NAME "to" NAME)* "}"
//! path      := NAME ("/" NAME)*
//! ```
//!
//! Keywords are contextual. Step numbers in branch targets are one-based.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{Diagnostic, DiagnosticKind, Span};
use crate::error::{Error, Result};
use crate::model::{is_slot_name, KLinePath, SlotMap, SlotPath, SlotValue};

/// Syntax-only parse.
pub fn parse_document(text: &str) -> Result<Document> {
    let toks = tokenize(text).map_err(|d| Error::Parse(vec![d]))?;
    let mut p = Parser { toks, i: 0 };
    p.document().map_err(|d| Error::Parse(vec![d]))
}

/// Parses a lone slot value such as `6.5 "NTU"`, `[1, 2]` or `"text"`.
pub fn parse_value(text: &str) -> Result<SlotValue> {
    let toks = tokenize(text).map_err(|d| Error::Parse(vec![d]))?;
    let mut p = Parser { toks, i: 0 };
    let v = p.value().map_err(|d| Error::Parse(vec![d]))?;
    if *p.peek() != Tok::Eof {
        return Err(Error::Parse(vec![p.error(&["end of input"])]));
    }
    Ok(v)
}

type PResult<T> = std::result::Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.i].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.i += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> Diagnostic {
        let mut d = Diagnostic::new(
            DiagnosticKind::SyntaxError,
            self.span(),
            format!("unexpected {}", self.peek().describe()),
        );
        d.expected = expected.iter().map(|s| s.to_string()).collect();
        d
    }

    fn invalid(&self, span: Span, msg: String) -> Diagnostic {
        Diagnostic::new(DiagnosticKind::SyntaxError, span, msg)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<Span> {
        if *self.peek() == t {
            Ok(self.bump().span)
        } else {
            Err(self.error(&[&t.describe()]))
        }
    }

    fn name(&mut self) -> PResult<Named> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok(Named { name, span })
            }
            _ => Err(self.error(&["name"])),
        }
    }

    fn var(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(v)
            }
            _ => Err(self.error(&["variable"])),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["string"])),
        }
    }

    fn expr_text(&mut self) -> PResult<ExprText> {
        let span = self.span();
        let source = self.string()?;
        Ok(ExprText { source, span })
    }

    fn number(&mut self) -> PResult<f64> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.error(&["number"])),
        }
    }

    fn integer(&mut self) -> PResult<i64> {
        let span = self.span();
        let n = self.number()?;
        if n.fract() != 0.0 {
            return Err(self.invalid(span, format!("expected an integer, found {n}")));
        }
        Ok(n as i64)
    }

    fn open(&mut self) -> PResult<()> {
        self.expect(Tok::LBrace).map(|_| ())
    }

    fn close(&mut self) -> bool {
        if *self.peek() == Tok::RBrace {
            self.bump();
            true
        } else {
            false
        }
    }

    fn path_segments(&mut self) -> PResult<(Vec<String>, Span)> {
        let first = self.name()?;
        let mut segs = vec![first.name];
        while *self.peek() == Tok::Slash {
            self.bump();
            segs.push(self.name()?.name);
        }
        Ok((segs, first.span))
    }

    fn kline(&mut self) -> PResult<(KLinePath, Span)> {
        let (segs, span) = self.path_segments()?;
        let p = KLinePath::new(segs.clone())
            .map_err(|_| self.invalid(span, format!("invalid path `{}`", segs.join("/"))))?;
        Ok((p, span))
    }

    fn slot_path(&mut self) -> PResult<SlotPath> {
        let (segs, span) = self.path_segments()?;
        SlotPath::parse(&segs.join("/"))
            .map_err(|_| self.invalid(span, format!("invalid slot path `{}`", segs.join("/"))))
    }

    fn slot_name(&mut self) -> PResult<(String, Span)> {
        let n = self.name()?;
        if !is_slot_name(&n.name) {
            return Err(self.invalid(n.span, format!("invalid slot name `{}`", n.name)));
        }
        Ok((n.name, n.span))
    }

    // ---- values ----

    fn value(&mut self) -> PResult<SlotValue> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(SlotValue::Text(s))
            }
            Tok::Num(n) => {
                self.bump();
                if let Tok::Str(u) = self.peek().clone() {
                    self.bump();
                    Ok(SlotValue::with_unit(n, u))
                } else {
                    Ok(SlotValue::num(n))
                }
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "true" => SlotValue::Bool(true),
                    "false" => SlotValue::Bool(false),
                    _ => SlotValue::Ref(s),
                })
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if *self.peek() != Tok::RBracket {
                    loop {
                        items.push(self.value()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket)?;
                Ok(SlotValue::List(items))
            }
            Tok::LBrace => {
                self.bump();
                let mut m = SlotMap::new();
                if *self.peek() != Tok::RBrace {
                    loop {
                        let (k, span) = self.slot_name()?;
                        self.expect(Tok::Eq)?;
                        let v = self.value()?;
                        if m.insert(k.clone(), v).is_some() {
                            return Err(self.invalid(span, format!("duplicate key `{k}`")));
                        }
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(SlotValue::Map(m))
            }
            _ => Err(self.error(&["value"])),
        }
    }

    fn term(&mut self) -> PResult<Term> {
        if let Tok::Var(v) = self.peek().clone() {
            self.bump();
            return Ok(Term::Var(v));
        }
        match self.peek() {
            Tok::Str(_) | Tok::Num(_) | Tok::Ident(_) => Ok(Term::Const(self.value()?)),
            _ => Err(self.error(&["variable", "constant"])),
        }
    }

    fn terms(&mut self) -> PResult<Vec<Term>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                out.push(self.term()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    // ---- declarations ----

    fn document(&mut self) -> PResult<Document> {
        let mut items = Vec::new();
        loop {
            let span = self.span();
            let item = match self.peek() {
                Tok::Eof => break,
                Tok::Ident(k) => match k.as_str() {
                    "use" => {
                        self.bump();
                        Item::Use(UseDecl {
                            path: self.string()?,
                            span,
                        })
                    }
                    "cloud" => {
                        self.bump();
                        Item::Cloud(self.cloud()?)
                    }
                    "lot" => {
                        self.bump();
                        Item::Lot(self.lot()?)
                    }
                    "dimension" => {
                        self.bump();
                        Item::Dimension(self.dimension()?)
                    }
                    "juncture" => {
                        self.bump();
                        Item::Juncture(self.juncture()?)
                    }
                    "rule" => {
                        self.bump();
                        Item::Rule(self.rule()?)
                    }
                    "template" => {
                        self.bump();
                        Item::Template(self.template()?)
                    }
                    "assembly" => {
                        self.bump();
                        Item::Assembly(self.assembly()?)
                    }
                    "anomaly" => {
                        self.bump();
                        Item::Anomaly(self.anomaly()?)
                    }
                    "elaborate" => {
                        self.bump();
                        Item::Elaborate(self.elaborate()?)
                    }
                    _ => return Err(self.error(TOP_LEVEL)),
                },
                _ => return Err(self.error(TOP_LEVEL)),
            };
            items.push(item);
        }
        Ok(Document { items })
    }

    fn cloud(&mut self) -> PResult<CloudDecl> {
        let name = self.name()?;
        self.open()?;
        let mut members = Vec::new();
        while !self.close() {
            if self.eat_kw("tag") {
                members.push(CloudMember::Tag(self.name()?));
            } else if self.eat_kw("cloud") {
                members.push(CloudMember::Cloud(self.cloud()?));
            } else if self.eat_kw("ks") {
                members.push(CloudMember::Ks(self.ks()?));
            } else {
                return Err(self.error(&["`tag`", "`cloud`", "`ks`", "`}`"]));
            }
        }
        Ok(CloudDecl { name, members })
    }

    fn ks(&mut self) -> PResult<KsDecl> {
        let name = self.name()?;
        self.open()?;
        let mut items = Vec::new();
        while !self.close() {
            if self.is_kw("slot") {
                items.push(KsItem::Slot(self.slot()?));
            } else if self.eat_kw("explains") {
                items.push(KsItem::Explains(self.string()?));
            } else if self.eat_kw("responder") {
                items.push(KsItem::Responder(self.responder()?));
            } else if self.eat_kw("attractor") {
                items.push(KsItem::Attractor(self.attractor()?));
            } else if self.eat_kw("drel") {
                items.push(KsItem::Drel(self.drel()?));
            } else {
                return Err(self.error(&["`slot`", "`explains`", "`responder`", "`attractor`", "`drel`", "`}`"]));
            }
        }
        Ok(KsDecl { name, items })
    }

    fn slot(&mut self) -> PResult<SlotDecl> {
        self.expect_kw("slot")?;
        let (name, span) = self.slot_name()?;
        if *self.peek() == Tok::Eq {
            self.bump();
            let value = self.value()?;
            return Ok(SlotDecl { name, value, span });
        }
        self.open()?;
        let mut m = SlotMap::new();
        while !self.close() {
            if !self.is_kw("slot") {
                return Err(self.error(&["`slot`", "`}`"]));
            }
            let s = self.slot()?;
            if m.contains_key(&s.name) {
                return Err(self.invalid(s.span, format!("duplicate slot `{}`", s.name)));
            }
            m.insert(s.name, s.value);
        }
        Ok(SlotDecl {
            name,
            value: SlotValue::Map(m),
            span,
        })
    }

    fn responder(&mut self) -> PResult<ResponderDecl> {
        let name = self.name()?;
        self.open()?;
        let mut op = None;
        let mut params = Vec::new();
        let mut when = None;
        while !self.close() {
            if self.eat_kw("op") {
                op = Some(self.name()?.name);
            } else if self.eat_kw("param") {
                let key = self.name()?.name;
                self.expect(Tok::Eq)?;
                params.push((key, self.value()?));
            } else if self.eat_kw("when") {
                when = Some(self.expr_text()?);
            } else {
                return Err(self.error(&["`op`", "`param`", "`when`", "`}`"]));
            }
        }
        let op = op.ok_or_else(|| self.invalid(name.span, format!("responder `{}` has no `op`", name.name)))?;
        Ok(ResponderDecl { name, op, params, when })
    }

    fn attractor(&mut self) -> PResult<AttractorDecl> {
        self.open()?;
        self.expect_kw("on")?;
        let (on, on_span) = self.kline()?;
        if on.len() < 2 {
            return Err(self.invalid(on_span, "attractor must watch `KS/slot`".into()));
        }
        self.expect_kw("when")?;
        let when = self.expr_text()?;
        self.expect_kw("run")?;
        let run = self.name()?;
        self.expect(Tok::RBrace)?;
        Ok(AttractorDecl { on, on_span, when, run })
    }

    fn drel(&mut self) -> PResult<DrelDecl> {
        let name = self.name()?;
        self.open()?;
        self.expect_kw("from")?;
        let from = self.name()?;
        self.expect_kw("share")?;
        let mut share = vec![self.slot_path()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            share.push(self.slot_path()?);
        }
        self.expect_kw("when")?;
        let when = self.expr_text()?;
        let priority = if self.eat_kw("priority") { self.integer()? } else { 0 };
        self.expect(Tok::RBrace)?;
        Ok(DrelDecl {
            name,
            from,
            share,
            when,
            priority,
        })
    }

    fn lot(&mut self) -> PResult<LotDecl> {
        let name = self.name()?;
        self.open()?;
        let mut items = Vec::new();
        while !self.close() {
            if self.eat_kw("juncture") {
                items.push(LotItem::Juncture(self.name()?));
            } else if self.eat_kw("step") {
                items.push(LotItem::Step(self.step()?));
            } else {
                return Err(self.error(&["`juncture`", "`step`", "`}`"]));
            }
        }
        Ok(LotDecl { name, items })
    }

    fn step(&mut self) -> PResult<StepDecl> {
        let target = self.name()?;
        let action = if self.eat_kw("run") {
            StepActionDecl::Run(self.name()?)
        } else if self.eat_kw("rules") {
            StepActionDecl::Rules(self.name()?)
        } else {
            StepActionDecl::None
        };
        let fork = if self.eat_kw("fork") { Some(self.fork()?) } else { None };
        Ok(StepDecl { target, action, fork })
    }

    fn fork(&mut self) -> PResult<ForkDecl> {
        let name = self.name()?.name;
        let predicate = if self.eat_kw("rules") {
            let set = self.name()?;
            self.expect_kw("fact")?;
            let fact = self.name()?.name;
            ForkPredicateDecl::Rules { set, fact }
        } else {
            ForkPredicateDecl::Expr(self.expr_text()?)
        };
        self.open()?;
        let mut branches = Vec::new();
        while !self.close() {
            let span = self.span();
            self.expect_kw("branch")?;
            let label = self.name()?.name;
            let when = if self.eat_kw("default") {
                None
            } else {
                self.expect(Tok::Eq)?;
                Some(self.value()?)
            };
            self.expect(Tok::Arrow)?;
            let target = if self.eat_kw("next") {
                BranchTargetDecl::Next
            } else if self.eat_kw("halt") {
                BranchTargetDecl::Halt
            } else if self.eat_kw("lot") {
                BranchTargetDecl::Lot(self.name()?)
            } else if self.eat_kw("step") {
                let s = self.span();
                let n = self.integer()?;
                if n < 1 {
                    return Err(self.invalid(s, "step numbers start at 1".into()));
                }
                BranchTargetDecl::Step(n as usize)
            } else {
                return Err(self.error(&["`next`", "`step`", "`lot`", "`halt`"]));
            };
            branches.push(BranchDecl {
                label,
                when,
                target,
                span,
            });
        }
        Ok(ForkDecl {
            name,
            predicate,
            branches,
        })
    }

    fn dimension(&mut self) -> PResult<DimensionDecl> {
        let name = self.name()?;
        self.open()?;
        let mut items = Vec::new();
        while !self.close() {
            if self.eat_kw("description") {
                items.push(DimensionItem::Description(self.string()?));
            } else if self.eat_kw("juncture") {
                items.push(DimensionItem::Juncture(self.name()?));
            } else if self.eat_kw("assume") {
                let (path, span) = self.kline()?;
                self.expect(Tok::Eq)?;
                let value = self.value()?;
                items.push(DimensionItem::Assume { path, value, span });
            } else {
                return Err(self.error(&["`description`", "`juncture`", "`assume`", "`}`"]));
            }
        }
        Ok(DimensionDecl { name, items })
    }

    fn juncture(&mut self) -> PResult<JunctureDecl> {
        let name = self.name()?;
        self.open()?;
        let mut items = Vec::new();
        while !self.close() {
            if self.eat_kw("dimension") {
                items.push(JunctureItem::Dimension(self.name()?));
            } else if self.eat_kw("lot") {
                items.push(JunctureItem::Lot(self.name()?));
            } else {
                return Err(self.error(&["`dimension`", "`lot`", "`}`"]));
            }
        }
        Ok(JunctureDecl { name, items })
    }

    fn pattern(&mut self) -> PResult<Option<PatternDecl>> {
        Ok(Some(if self.eat_kw("match") {
            let var = self.var()?;
            let cloud = if self.eat_kw("in") { Some(self.name()?) } else { None };
            let cond = self.expr_text()?;
            PatternDecl::Match { var, cloud, cond }
        } else if self.eat_kw("fact") {
            let name = self.name()?.name;
            PatternDecl::Fact {
                name,
                args: self.terms()?,
            }
        } else if self.eat_kw("absent") {
            let name = self.name()?.name;
            PatternDecl::Absent {
                name,
                args: self.terms()?,
            }
        } else if self.eat_kw("test") {
            PatternDecl::Test(self.expr_text()?)
        } else if self.is_kw("minimize") || self.is_kw("maximize") {
            let kind = if self.eat_kw("minimize") {
                AggregateKind::Minimize
            } else {
                self.bump();
                AggregateKind::Maximize
            };
            let expr = self.expr_text()?;
            self.expect_kw("as")?;
            let var = self.var()?;
            PatternDecl::Aggregate { kind, expr, var }
        } else {
            return Ok(None);
        }))
    }

    fn action(&mut self) -> PResult<ActionDecl> {
        Ok(if self.eat_kw("assert") {
            let name = self.name()?.name;
            ActionDecl::Assert {
                name,
                args: self.terms()?,
            }
        } else if self.eat_kw("set") {
            let var = self.var()?;
            let path = self.slot_path()?;
            self.expect(Tok::Eq)?;
            let expr = self.expr_text()?;
            ActionDecl::Set { var, path, expr }
        } else if self.eat_kw("command") {
            let name = self.name()?.name;
            self.expect(Tok::LParen)?;
            let mut args = Vec::new();
            if *self.peek() != Tok::RParen {
                loop {
                    args.push(self.expr_text()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen)?;
            ActionDecl::Command { name, args }
        } else if self.eat_kw("invoke") {
            let var = self.var()?;
            let responder = self.name()?.name;
            ActionDecl::Invoke { var, responder }
        } else if self.eat_kw("impulse") {
            ActionDecl::Impulse(self.name()?)
        } else if self.eat_kw("halt") {
            ActionDecl::Halt
        } else {
            return Err(self.error(&["`assert`", "`set`", "`command`", "`invoke`", "`impulse`", "`halt`"]));
        })
    }

    fn rule(&mut self) -> PResult<RuleDecl> {
        let name = self.name()?;
        self.open()?;
        let mut items = Vec::new();
        while !self.close() {
            if self.eat_kw("set") {
                items.push(RuleItem::Set(self.name()?));
            } else if self.eat_kw("salience") {
                items.push(RuleItem::Salience(self.integer()?));
            } else if self.eat_kw("then") {
                items.push(RuleItem::Then(self.action()?));
            } else if let Some(p) = self.pattern()? {
                items.push(RuleItem::Pattern(p));
            } else {
                return Err(self.error(&[
                    "`set`",
                    "`salience`",
                    "`match`",
                    "`fact`",
                    "`absent`",
                    "`test`",
                    "`minimize`",
                    "`maximize`",
                    "`then`",
                    "`}`",
                ]));
            }
        }
        Ok(RuleDecl { name, items })
    }

    fn template(&mut self) -> PResult<TemplateDecl> {
        let name = self.name()?;
        self.open()?;
        let mut items = Vec::new();
        while !self.close() {
            if self.eat_kw("bind") {
                let var = self.var()?;
                self.expect(Tok::Eq)?;
                items.push(TemplateItem::Bind {
                    var,
                    value: self.value()?,
                });
            } else if self.eat_kw("output") {
                self.expect_kw("in")?;
                let cloud = self.name()?.name;
                self.open()?;
                let mut slots = Vec::new();
                while !self.close() {
                    self.expect_kw("slot")?;
                    let path = self.slot_path()?;
                    self.expect(Tok::Eq)?;
                    slots.push((path, self.expr_text()?));
                }
                items.push(TemplateItem::Output { cloud, slots });
            } else if let Some(p) = self.pattern()? {
                items.push(TemplateItem::Pattern(p));
            } else {
                return Err(self.error(&["pattern", "`bind`", "`output`", "`}`"]));
            }
        }
        Ok(TemplateDecl { name, items })
    }

    fn assembly(&mut self) -> PResult<AssemblyDecl> {
        let name = self.name()?;
        self.open()?;
        let mut templates = Vec::new();
        while !self.close() {
            self.expect_kw("template")?;
            templates.push(self.name()?);
        }
        Ok(AssemblyDecl { name, templates })
    }

    fn anomaly(&mut self) -> PResult<AnomalyDecl> {
        let name = self.name()?;
        self.open()?;
        self.expect_kw("path")?;
        let (path, _) = self.kline()?;
        self.expect_kw("min")?;
        let min = self.number()?;
        self.expect_kw("max")?;
        let max = self.number()?;
        let impulse = if self.eat_kw("impulse") {
            Some(self.name()?)
        } else {
            None
        };
        self.expect(Tok::RBrace)?;
        Ok(AnomalyDecl {
            name,
            path,
            min,
            max,
            impulse,
        })
    }

    fn elaborate(&mut self) -> PResult<ElaborateDecl> {
        let name = self.name()?;
        self.open()?;
        self.expect_kw("from")?;
        let from = self.name()?;
        self.expect_kw("into")?;
        let into = self.name()?.name;
        let mut applies = Vec::new();
        while !self.close() {
            self.expect_kw("apply")?;
            let f = self.name()?.name;
            self.expect_kw("to")?;
            applies.push((f, self.name()?));
        }
        Ok(ElaborateDecl {
            name,
            from,
            into,
            applies,
        })
    }
}

const TOP_LEVEL: &[&str] = &[
    "`use`",
    "`cloud`",
    "`lot`",
    "`dimension`",
    "`juncture`",
    "`rule`",
    "`template`",
    "`assembly`",
    "`anomaly`",
    "`elaborate`",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_cloud() {
        let doc = parse_document(r#"cloud Cloud-SF { ks KS-TR1 { slot type = "Radar System" } }"#).unwrap();
        assert_eq!(doc.items.len(), 1);
        let Item::Cloud(c) = &doc.items[0] else { panic!() };
        assert_eq!(c.name.name, "Cloud-SF");
        assert_eq!(c.members.len(), 1);
    }

    #[test]
    fn nested_slots_and_units() {
        let doc = parse_document(
            r#"cloud C { ks KS-Pump {
                slot MotorState { slot Status = On }
                slot speed = 18 "knots"
                slot pos = [0, 1.5]
            } }"#,
        )
        .unwrap();
        let Item::Cloud(c) = &doc.items[0] else { panic!() };
        let CloudMember::Ks(ks) = &c.members[0] else { panic!() };
        assert_eq!(ks.items.len(), 3);
        let KsItem::Slot(s) = &ks.items[1] else { panic!() };
        assert_eq!(s.value, SlotValue::with_unit(18.0, "knots"));
    }

    #[test]
    fn syntax_error_positions() {
        let err = parse_document("cloud C {\n  ks K { slot = 1 }\n}").unwrap_err();
        let Error::Parse(d) = err else { panic!() };
        assert_eq!((d[0].line, d[0].col), (2, 15));
        assert_eq!(d[0].kind, DiagnosticKind::SyntaxError);
        assert!(!d[0].expected.is_empty());
    }

    #[test]
    fn lot_with_fork() {
        let doc = parse_document(
            r#"lot L { step A run r fork threat "self.risk" {
                branch hi = "high" -> next
                branch other default -> lot L2
              } step B }"#,
        )
        .unwrap();
        let Item::Lot(l) = &doc.items[0] else { panic!() };
        assert_eq!(l.items.len(), 2);
    }
}
