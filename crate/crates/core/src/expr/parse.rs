//! Condition expression grammar.
//!
//! ```text
//! expr    := or
//! or      := and ("or" and)*
//! and     := not ("and" not)*
//! not     := "not" not | cmp
//! cmp     := sum (("==" | "!=" | "<" | "<=" | ">" | ">=") sum)?
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := "-" unary | primary
//! primary := number | string | "true" | "false" | "(" expr ")"
//!          | "[" (expr ("," expr)*)? "]"
//!          | name "(" args ")"              function call
//!          | ("?" name | name) ("." seg)*   variable, role or KS reference
//!          | "@" kline                      absolute path, e.g. @Cloud-SF/KS-TR1/range
//! ```
//!
//! Names may contain `-` when it is followed by a letter (`KS-Pump`), so
//! binary minus between names needs surrounding spaces.

use crate::error::{Error, Result};
use crate::model::{KLinePath, SlotValue};

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    /// Byte offset into the source text.
    pub pos: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(SlotValue),
    /// `?var.a.b`, `role.a.b` or a bare name.
    Ref {
        head: String,
        is_var: bool,
        path: Vec<String>,
        /// Environment key: `?head` for variables, `head` for roles.
        key: String,
    },
    KLine(KLinePath),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    List(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Name(String),
    Var(String),
    At(String),
    Op(&'static str),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Eof,
}

fn is_name_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_name_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, position: usize, message: impl Into<String>) -> Error {
        Error::ExprSyntax {
            position,
            message: message.into(),
        }
    }

    fn name(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            // a dash joins names like LoT-1 when a letter follows it
            let dash = c == b'-' && self.src.get(self.pos + 1).is_some_and(|n| n.is_ascii_alphabetic());
            if is_name_char(c) || dash {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.text[start..self.pos].to_string()
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>> {
        let mut out = Vec::new();
        loop {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            let start = self.pos;
            let Some(&c) = self.src.get(self.pos) else {
                out.push((Tok::Eof, start));
                return Ok(out);
            };
            let tok = match c {
                b'0'..=b'9' => {
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    if self.src.get(self.pos) == Some(&b'.')
                        && self.src.get(self.pos + 1).is_some_and(u8::is_ascii_digit)
                    {
                        self.pos += 1;
                        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                            self.pos += 1;
                        }
                    }
                    if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
                        let mut p = self.pos + 1;
                        if matches!(self.src.get(p), Some(b'+' | b'-')) {
                            p += 1;
                        }
                        if self.src.get(p).is_some_and(u8::is_ascii_digit) {
                            self.pos = p;
                            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                                self.pos += 1;
                            }
                        }
                    }
                    let s = &self.text[start..self.pos];
                    Tok::Num(s.parse().map_err(|_| self.err(start, "bad number"))?)
                }
                b'\'' | b'"' => {
                    self.pos += 1;
                    let mut s = String::new();
                    loop {
                        let rest = &self.text[self.pos..];
                        let Some(ch) = rest.chars().next() else {
                            return Err(self.err(start, "unterminated string"));
                        };
                        self.pos += ch.len_utf8();
                        if ch as u32 == c as u32 {
                            break;
                        }
                        if ch == '\\' {
                            let Some(esc) = self.text[self.pos..].chars().next() else {
                                return Err(self.err(start, "unterminated string"));
                            };
                            self.pos += esc.len_utf8();
                            s.push(match esc {
                                'n' => '\n',
                                't' => '\t',
                                other => other,
                            });
                        } else {
                            s.push(ch);
                        }
                    }
                    Tok::Str(s)
                }
                b'?' => {
                    self.pos += 1;
                    if !self.src.get(self.pos).copied().is_some_and(is_name_start) {
                        return Err(self.err(start, "expected variable name after `?`"));
                    }
                    Tok::Var(self.name())
                }
                b'@' => {
                    self.pos += 1;
                    let s = self.pos;
                    while self.pos < self.src.len() {
                        let c = self.src[self.pos];
                        if c.is_ascii_alphanumeric() || matches!(c, b'_' | b'.' | b'-' | b'/') {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                    Tok::At(self.text[s..self.pos].to_string())
                }
                c if is_name_start(c) => Tok::Name(self.name()),
                b'(' => {
                    self.pos += 1;
                    Tok::LParen
                }
                b')' => {
                    self.pos += 1;
                    Tok::RParen
                }
                b'[' => {
                    self.pos += 1;
                    Tok::LBracket
                }
                b']' => {
                    self.pos += 1;
                    Tok::RBracket
                }
                b',' => {
                    self.pos += 1;
                    Tok::Comma
                }
                b'.' => {
                    self.pos += 1;
                    Tok::Dot
                }
                _ => {
                    let two = self.text.get(self.pos..self.pos + 2).unwrap_or("");
                    let op = match two {
                        "==" => Some("=="),
                        "!=" => Some("!="),
                        "<=" => Some("<="),
                        ">=" => Some(">="),
                        _ => None,
                    };
                    if let Some(op) = op {
                        self.pos += 2;
                        Tok::Op(op)
                    } else {
                        let op = match c {
                            b'<' => "<",
                            b'>' => ">",
                            b'+' => "+",
                            b'-' => "-",
                            b'*' => "*",
                            b'/' => "/",
                            _ => return Err(self.err(start, format!("unexpected character `{}`", c as char))),
                        };
                        self.pos += 1;
                        Tok::Op(op)
                    }
                }
            };
            out.push((tok, start));
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> usize {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> Error {
        Error::ExprSyntax {
            position: self.pos(),
            message: format!("expected {expected}, found {}", describe(self.peek())),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn expr(&mut self) -> Result<Expr> {
        self.or()
    }

    fn or(&mut self) -> Result<Expr> {
        let mut l = self.and()?;
        while self.is_keyword("or") {
            let pos = self.bump().1;
            let r = self.and()?;
            l = bin(BinOp::Or, l, r, pos);
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Expr> {
        let mut l = self.not()?;
        while self.is_keyword("and") {
            let pos = self.bump().1;
            let r = self.not()?;
            l = bin(BinOp::And, l, r, pos);
        }
        Ok(l)
    }

    fn not(&mut self) -> Result<Expr> {
        if self.is_keyword("not") {
            let pos = self.bump().1;
            let e = self.not()?;
            return Ok(Expr {
                kind: ExprKind::Not(Box::new(e)),
                pos,
            });
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr> {
        let l = self.sum()?;
        let op = match self.peek() {
            Tok::Op("==") => BinOp::Eq,
            Tok::Op("!=") => BinOp::Ne,
            Tok::Op("<") => BinOp::Lt,
            Tok::Op("<=") => BinOp::Le,
            Tok::Op(">") => BinOp::Gt,
            Tok::Op(">=") => BinOp::Ge,
            _ => return Ok(l),
        };
        let pos = self.bump().1;
        let r = self.sum()?;
        Ok(bin(op, l, r, pos))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut l = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Op("+") => BinOp::Add,
                Tok::Op("-") => BinOp::Sub,
                _ => return Ok(l),
            };
            let pos = self.bump().1;
            let r = self.product()?;
            l = bin(op, l, r, pos);
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut l = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("/") => BinOp::Div,
                _ => return Ok(l),
            };
            let pos = self.bump().1;
            let r = self.unary()?;
            l = bin(op, l, r, pos);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Tok::Op("-")) {
            let pos = self.bump().1;
            let e = self.unary()?;
            if let ExprKind::Lit(SlotValue::Number { value, unit }) = &e.kind {
                return Ok(Expr {
                    kind: ExprKind::Lit(SlotValue::Number {
                        value: -value,
                        unit: unit.clone(),
                    }),
                    pos,
                });
            }
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(e)),
                pos,
            });
        }
        self.primary()
    }

    fn path_tail(&mut self) -> Result<Vec<String>> {
        let mut path = Vec::new();
        while matches!(self.peek(), Tok::Dot) {
            self.bump();
            match self.bump() {
                (Tok::Name(n), _) => path.push(n),
                (Tok::Num(n), _) if n.fract() == 0.0 && n >= 0.0 => path.push(format!("{n}")),
                (t, p) => {
                    return Err(Error::ExprSyntax {
                        position: p,
                        message: format!("expected slot name after `.`, found {}", describe(&t)),
                    })
                }
            }
        }
        Ok(path)
    }

    fn primary(&mut self) -> Result<Expr> {
        let (tok, pos) = self.bump();
        let kind = match tok {
            Tok::Num(n) => ExprKind::Lit(SlotValue::num(n)),
            Tok::Str(s) => ExprKind::Lit(SlotValue::Text(s)),
            Tok::LParen => {
                let e = self.expr()?;
                if !matches!(self.peek(), Tok::RParen) {
                    return Err(self.err("`)`"));
                }
                self.bump();
                return Ok(e);
            }
            Tok::LBracket => {
                let mut items = Vec::new();
                if !matches!(self.peek(), Tok::RBracket) {
                    loop {
                        items.push(self.expr()?);
                        if matches!(self.peek(), Tok::Comma) {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                if !matches!(self.peek(), Tok::RBracket) {
                    return Err(self.err("`]`"));
                }
                self.bump();
                ExprKind::List(items)
            }
            Tok::Var(v) => ExprKind::Ref {
                key: format!("?{v}"),
                head: v,
                is_var: true,
                path: self.path_tail()?,
            },
            Tok::At(p) => ExprKind::KLine(KLinePath::parse(&p).map_err(|_| Error::ExprSyntax {
                position: pos,
                message: format!("invalid path `@{p}`"),
            })?),
            Tok::Name(n) if n == "true" => ExprKind::Lit(SlotValue::Bool(true)),
            Tok::Name(n) if n == "false" => ExprKind::Lit(SlotValue::Bool(false)),
            Tok::Name(n) if matches!(n.as_str(), "and" | "or" | "not") => {
                return Err(Error::ExprSyntax {
                    position: pos,
                    message: format!("expected operand, found keyword `{n}`"),
                })
            }
            Tok::Name(n) => {
                if matches!(self.peek(), Tok::LParen) {
                    self.bump();
                    let mut args = Vec::new();
                    if !matches!(self.peek(), Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if matches!(self.peek(), Tok::Comma) {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    if !matches!(self.peek(), Tok::RParen) {
                        return Err(self.err("`)` or `,`"));
                    }
                    self.bump();
                    ExprKind::Call(n, args)
                } else {
                    ExprKind::Ref {
                        key: n.clone(),
                        head: n,
                        is_var: false,
                        path: self.path_tail()?,
                    }
                }
            }
            other => {
                return Err(Error::ExprSyntax {
                    position: pos,
                    message: format!("expected operand, found {}", describe(&other)),
                })
            }
        };
        Ok(Expr { kind, pos })
    }
}

fn bin(op: BinOp, l: Expr, r: Expr, pos: usize) -> Expr {
    Expr {
        kind: ExprKind::Binary(op, Box::new(l), Box::new(r)),
        pos,
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(n) => format!("number {n}"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Name(n) => format!("`{n}`"),
        Tok::Var(v) => format!("`?{v}`"),
        Tok::At(p) => format!("`@{p}`"),
        Tok::Op(o) => format!("`{o}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Eof => "end of expression".into(),
    }
}

pub fn parse_expr(text: &str) -> Result<Expr> {
    let toks = Lexer {
        src: text.as_bytes(),
        text,
        pos: 0,
    }
    .tokens()?;
    let mut p = Parser { toks, i: 0 };
    let e = p.expr()?;
    if !matches!(p.peek(), Tok::Eof) {
        return Err(p.err("operator or end of expression"));
    }
    Ok(e)
}

impl Expr {
    /// Variables (`?x`) referenced anywhere in the expression.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let ExprKind::Ref { head, is_var: true, .. } = &e.kind {
                if !out.contains(head) {
                    out.push(head.clone());
                }
            }
        });
        out
    }

    /// Bare role names used with a slot path (`source.x`).
    pub fn roles(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let ExprKind::Ref {
                head,
                is_var: false,
                path,
                ..
            } = &e.kind
            {
                if !path.is_empty() && !out.contains(head) {
                    out.push(head.clone());
                }
            }
        });
        out
    }

    fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Not(e) | ExprKind::Neg(e) => e.walk(f),
            ExprKind::Binary(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
            ExprKind::Call(_, args) | ExprKind::List(args) => {
                for a in args {
                    a.walk(f);
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = parse_expr("a.x < 1 + 2 * 3 and not b.y == 'z' or false").unwrap();
        let ExprKind::Binary(BinOp::Or, l, _) = e.kind else {
            panic!("or at top")
        };
        assert!(matches!(l.kind, ExprKind::Binary(BinOp::And, _, _)));
    }

    #[test]
    fn hyphenated_names_and_spaced_minus() {
        let e = parse_expr("KS-Pump.status").unwrap();
        assert!(matches!(e.kind, ExprKind::Ref { ref head, .. } if head == "KS-Pump"));
        let e = parse_expr("x.a - 1").unwrap();
        assert!(matches!(e.kind, ExprKind::Binary(BinOp::Sub, _, _)));
        let e = parse_expr("x.a-1").unwrap();
        assert!(matches!(e.kind, ExprKind::Binary(BinOp::Sub, _, _)));
    }

    #[test]
    fn variables_and_klines() {
        let e = parse_expr("?T1.armyCount > ?Min + 1 and @Cloud-SF/KS-TR1/range < 10").unwrap();
        assert_eq!(e.variables(), vec!["T1".to_string(), "Min".to_string()]);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let Err(Error::ExprSyntax { position, .. }) = parse_expr("a.x == ") else {
            panic!()
        };
        assert_eq!(position, 7);
        assert!(parse_expr("(1").is_err());
        assert!(parse_expr("1 2").is_err());
        assert!(parse_expr("'open").is_err());
    }

    #[test]
    fn negative_literals_fold() {
        let e = parse_expr("-3.5").unwrap();
        assert_eq!(e.kind, ExprKind::Lit(SlotValue::num(-3.5)));
    }
}
