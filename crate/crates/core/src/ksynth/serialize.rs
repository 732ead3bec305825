use std::fmt::Write;

use super::ast::*;
use crate::model::SlotValue;

const INDENT: &str = "    ";

/// Canonical text: declarations and slots in document order, four-space
/// indentation, one declaration per line.
pub fn serialize(doc: &Document) -> String {
    let mut w = Writer::default();
    for (i, item) in doc.items.iter().enumerate() {
        if i > 0 {
            w.out.push('\n');
        }
        w.item(item);
    }
    w.out
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Inline rendering of a value. Maps use the `{ k = v }` literal form.
pub(crate) fn value_text(v: &SlotValue) -> String {
    match v {
        SlotValue::Text(s) => quote(s),
        SlotValue::Number { value, unit: None } => format!("{value}"),
        SlotValue::Number { value, unit: Some(u) } => format!("{value} {}", quote(u)),
        SlotValue::Bool(b) => b.to_string(),
        SlotValue::Ref(r) => r.clone(),
        SlotValue::List(items) => format!("[{}]", items.iter().map(value_text).collect::<Vec<_>>().join(", ")),
        SlotValue::Map(m) => {
            if m.is_empty() {
                "{}".to_string()
            } else {
                format!(
                    "{{ {} }}",
                    m.iter()
                        .map(|(k, v)| format!("{k} = {}", value_text(v)))
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            }
        }
    }
}

fn term_text(t: &Term) -> String {
    match t {
        Term::Var(v) => format!("?{v}"),
        Term::Const(c) => value_text(c),
    }
}

fn terms_text(ts: &[Term]) -> String {
    ts.iter().map(term_text).collect::<Vec<_>>().join(", ")
}

#[derive(Default)]
struct Writer {
    out: String,
    depth: usize,
}

impl Writer {
    fn line(&mut self, text: impl AsRef<str>) {
        for _ in 0..self.depth {
            self.out.push_str(INDENT);
        }
        self.out.push_str(text.as_ref());
        self.out.push('\n');
    }

    fn open(&mut self, head: impl AsRef<str>) {
        self.line(format!("{} {{", head.as_ref()));
        self.depth += 1;
    }

    fn close(&mut self) {
        self.depth -= 1;
        self.line("}");
    }

    fn item(&mut self, item: &Item) {
        match item {
            Item::Use(u) => self.line(format!("use {}", quote(&u.path))),
            Item::Cloud(c) => self.cloud(c),
            Item::Lot(l) => self.lot(l),
            Item::Dimension(d) => {
                self.open(format!("dimension {}", d.name.name));
                for it in &d.items {
                    match it {
                        DimensionItem::Description(s) => self.line(format!("description {}", quote(s))),
                        DimensionItem::Juncture(j) => self.line(format!("juncture {}", j.name)),
                        DimensionItem::Assume { path, value, .. } => {
                            self.line(format!("assume {path} = {}", value_text(value)))
                        }
                    }
                }
                self.close();
            }
            Item::Juncture(j) => {
                self.open(format!("juncture {}", j.name.name));
                for it in &j.items {
                    match it {
                        JunctureItem::Dimension(d) => self.line(format!("dimension {}", d.name)),
                        JunctureItem::Lot(l) => self.line(format!("lot {}", l.name)),
                    }
                }
                self.close();
            }
            Item::Rule(r) => self.rule(r),
            Item::Template(t) => {
                self.open(format!("template {}", t.name.name));
                for it in &t.items {
                    match it {
                        TemplateItem::Pattern(p) => self.pattern(p),
                        TemplateItem::Bind { var, value } => self.line(format!("bind ?{var} = {}", value_text(value))),
                        TemplateItem::Output { cloud, slots } => {
                            self.open(format!("output in {cloud}"));
                            for (path, e) in slots {
                                self.line(format!("slot {path} = {}", quote(&e.source)));
                            }
                            self.close();
                        }
                    }
                }
                self.close();
            }
            Item::Assembly(a) => {
                self.open(format!("assembly {}", a.name.name));
                for t in &a.templates {
                    self.line(format!("template {}", t.name));
                }
                self.close();
            }
            Item::Anomaly(a) => {
                self.open(format!("anomaly {}", a.name.name));
                self.line(format!("path {}", a.path));
                self.line(format!("min {}", a.min));
                self.line(format!("max {}", a.max));
                if let Some(i) = &a.impulse {
                    self.line(format!("impulse {}", i.name));
                }
                self.close();
            }
            Item::Elaborate(e) => {
                self.open(format!("elaborate {}", e.name.name));
                self.line(format!("from {}", e.from.name));
                self.line(format!("into {}", e.into));
                for (f, ks) in &e.applies {
                    self.line(format!("apply {f} to {}", ks.name));
                }
                self.close();
            }
        }
    }

    fn cloud(&mut self, c: &CloudDecl) {
        self.open(format!("cloud {}", c.name.name));
        for m in &c.members {
            match m {
                CloudMember::Tag(t) => self.line(format!("tag {}", t.name)),
                CloudMember::Cloud(sub) => self.cloud(sub),
                CloudMember::Ks(ks) => self.ks(ks),
            }
        }
        self.close();
    }

    fn slot(&mut self, name: &str, value: &SlotValue) {
        match value {
            SlotValue::Map(m) => {
                self.open(format!("slot {name}"));
                for (k, v) in m {
                    self.slot(k, v);
                }
                self.close();
            }
            v => self.line(format!("slot {name} = {}", value_text(v))),
        }
    }

    fn ks(&mut self, ks: &KsDecl) {
        self.open(format!("ks {}", ks.name.name));
        for it in &ks.items {
            match it {
                KsItem::Slot(s) => self.slot(&s.name, &s.value),
                KsItem::Explains(e) => self.line(format!("explains {}", quote(e))),
                KsItem::Responder(r) => {
                    self.open(format!("responder {}", r.name.name));
                    self.line(format!("op {}", r.op));
                    for (k, v) in &r.params {
                        self.line(format!("param {k} = {}", value_text(v)));
                    }
                    if let Some(w) = &r.when {
                        self.line(format!("when {}", quote(&w.source)));
                    }
                    self.close();
                }
                KsItem::Attractor(a) => {
                    self.open("attractor");
                    self.line(format!("on {}", a.on));
                    self.line(format!("when {}", quote(&a.when.source)));
                    self.line(format!("run {}", a.run.name));
                    self.close();
                }
                KsItem::Drel(d) => {
                    self.open(format!("drel {}", d.name.name));
                    self.line(format!("from {}", d.from.name));
                    self.line(format!(
                        "share {}",
                        d.share.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
                    ));
                    self.line(format!("when {}", quote(&d.when.source)));
                    self.line(format!("priority {}", d.priority));
                    self.close();
                }
            }
        }
        self.close();
    }

    fn lot(&mut self, l: &LotDecl) {
        self.open(format!("lot {}", l.name.name));
        for it in &l.items {
            match it {
                LotItem::Juncture(j) => self.line(format!("juncture {}", j.name)),
                LotItem::Step(s) => {
                    let mut head = format!("step {}", s.target.name);
                    match &s.action {
                        StepActionDecl::None => {}
                        StepActionDecl::Run(r) => write!(head, " run {}", r.name).unwrap(),
                        StepActionDecl::Rules(r) => write!(head, " rules {}", r.name).unwrap(),
                    }
                    let Some(f) = &s.fork else {
                        self.line(head);
                        continue;
                    };
                    write!(head, " fork {} ", f.name).unwrap();
                    match &f.predicate {
                        ForkPredicateDecl::Expr(e) => head.push_str(&quote(&e.source)),
                        ForkPredicateDecl::Rules { set, fact } => {
                            write!(head, "rules {} fact {fact}", set.name).unwrap()
                        }
                    }
                    self.open(head);
                    for b in &f.branches {
                        let when = match &b.when {
                            Some(v) => format!("= {}", value_text(v)),
                            None => "default".to_string(),
                        };
                        let target = match &b.target {
                            BranchTargetDecl::Next => "next".to_string(),
                            BranchTargetDecl::Halt => "halt".to_string(),
                            BranchTargetDecl::Step(n) => format!("step {n}"),
                            BranchTargetDecl::Lot(l) => format!("lot {}", l.name),
                        };
                        self.line(format!("branch {} {when} -> {target}", b.label));
                    }
                    self.close();
                }
            }
        }
        self.close();
    }

    fn pattern(&mut self, p: &PatternDecl) {
        let text = match p {
            PatternDecl::Match { var, cloud, cond } => match cloud {
                Some(c) => format!("match ?{var} in {} {}", c.name, quote(&cond.source)),
                None => format!("match ?{var} {}", quote(&cond.source)),
            },
            PatternDecl::Fact { name, args } => format!("fact {name}({})", terms_text(args)),
            PatternDecl::Absent { name, args } => format!("absent {name}({})", terms_text(args)),
            PatternDecl::Test(e) => format!("test {}", quote(&e.source)),
            PatternDecl::Aggregate { kind, expr, var } => format!(
                "{} {} as ?{var}",
                match kind {
                    AggregateKind::Minimize => "minimize",
                    AggregateKind::Maximize => "maximize",
                },
                quote(&expr.source)
            ),
        };
        self.line(text);
    }

    fn rule(&mut self, r: &RuleDecl) {
        self.open(format!("rule {}", r.name.name));
        for it in &r.items {
            match it {
                RuleItem::Set(s) => self.line(format!("set {}", s.name)),
                RuleItem::Salience(n) => self.line(format!("salience {n}")),
                RuleItem::Pattern(p) => self.pattern(p),
                RuleItem::Then(a) => {
                    let text = match a {
                        ActionDecl::Assert { name, args } => {
                            format!("assert {name}({})", terms_text(args))
                        }
                        ActionDecl::Set { var, path, expr } => {
                            format!("set ?{var} {path} = {}", quote(&expr.source))
                        }
                        ActionDecl::Command { name, args } => format!(
                            "command {name}({})",
                            args.iter().map(|a| quote(&a.source)).collect::<Vec<_>>().join(", ")
                        ),
                        ActionDecl::Invoke { var, responder } => {
                            format!("invoke ?{var} {responder}")
                        }
                        ActionDecl::Impulse(l) => format!("impulse {}", l.name),
                        ActionDecl::Halt => "halt".to_string(),
                    };
                    self.line(format!("then {text}"));
                }
            }
        }
        self.close();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ksynth::parse_document;

    #[test]
    fn empty_document_is_empty_text() {
        assert_eq!(serialize(&Document::default()), "");
    }

    #[test]
    fn roundtrip_small() {
        let src = r#"
            cloud C { tag D ks K { slot a = 1 "m" slot m { slot b = [x, "y", true] } explains "hi {a}" } }
            rule R { set S salience 2 match ?p in C "?p.a > 1" fact F(?p, 2) absent G(?p)
                     minimize "?p.a" as ?m test "?m > 0" then assert H(?p) then set ?p x/y = "1 + 1"
                     then command go("?p", "3") then invoke ?p r then impulse L then halt }
        "#;
        let d1 = parse_document(src).unwrap();
        let text = serialize(&d1);
        let d2 = parse_document(&text).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(serialize(&d2), text);
    }
}
