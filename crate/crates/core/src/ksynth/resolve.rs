//! Cross-reference checks over a whole document.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lower;
use super::{Diagnostic, DiagnosticKind, Span};
use crate::expr::Condition;

#[derive(Default)]
struct Names {
    /// Clouds and knowledge sources share one namespace.
    frames: BTreeMap<String, Span>,
    clouds: BTreeSet<String>,
    /// Knowledge source to its responders.
    ks: BTreeMap<String, BTreeSet<String>>,
    lots: BTreeMap<String, Span>,
    dims: BTreeMap<String, Span>,
    juncs: BTreeMap<String, Span>,
    rules: BTreeMap<String, Span>,
    sets: BTreeSet<String>,
    templates: BTreeMap<String, Span>,
    others: BTreeMap<String, Span>,
}

struct Checker {
    names: Names,
    diags: Vec<Diagnostic>,
}

fn define(map: &mut BTreeMap<String, Span>, n: &Named, what: &str, diags: &mut Vec<Diagnostic>) {
    if map.insert(n.name.clone(), n.span).is_some() {
        diags.push(Diagnostic::new(
            DiagnosticKind::DuplicateAppellation,
            n.span,
            format!("{what} `{}` is defined twice", n.name),
        ));
    }
}

impl Checker {
    fn unresolved(&mut self, n: &Named, what: &str) {
        self.diags.push(Diagnostic::new(
            DiagnosticKind::UnresolvedReference,
            n.span,
            format!("unknown {what} `{}`", n.name),
        ));
    }

    fn expr(&mut self, e: &ExprText) {
        if let Err(err) = Condition::parse(&e.source) {
            self.diags.push(Diagnostic::new(
                DiagnosticKind::SyntaxError,
                e.span,
                format!("bad expression `{}`: {err}", e.source),
            ));
        }
    }

    fn collect_cloud(&mut self, c: &CloudDecl) {
        define(&mut self.names.frames, &c.name, "appellation", &mut self.diags);
        self.names.clouds.insert(c.name.name.clone());
        for m in &c.members {
            match m {
                CloudMember::Tag(_) => {}
                CloudMember::Cloud(sub) => self.collect_cloud(sub),
                CloudMember::Ks(k) => {
                    define(&mut self.names.frames, &k.name, "appellation", &mut self.diags);
                    let responders = k
                        .items
                        .iter()
                        .filter_map(|i| match i {
                            KsItem::Responder(r) => Some(r.name.name.clone()),
                            _ => None,
                        })
                        .collect();
                    self.names.ks.insert(k.name.name.clone(), responders);
                }
            }
        }
    }

    fn collect(&mut self, doc: &Document) {
        for item in &doc.items {
            let d = &mut self.diags;
            match item {
                Item::Cloud(c) => self.collect_cloud(c),
                Item::Lot(l) => define(&mut self.names.lots, &l.name, "line of thought", d),
                Item::Dimension(x) => define(&mut self.names.dims, &x.name, "dimension", d),
                Item::Juncture(x) => define(&mut self.names.juncs, &x.name, "juncture", d),
                Item::Rule(r) => {
                    define(&mut self.names.rules, &r.name, "rule", d);
                    self.names.sets.insert(lower::rule_set_of(r));
                }
                Item::Template(t) => define(&mut self.names.templates, &t.name, "template", d),
                Item::Assembly(a) => define(&mut self.names.others, &a.name, "assembly", d),
                Item::Anomaly(a) => define(&mut self.names.others, &a.name, "anomaly", d),
                Item::Elaborate(e) => define(&mut self.names.others, &e.name, "elaboration", d),
                Item::Use(_) => {}
            }
        }
        let mut drels = BTreeMap::new();
        for item in &doc.items {
            if let Item::Cloud(c) = item {
                walk_ks(c, &mut |k| {
                    for i in &k.items {
                        if let KsItem::Drel(r) = i {
                            define(&mut drels, &r.name, "relation", &mut self.diags);
                        }
                    }
                });
            }
        }
    }

    fn responder(&mut self, ks: &str, r: &Named) {
        let known = self.names.ks.get(ks).is_some_and(|rs| rs.contains(&r.name));
        if !known {
            self.unresolved(r, &format!("responder of `{ks}`"));
        }
    }

    fn ks_ref(&mut self, n: &Named) -> bool {
        if self.names.ks.contains_key(&n.name) {
            true
        } else {
            self.unresolved(n, "knowledge source");
            false
        }
    }

    fn cloud_ref(&mut self, n: &Named) {
        if !self.names.clouds.contains(&n.name) {
            self.unresolved(n, "cloud");
        }
    }

    fn set_ref(&mut self, n: &Named) {
        if !self.names.sets.contains(&n.name) {
            self.unresolved(n, "rule set");
        }
    }

    fn lot_ref(&mut self, n: &Named) {
        if !self.names.lots.contains_key(&n.name) {
            self.unresolved(n, "line of thought");
        }
    }

    fn ks_body(&mut self, k: &KsDecl) {
        for i in &k.items {
            match i {
                KsItem::Responder(r) => {
                    if let Some(w) = &r.when {
                        self.expr(w);
                    }
                }
                KsItem::Attractor(a) => {
                    self.expr(&a.when);
                    let watched = Named {
                        name: a.on.segments()[0].clone(),
                        span: a.on_span,
                    };
                    self.ks_ref(&watched);
                    self.responder(&k.name.name, &a.run);
                }
                KsItem::Drel(d) => {
                    self.expr(&d.when);
                    self.ks_ref(&d.from);
                }
                KsItem::Slot(_) | KsItem::Explains(_) => {}
            }
        }
    }

    fn pattern(&mut self, p: &PatternDecl) {
        match p {
            PatternDecl::Match { cloud, cond, .. } => {
                if let Some(c) = cloud {
                    self.cloud_ref(c);
                }
                self.expr(cond);
            }
            PatternDecl::Test(e) | PatternDecl::Aggregate { expr: e, .. } => self.expr(e),
            PatternDecl::Fact { .. } | PatternDecl::Absent { .. } => {}
        }
    }

    fn check(&mut self, doc: &Document) {
        for item in &doc.items {
            match item {
                Item::Cloud(c) => walk_ks(c, &mut |k| self.ks_body(k)),
                Item::Lot(l) => {
                    for i in &l.items {
                        match i {
                            LotItem::Juncture(j) => {
                                if !self.names.juncs.contains_key(&j.name) {
                                    self.unresolved(j, "juncture");
                                }
                            }
                            LotItem::Step(s) => self.step(s),
                        }
                    }
                }
                Item::Dimension(d) => {
                    for i in &d.items {
                        if let DimensionItem::Juncture(j) = i {
                            if !self.names.juncs.contains_key(&j.name) {
                                self.unresolved(j, "juncture");
                            }
                        }
                    }
                }
                Item::Juncture(j) => {
                    for i in &j.items {
                        match i {
                            JunctureItem::Dimension(d) => {
                                if !self.names.dims.contains_key(&d.name) {
                                    self.unresolved(d, "dimension");
                                }
                            }
                            JunctureItem::Lot(l) => self.lot_ref(l),
                        }
                    }
                }
                Item::Rule(r) => self.rule(r),
                Item::Template(t) => {
                    for i in &t.items {
                        match i {
                            TemplateItem::Pattern(p) => self.pattern(p),
                            TemplateItem::Output { slots, .. } => {
                                for (_, e) in slots {
                                    self.expr(e);
                                }
                            }
                            TemplateItem::Bind { .. } => {}
                        }
                    }
                }
                Item::Assembly(a) => {
                    for t in &a.templates {
                        if !self.names.templates.contains_key(&t.name) {
                            self.unresolved(t, "template");
                        }
                    }
                }
                Item::Anomaly(a) => {
                    if let Some(l) = &a.impulse {
                        self.lot_ref(l);
                    }
                }
                Item::Elaborate(e) => {
                    self.cloud_ref(&e.from);
                    for (_, ks) in &e.applies {
                        self.ks_ref(ks);
                    }
                }
                Item::Use(_) => {}
            }
        }
    }

    fn step(&mut self, s: &StepDecl) {
        let known = self.ks_ref(&s.target);
        match &s.action {
            StepActionDecl::Run(r) if known => self.responder(&s.target.name, r),
            StepActionDecl::Rules(set) => self.set_ref(set),
            _ => {}
        }
        let Some(f) = &s.fork else { return };
        match &f.predicate {
            ForkPredicateDecl::Expr(e) => self.expr(e),
            ForkPredicateDecl::Rules { set, .. } => self.set_ref(set),
        }
        for b in &f.branches {
            if let BranchTargetDecl::Lot(l) = &b.target {
                self.lot_ref(l);
            }
        }
    }

    fn rule(&mut self, r: &RuleDecl) {
        for i in &r.items {
            match i {
                RuleItem::Pattern(p) => self.pattern(p),
                RuleItem::Then(ActionDecl::Set { expr, .. }) => self.expr(expr),
                RuleItem::Then(ActionDecl::Command { args, .. }) => {
                    for a in args {
                        self.expr(a);
                    }
                }
                RuleItem::Then(ActionDecl::Impulse(target))
                    if !self.names.lots.contains_key(&target.name) && !self.names.ks.contains_key(&target.name) =>
                {
                    self.unresolved(target, "impulse target");
                }
                _ => {}
            }
        }
        // variable binding is only checked once every expression parses
        if let Ok(rule) = lower::rule(r) {
            if let Err(e) = rule.validate(&[]) {
                self.diags
                    .push(Diagnostic::new(DiagnosticKind::Invalid, r.name.span, e.to_string()));
            }
        }
    }
}

pub(crate) fn walk_ks(c: &CloudDecl, f: &mut impl FnMut(&KsDecl)) {
    for m in &c.members {
        match m {
            CloudMember::Ks(k) => f(k),
            CloudMember::Cloud(sub) => walk_ks(sub, f),
            CloudMember::Tag(_) => {}
        }
    }
}

/// Every problem found, in document order per category.
pub(crate) fn check(doc: &Document) -> Vec<Diagnostic> {
    let mut c = Checker {
        names: Names::default(),
        diags: Vec::new(),
    };
    c.collect(doc);
    c.check(doc);
    c.diags
}
