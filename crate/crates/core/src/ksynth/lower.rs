//! AST to model conversion. Assumes the document already passed the
//! cross-reference checks; model-level failures still surface as
//! diagnostics at the offending item.

use std::collections::BTreeSet;

use super::ast::{self, *};
use super::load::Pack;
use super::{Diagnostic, DiagnosticKind, Span};
use crate::drel::DRel;
use crate::elaboration::ElaborationPlan;
use crate::error::{Error, Result};
use crate::expr::Condition;
use crate::inference::{self, Action, Aggregate, AnomalySpec, GppbTemplate, OutputSpec, Pattern, Rule};
use crate::lot::{Branch, BranchTarget, Fork, ForkPredicate, LineOfThought, Step, StepAction};
use crate::model::{AttractorBinding, Dimension, Juncture, KnowledgeSource, ResponderBinding, SlotMap, SlotPath};

/// Rules without a `set` clause land in this set.
pub const DEFAULT_RULE_SET: &str = "default";

pub(crate) fn rule_set_of(r: &RuleDecl) -> String {
    r.items
        .iter()
        .find_map(|i| match i {
            RuleItem::Set(s) => Some(s.name.clone()),
            _ => None,
        })
        .unwrap_or_else(|| DEFAULT_RULE_SET.to_string())
}

fn cond(e: &ExprText) -> Result<Condition> {
    Condition::parse(&e.source)
}

fn term(t: &ast::Term) -> inference::Term {
    match t {
        ast::Term::Var(v) => inference::Term::Var(v.clone()),
        ast::Term::Const(c) => inference::Term::Const(c.clone()),
    }
}

fn terms(ts: &[ast::Term]) -> Vec<inference::Term> {
    ts.iter().map(term).collect()
}

fn pattern(p: &PatternDecl) -> Result<Pattern> {
    Ok(match p {
        PatternDecl::Match { var, cloud, cond: c } => Pattern::Ks {
            var: var.clone(),
            cloud: cloud.as_ref().map(|n| n.name.clone()),
            cond: cond(c)?,
        },
        PatternDecl::Fact { name, args } => Pattern::Fact {
            name: name.clone(),
            args: terms(args),
        },
        PatternDecl::Absent { name, args } => Pattern::Absent {
            name: name.clone(),
            args: terms(args),
        },
        PatternDecl::Test(e) => Pattern::Test(cond(e)?),
        PatternDecl::Aggregate { kind, expr, var } => Pattern::Aggregate {
            kind: match kind {
                AggregateKind::Minimize => Aggregate::Minimize,
                AggregateKind::Maximize => Aggregate::Maximize,
            },
            expr: cond(expr)?,
            var: var.clone(),
        },
    })
}

fn action(a: &ActionDecl) -> Result<Action> {
    Ok(match a {
        ActionDecl::Assert { name, args } => Action::Assert {
            name: name.clone(),
            args: terms(args),
        },
        ActionDecl::Set { var, path, expr } => Action::SetSlot {
            var: var.clone(),
            path: path.clone(),
            expr: cond(expr)?,
        },
        ActionDecl::Command { name, args } => Action::Command {
            name: name.clone(),
            args: args.iter().map(cond).collect::<Result<_>>()?,
        },
        ActionDecl::Invoke { var, responder } => Action::Invoke {
            var: var.clone(),
            responder: responder.clone(),
        },
        ActionDecl::Impulse(t) => Action::Impulse(t.name.clone()),
        ActionDecl::Halt => Action::Halt,
    })
}

pub(crate) fn rule(r: &RuleDecl) -> Result<Rule> {
    let mut rule = Rule::new(&r.name.name, rule_set_of(r));
    for i in &r.items {
        match i {
            RuleItem::Set(_) => {}
            RuleItem::Salience(s) => rule.salience = *s,
            RuleItem::Pattern(p) => rule.patterns.push(pattern(p)?),
            RuleItem::Then(a) => rule.actions.push(action(a)?),
        }
    }
    Ok(rule)
}

fn template(t: &TemplateDecl) -> Result<GppbTemplate> {
    let mut tpl = GppbTemplate::new(&t.name.name);
    for i in &t.items {
        match i {
            TemplateItem::Pattern(p) => tpl.patterns.push(pattern(p)?),
            TemplateItem::Bind { var, value } => tpl.instantiation.push((var.clone(), value.clone())),
            TemplateItem::Output { cloud, slots } => {
                tpl.output = Some(OutputSpec {
                    cloud: cloud.clone(),
                    slots: slots
                        .iter()
                        .map(|(p, e)| Ok((p.clone(), cond(e)?)))
                        .collect::<Result<_>>()?,
                })
            }
        }
    }
    tpl.validate()?;
    Ok(tpl)
}

fn ks(k: &KsDecl) -> Result<KnowledgeSource> {
    let mut ks = KnowledgeSource::new(&k.name.name);
    for i in &k.items {
        match i {
            KsItem::Slot(s) => {
                ks.slots.insert(s.name.clone(), s.value.clone());
            }
            KsItem::Explains(e) => ks.explains = Some(e.clone()),
            KsItem::Responder(r) => {
                let mut params = SlotMap::new();
                for (k, v) in &r.params {
                    params.insert(k.clone(), v.clone());
                }
                ks.responders.push(ResponderBinding {
                    name: r.name.name.clone(),
                    op: r.op.clone(),
                    params,
                    trigger: r.when.as_ref().map(cond).transpose()?,
                });
            }
            KsItem::Attractor(a) => {
                let segs = a.on.segments();
                ks.attractors.push(AttractorBinding {
                    watch_ks: segs[0].clone(),
                    watch_path: SlotPath::new(segs[1..].iter().cloned())?,
                    condition: cond(&a.when)?,
                    responder: a.run.name.clone(),
                });
            }
            KsItem::Drel(_) => {}
        }
    }
    Ok(ks)
}

fn step(s: &StepDecl) -> Result<Step> {
    let action = match &s.action {
        StepActionDecl::None => StepAction::None,
        StepActionDecl::Run(r) => StepAction::Responder(r.name.clone()),
        StepActionDecl::Rules(r) => StepAction::RuleSet(r.name.clone()),
    };
    let fork = match &s.fork {
        None => None,
        Some(f) => Some(Fork {
            name: f.name.clone(),
            predicate: match &f.predicate {
                ForkPredicateDecl::Expr(e) => ForkPredicate::Expr(cond(e)?),
                ForkPredicateDecl::Rules { set, fact } => ForkPredicate::RuleSet {
                    set: set.name.clone(),
                    fact: fact.clone(),
                },
            },
            branches: f
                .branches
                .iter()
                .map(|b| {
                    let target = match &b.target {
                        BranchTargetDecl::Next => BranchTarget::Next,
                        BranchTargetDecl::Step(0) => {
                            return Err(Error::Invalid(format!("branch `{}` targets step 0", b.label)))
                        }
                        BranchTargetDecl::Step(n) => BranchTarget::Step(n - 1),
                        BranchTargetDecl::Lot(l) => BranchTarget::Lot(l.name.clone()),
                        BranchTargetDecl::Halt => BranchTarget::Halt,
                    };
                    Ok(Branch {
                        label: b.label.clone(),
                        when: b.when.clone(),
                        target,
                    })
                })
                .collect::<Result<_>>()?,
        }),
    };
    Ok(Step {
        target: s.target.name.clone(),
        action,
        fork,
    })
}

fn lot(l: &LotDecl) -> Result<LineOfThought> {
    let mut lot = LineOfThought {
        name: l.name.name.clone(),
        steps: Vec::new(),
        juncture_links: Vec::new(),
    };
    for i in &l.items {
        match i {
            LotItem::Juncture(j) => lot.juncture_links.push(j.name.clone()),
            LotItem::Step(s) => lot.steps.push(step(s)?),
        }
    }
    Ok(lot)
}

struct Lowering {
    pack: Pack,
    diags: Vec<Diagnostic>,
}

impl Lowering {
    fn report<T>(&mut self, span: Span, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.diags
                    .push(Diagnostic::new(DiagnosticKind::Invalid, span, e.to_string()));
                None
            }
        }
    }

    fn cloud(&mut self, c: &CloudDecl, parent: Option<&str>) {
        let span = c.name.span;
        let name = c.name.name.as_str();
        let r = self.pack.kb.add_cloud(name);
        if self.report(span, r).is_none() {
            return;
        }
        if let Some(p) = parent {
            let r = self.pack.kb.link_sub_cloud(p, name);
            self.report(span, r);
        }
        for m in &c.members {
            match m {
                CloudMember::Tag(t) => {
                    let r = self.pack.kb.tag_cloud(name, &t.name);
                    self.report(t.span, r);
                }
                CloudMember::Cloud(sub) => self.cloud(sub, Some(name)),
                CloudMember::Ks(k) => {
                    let r = ks(k).and_then(|ks| self.pack.kb.put_ks(ks, name));
                    self.report(k.name.span, r);
                }
            }
        }
    }

    fn drels(&mut self, c: &CloudDecl) {
        let mut found = Vec::new();
        super::resolve::walk_ks(c, &mut |k| {
            for i in &k.items {
                if let KsItem::Drel(d) = i {
                    found.push((k.name.name.clone(), d.clone()));
                }
            }
        });
        for (target, d) in found {
            let r = cond(&d.when).and_then(|condition| {
                self.pack.kb.add_drel(DRel {
                    appellation: d.name.name.clone(),
                    source_ks: d.from.name.clone(),
                    target_ks: target,
                    shared_attributes: d.share.clone(),
                    condition,
                    priority: d.priority,
                })
            });
            self.report(d.name.span, r);
        }
    }
}

/// Builds the knowledge base and definitions of a checked document.
pub(crate) fn pack(doc: &Document) -> std::result::Result<Pack, Vec<Diagnostic>> {
    let mut l = Lowering {
        pack: Pack::default(),
        diags: Vec::new(),
    };
    // dimensions first: clouds tag them and junctures group them
    for item in &doc.items {
        if let Item::Dimension(d) = item {
            let mut dim = Dimension {
                name: d.name.name.clone(),
                description: String::new(),
                parent_juncture: None,
                assumptions: Vec::new(),
            };
            for i in &d.items {
                match i {
                    DimensionItem::Description(s) => dim.description = s.clone(),
                    DimensionItem::Juncture(j) => dim.parent_juncture = Some(j.name.clone()),
                    DimensionItem::Assume { path, value, .. } => dim.assumptions.push((path.clone(), value.clone())),
                }
            }
            let r = l.pack.kb.add_dimension(dim);
            l.report(d.name.span, r);
        }
    }
    for item in &doc.items {
        if let Item::Cloud(c) = item {
            l.cloud(c, None);
        }
    }
    for item in &doc.items {
        if let Item::Cloud(c) = item {
            l.drels(c);
        }
    }
    for item in &doc.items {
        let span = match item {
            Item::Lot(x) => x.name.span,
            Item::Juncture(x) => x.name.span,
            Item::Rule(x) => x.name.span,
            Item::Template(x) => x.name.span,
            Item::Assembly(x) => x.name.span,
            Item::Anomaly(x) => x.name.span,
            Item::Elaborate(x) => x.name.span,
            _ => continue,
        };
        let r = match item {
            Item::Lot(x) => lot(x).and_then(|lot| l.pack.kb.add_lot(lot)),
            Item::Juncture(x) => {
                let mut j = Juncture {
                    name: x.name.name.clone(),
                    member_dimensions: BTreeSet::new(),
                    linked_lots: BTreeSet::new(),
                };
                for i in &x.items {
                    match i {
                        JunctureItem::Dimension(d) => j.member_dimensions.insert(d.name.clone()),
                        JunctureItem::Lot(t) => j.linked_lots.insert(t.name.clone()),
                    };
                }
                l.pack.kb.add_juncture(j)
            }
            Item::Rule(x) => rule(x).and_then(|r| l.pack.rules.add(r)),
            Item::Template(x) => template(x).map(|t| {
                l.pack.templates.insert(t.name.clone(), t);
            }),
            Item::Assembly(x) => {
                l.pack.assemblies.insert(
                    x.name.name.clone(),
                    x.templates.iter().map(|t| t.name.clone()).collect(),
                );
                Ok(())
            }
            Item::Anomaly(x) => {
                l.pack.anomalies.push(AnomalySpec {
                    name: x.name.name.clone(),
                    path: x.path.clone(),
                    min: x.min,
                    max: x.max,
                    impulse: x.impulse.as_ref().map(|n| n.name.clone()),
                });
                Ok(())
            }
            Item::Elaborate(x) => {
                l.pack.plans.insert(
                    x.name.name.clone(),
                    ElaborationPlan {
                        name: x.name.name.clone(),
                        source_cloud: x.from.name.clone(),
                        target_cloud: x.into.clone(),
                        pairs: x.applies.iter().map(|(f, k)| (k.name.clone(), f.clone())).collect(),
                    },
                );
                Ok(())
            }
            _ => unreachable!(),
        };
        l.report(span, r);
    }
    if l.diags.is_empty() {
        Ok(l.pack)
    } else {
        Err(l.diags)
    }
}
