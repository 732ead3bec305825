//! Syntax tree. Items keep their source order so serialization can
//! reproduce it; spans never affect equality.

use super::Span;
use crate::model::{KLinePath, SlotPath, SlotValue};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Use(UseDecl),
    Cloud(CloudDecl),
    Lot(LotDecl),
    Dimension(DimensionDecl),
    Juncture(JunctureDecl),
    Rule(RuleDecl),
    Template(TemplateDecl),
    Assembly(AssemblyDecl),
    Anomaly(AnomalyDecl),
    Elaborate(ElaborateDecl),
}

/// A name together with where it was written.
#[derive(Debug, Clone, PartialEq)]
pub struct Named {
    pub name: String,
    pub span: Span,
}

impl Named {
    pub fn new(name: impl Into<String>) -> Self {
        Named {
            name: name.into(),
            span: Span::default(),
        }
    }
}

/// An embedded condition expression, kept verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprText {
    pub source: String,
    pub span: Span,
}

impl ExprText {
    pub fn new(source: impl Into<String>) -> Self {
        ExprText {
            source: source.into(),
            span: Span::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UseDecl {
    pub path: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudDecl {
    pub name: Named,
    pub members: Vec<CloudMember>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CloudMember {
    Tag(Named),
    Cloud(CloudDecl),
    Ks(KsDecl),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsDecl {
    pub name: Named,
    pub items: Vec<KsItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KsItem {
    Slot(SlotDecl),
    Explains(String),
    Responder(ResponderDecl),
    Attractor(AttractorDecl),
    Drel(DrelDecl),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotDecl {
    pub name: String,
    pub value: SlotValue,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponderDecl {
    pub name: Named,
    pub op: String,
    pub params: Vec<(String, SlotValue)>,
    pub when: Option<ExprText>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttractorDecl {
    /// Watched knowledge source followed by the slot path.
    pub on: KLinePath,
    pub on_span: Span,
    pub when: ExprText,
    pub run: Named,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrelDecl {
    pub name: Named,
    pub from: Named,
    pub share: Vec<SlotPath>,
    pub when: ExprText,
    pub priority: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LotDecl {
    pub name: Named,
    pub items: Vec<LotItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LotItem {
    Juncture(Named),
    Step(StepDecl),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDecl {
    pub target: Named,
    pub action: StepActionDecl,
    pub fork: Option<ForkDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepActionDecl {
    None,
    Run(Named),
    Rules(Named),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForkDecl {
    pub name: String,
    pub predicate: ForkPredicateDecl,
    pub branches: Vec<BranchDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForkPredicateDecl {
    Expr(ExprText),
    Rules { set: Named, fact: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchDecl {
    pub label: String,
    /// `None` for the default branch.
    pub when: Option<SlotValue>,
    pub target: BranchTargetDecl,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BranchTargetDecl {
    Next,
    /// One-based, as written.
    Step(usize),
    Lot(Named),
    Halt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionDecl {
    pub name: Named,
    pub items: Vec<DimensionItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DimensionItem {
    Description(String),
    Juncture(Named),
    Assume {
        path: KLinePath,
        value: SlotValue,
        span: Span,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct JunctureDecl {
    pub name: Named,
    pub items: Vec<JunctureItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JunctureItem {
    Dimension(Named),
    Lot(Named),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleDecl {
    pub name: Named,
    pub items: Vec<RuleItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleItem {
    Set(Named),
    Salience(i64),
    Pattern(PatternDecl),
    Then(ActionDecl),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var(String),
    Const(SlotValue),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateKind {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternDecl {
    Match {
        var: String,
        cloud: Option<Named>,
        cond: ExprText,
    },
    Fact {
        name: String,
        args: Vec<Term>,
    },
    Absent {
        name: String,
        args: Vec<Term>,
    },
    Test(ExprText),
    Aggregate {
        kind: AggregateKind,
        expr: ExprText,
        var: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionDecl {
    Assert {
        name: String,
        args: Vec<Term>,
    },
    Set {
        var: String,
        path: SlotPath,
        expr: ExprText,
    },
    Command {
        name: String,
        args: Vec<ExprText>,
    },
    Invoke {
        var: String,
        responder: String,
    },
    Impulse(Named),
    Halt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateDecl {
    pub name: Named,
    pub items: Vec<TemplateItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemplateItem {
    Pattern(PatternDecl),
    Bind {
        var: String,
        value: SlotValue,
    },
    Output {
        cloud: String,
        slots: Vec<(SlotPath, ExprText)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyDecl {
    pub name: Named,
    pub templates: Vec<Named>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyDecl {
    pub name: Named,
    pub path: KLinePath,
    pub min: f64,
    pub max: f64,
    pub impulse: Option<Named>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElaborateDecl {
    pub name: Named,
    pub from: Named,
    pub into: String,
    /// (transformation function, source knowledge source)
    pub applies: Vec<(String, Named)>,
}
