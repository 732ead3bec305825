use thiserror::Error;

use crate::ksynth::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // knowledge model
    #[error("unknown cloud `{0}`")]
    UnknownCloud(String),
    #[error("unknown knowledge source `{0}`")]
    UnknownKs(String),
    #[error("appellation `{appellation}` already belongs to cloud `{existing}`, not `{requested}`")]
    AppellationConflict {
        appellation: String,
        existing: String,
        requested: String,
    },
    #[error("duplicate appellation `{0}`")]
    DuplicateAppellation(String),
    #[error("path `{path}` on `{ks}` passes through a scalar value")]
    PathThroughScalar { ks: String, path: String },
    #[error("invalid path `{0}`")]
    InvalidPath(String),
    #[error("invalid appellation `{0}`")]
    InvalidAppellation(String),
    #[error("linking `{child}` under `{parent}` would make the cloud graph cyclic")]
    CloudCycle { parent: String, child: String },
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("unknown juncture `{0}`")]
    UnknownJuncture(String),
    #[error("invalid definition: {0}")]
    Invalid(String),

    // kline resolution
    #[error("segment {index} (`{segment}`) does not resolve")]
    UnknownSegment { index: usize, segment: String },
    #[error("segment {index} (`{segment}`) names both a knowledge source and a sub-cloud, and the knowledge source route failed")]
    AmbiguousSegment { index: usize, segment: String },

    // expressions and dynamic relations
    #[error("syntax error in expression at offset {position}: {message}")]
    ExprSyntax { position: usize, message: String },
    #[error("type mismatch at offset {position}: {detail}")]
    TypeMismatch { position: usize, detail: String },
    #[error("unknown path `{0}`")]
    UnknownPath(String),
    #[error("`{ks}` has no value at `{path}` and no satisfied relation provides one")]
    Unresolvable { ks: String, path: String },
    #[error("inheritance cycle through {0:?}")]
    InheritanceCycle(Vec<String>),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("arithmetic error: {0}")]
    Arithmetic(String),

    // inference
    #[error("unknown responder `{responder}` on `{ks}`")]
    UnknownResponder { ks: String, responder: String },
    #[error("unknown responder operation `{0}`")]
    UnknownOperation(String),
    #[error("unknown rule set `{0}`")]
    UnknownRuleSet(String),
    #[error("unknown reasoning paradigm `{0}`")]
    UnknownParadigm(String),
    #[error("event cascade exceeded {limit} waves")]
    CascadeLimitExceeded { limit: usize },
    #[error("value at `{0}` is not numeric")]
    NonNumericValue(String),
    #[error("responder `{responder}` failed: {message}")]
    ResponderFailed { responder: String, message: String },

    // lines of thought
    #[error("unknown line of thought `{0}`")]
    UnknownLot(String),
    #[error("fork at step {step}: {source}")]
    ForkPredicateError { step: usize, source: Box<Error> },
    #[error("fork `{fork}` has no branch for value {value}")]
    NoBranch { fork: String, value: String },
    #[error("nested line-of-thought depth exceeded {limit}")]
    DepthLimitExceeded { limit: usize },
    #[error("line of thought `{lot}` exceeded {limit} steps")]
    StepLimitExceeded { lot: String, limit: usize },
    #[error("no candidate paths to select from")]
    EmptyCandidates,
    #[error("at sequence position {position}: {source}")]
    InSequence { position: usize, source: Box<Error> },

    // elaboration
    #[error("missing input `{path}` on `{ks}`")]
    MissingInput { ks: String, path: String },
    #[error("output `{0}` collides with an existing appellation")]
    OutputCollision(String),
    #[error("unknown transformation function `{0}`")]
    UnknownTransformation(String),
    #[error("`{0}` is not one of the six transformation kinds")]
    InvalidFnType(String),
    #[error("function `{function}` read undeclared input `{path}`")]
    UndeclaredInput { function: String, path: String },

    // what-if
    #[error("{arm} run failed: {source}")]
    WhatIfArm { arm: &'static str, source: Box<Error> },

    // scenarios
    #[error("unknown player `{0}`")]
    UnknownPlayer(String),
    #[error("illegal command: {0}")]
    IllegalCommand(String),

    // parsing and loading
    #[error("{}", render_diagnostics(.0))]
    Parse(Vec<Diagnostic>),
    #[error("include cycle through {0:?}")]
    IncludeCycle(Vec<String>),
    #[error("i/o error on `{path}`: {message}")]
    Io { path: String, message: String },
}

fn render_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

impl Error {
    /// Stable short name for logs and structured exports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownCloud(_) => "UnknownCloud",
            Error::UnknownKs(_) => "UnknownKS",
            Error::AppellationConflict { .. } => "AppellationConflict",
            Error::DuplicateAppellation(_) => "DuplicateAppellation",
            Error::PathThroughScalar { .. } => "PathThroughScalar",
            Error::InvalidPath(_) => "InvalidPath",
            Error::InvalidAppellation(_) => "InvalidAppellation",
            Error::CloudCycle { .. } => "CloudCycle",
            Error::UnknownDimension(_) => "UnknownDimension",
            Error::UnknownJuncture(_) => "UnknownJuncture",
            Error::Invalid(_) => "Invalid",
            Error::UnknownSegment { .. } => "UnknownSegment",
            Error::AmbiguousSegment { .. } => "AmbiguousSegment",
            Error::ExprSyntax { .. } => "SyntaxError",
            Error::TypeMismatch { .. } => "TypeMismatch",
            Error::UnknownPath(_) => "UnknownPath",
            Error::Unresolvable { .. } => "Unresolvable",
            Error::InheritanceCycle(_) => "InheritanceCycle",
            Error::UnboundVariable(_) => "UnboundVariable",
            Error::UnknownFunction(_) => "UnknownFunction",
            Error::Arithmetic(_) => "Arithmetic",
            Error::UnknownResponder { .. } => "UnknownResponder",
            Error::UnknownOperation(_) => "UnknownOperation",
            Error::UnknownRuleSet(_) => "UnknownRuleSet",
            Error::UnknownParadigm(_) => "UnknownParadigm",
            Error::CascadeLimitExceeded { .. } => "CascadeLimitExceeded",
            Error::NonNumericValue(_) => "NonNumericValue",
            Error::ResponderFailed { .. } => "ResponderFailed",
            Error::UnknownLot(_) => "UnknownLoT",
            Error::ForkPredicateError { .. } => "ForkPredicateError",
            Error::NoBranch { .. } => "NoBranch",
            Error::DepthLimitExceeded { .. } => "DepthLimitExceeded",
            Error::StepLimitExceeded { .. } => "StepLimitExceeded",
            Error::EmptyCandidates => "EmptyCandidates",
            Error::InSequence { source, .. } => source.kind(),
            Error::MissingInput { .. } => "MissingInput",
            Error::OutputCollision(_) => "OutputCollision",
            Error::UnknownTransformation(_) => "UnknownTransformation",
            Error::InvalidFnType(_) => "InvalidFnType",
            Error::UndeclaredInput { .. } => "UndeclaredInput",
            Error::WhatIfArm { source, .. } => source.kind(),
            Error::UnknownPlayer(_) => "UnknownPlayer",
            Error::IllegalCommand(_) => "IllegalCommand",
            Error::Parse(_) => "ParseError",
            Error::IncludeCycle(_) => "IncludeCycle",
            Error::Io { .. } => "Io",
        }
    }

    /// Strips sequence/arm annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::InSequence { source, .. }
            | Error::WhatIfArm { source, .. }
            | Error::ForkPredicateError { source, .. } => source.root(),
            other => other,
        }
    }
}
