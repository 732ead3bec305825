//! KSYNTH: the textual knowledge-definition language.
//!
//! Parsing is split in two passes. [`parse_document`] checks syntax only and
//! is what the serializer round-trips against. [`parse`] additionally
//! resolves every cross reference inside the document, and
//! [`load::load_files`] expands `use` directives before resolving.

pub mod ast;
pub mod kline;
mod lexer;
pub mod load;
mod lower;
mod parser;
mod resolve;
mod serialize;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ast::Document;
pub use kline::{locate, resolve_kline};
pub use load::{load_files, load_str, Pack};
pub use parser::{parse_document, parse_value};
pub use serialize::serialize;

/// One-based line and column.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

/// Spans are positional metadata and never take part in equality, so
/// documents compare structurally.
impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    SyntaxError,
    UnresolvedReference,
    DuplicateAppellation,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
    /// Tokens that would have been accepted (syntax errors only).
    pub expected: Vec<String>,
    pub file: Option<String>,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            kind,
            line: span.line,
            col: span.col,
            message: message.into(),
            expected: Vec::new(),
            file: None,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}:")?;
        }
        write!(f, "{}:{}: {:?}: {}", self.line, self.col, self.kind, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// Parses and cross-checks a single self-contained document.
pub fn parse(text: &str) -> Result<Document> {
    let doc = parse_document(text)?;
    let diags = resolve::check(&doc);
    if diags.is_empty() {
        Ok(doc)
    } else {
        Err(Error::Parse(diags))
    }
}
