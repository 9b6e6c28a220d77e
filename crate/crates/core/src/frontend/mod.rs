//! Concrete syntax: lexing, parsing, template expansion and printing.

mod expand;
pub mod lexer;
mod parser;
mod pretty;
pub mod surface;

use std::fmt;

use thiserror::Error;

pub use expand::{expand, expand_with_registry, DEFAULT_MAX_DEPTH};
pub use lexer::Span;
pub use parser::parse_spec;
pub use pretty::quote_name;
pub use surface::SurfaceSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpandErrorKind {
    /// Expansion budget exhausted, or recursion with no offset in between.
    Depth,
    UnknownTemplate,
    UnknownName,
    /// A guard could not be evaluated, or no guard matched.
    Guard,
    /// Wrong number or kind of template arguments.
    Argument,
    Duplicate,
    Type,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandError {
    pub span: Span,
    pub kind: ExpandErrorKind,
    pub message: String,
    /// Enclosing instantiations, innermost first.
    pub backtrace: Vec<String>,
}

impl ExpandError {
    pub(crate) fn new(span: Span, kind: ExpandErrorKind, message: impl Into<String>) -> Self {
        ExpandError {
            span,
            kind,
            message: message.into(),
            backtrace: Vec::new(),
        }
    }
}

impl fmt::Display for ExpandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)?;
        for frame in &self.backtrace {
            write!(f, "\n  while expanding {frame}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ExpandError {}
