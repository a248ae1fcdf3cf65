//! Lexing, parsing, printing and validation of the supported Cypher fragment.

pub mod ast;
mod check;
mod lexer;
mod parser;
mod printer;

use thiserror::Error;

pub use ast::*;
pub use check::{check_clauses, semantic_check, Scope, VarKind};
pub use parser::parse;
pub(crate) use printer::quote;
pub use printer::{print, print_expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    UndefinedVariable,
    ConflictingRelationshipLabels,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?} at {}..{}: {message}", span.start, span.end)]
pub struct FrontendError {
    pub kind: ErrorKind,
    pub span: Span,
    pub message: String,
}

/// Parse and validate in one step.
pub fn parse_checked(text: &str) -> Result<Query, FrontendError> {
    let q = parse(text)?;
    semantic_check(&q)?;
    Ok(q)
}
