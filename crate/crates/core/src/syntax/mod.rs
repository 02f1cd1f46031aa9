//! Text formats for programs (`.lars`), streams (`.lstream`), queries and
//! rewritten rule sets (`.exr`).

mod lexer;
mod parser;
mod render;
mod sorts;

use std::fmt;

use thiserror::Error;

pub use parser::{parse_exrules, parse_program, parse_query, parse_stream, ExProgram};
pub use render::{render_exprogram, render_exrules, render_program, render_query, render_stream};
pub use sorts::infer_sorts;

/// Position in the input; `line` and `column` are 1-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParseErrorKind {
    Lexical,
    Syntactic,
    SortConflict,
    ArityConflict,
    NullInSource,
    HeadWindow,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Lexical => "lexical",
            ParseErrorKind::Syntactic => "syntactic",
            ParseErrorKind::SortConflict => "sort-conflict",
            ParseErrorKind::ArityConflict => "arity-conflict",
            ParseErrorKind::NullInSource => "null-in-source",
            ParseErrorKind::HeadWindow => "head-window",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind} error at {span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, span: SourceSpan, message: impl Into<String>) -> Self {
        let message = message.into();
        debug_assert!(!message.is_empty());
        ParseError { span, message, kind }
    }
}
