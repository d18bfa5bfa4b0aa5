use std::fmt;

use thiserror::Error;

use crate::query::{ParseError, Span};

/// Operand shapes did not line up for a kernel or graph op.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("shape mismatch in {op}: {lhs} vs {rhs}")]
pub struct ShapeError {
    pub op: &'static str,
    pub lhs: String,
    pub rhs: String,
}

impl ShapeError {
    pub fn new(op: &'static str, lhs: impl fmt::Display, rhs: impl fmt::Display) -> Self {
        ShapeError {
            op,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum NqlError {
    #[error(transparent)]
    Shape(#[from] ShapeError),

    #[error("type error: {0}")]
    Type(String),

    #[error("unknown type `{0}`")]
    UnknownType(String),

    #[error("unknown entity `{name}` in type `{type_name}`")]
    UnknownEntity { name: String, type_name: String },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{source}")]
    Bind {
        span: Span,
        #[source]
        source: Box<NqlError>,
    },

    /// A malformed line in a schema, facts, or dataset file.
    #[error("{}line {line}, column {column}: {message}", file_prefix(.file))]
    Format {
        file: Option<String>,
        line: usize,
        column: usize,
        message: String,
    },

    /// A fact that parsed but does not fit the schema.
    #[error("{}: {message}", fact_location(*.line))]
    Fact { line: Option<usize>, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Divergence { epoch: usize, step: usize, loss: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn file_prefix(file: &Option<String>) -> String {
    match file {
        Some(f) => format!("{f}: "),
        None => String::new(),
    }
}

fn fact_location(line: Option<usize>) -> String {
    match line {
        Some(l) => format!("fact at line {l}"),
        None => "fact".to_string(),
    }
}

impl NqlError {
    pub(crate) fn at(self, span: Span) -> NqlError {
        match self {
            e @ NqlError::Bind { .. } => e,
            e => NqlError::Bind {
                span,
                source: Box::new(e),
            },
        }
    }

    /// Source span of a parse or bind failure, if there is one.
    pub fn span(&self) -> Option<Span> {
        match self {
            NqlError::Parse(p) => Some(p.span),
            NqlError::Bind { span, .. } => Some(*span),
            _ => None,
        }
    }
}

pub type Result<T, E = NqlError> = std::result::Result<T, E>;
