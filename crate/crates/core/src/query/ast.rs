use std::fmt;

/// Byte range `[start, end)` in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    /// 1-based line and column of `start` within `source`.
    pub fn line_col(self, source: &str) -> (usize, usize) {
        let start = self.start.min(source.len());
        let before = &source[..start];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        (line, source[line_start..start].chars().count() + 1)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// Argument of `.follow(...)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FollowArg {
    /// `.follow('rel')`, equivalent to `.rel()`.
    Name(String),
    /// A multiset over a relation-group type.
    Expr(Box<Query>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryKind {
    One {
        entity: String,
        type_name: String,
    },
    None {
        type_name: String,
    },
    All {
        type_name: String,
    },
    Var(String),
    RelCall {
        input: Box<Query>,
        relation: String,
        inverse: bool,
    },
    Follow {
        input: Box<Query>,
        arg: FollowArg,
        inverse: bool,
    },
    Union(Box<Query>, Box<Query>),
    Intersect(Box<Query>, Box<Query>),
    IfAny {
        input: Box<Query>,
        cond: Box<Query>,
    },
    Scale {
        input: Box<Query>,
        factor: f64,
    },
}

/// A query expression. Equality ignores spans.
#[derive(Debug, Clone)]
pub struct Query {
    pub kind: QueryKind,
    pub span: Span,
}

impl PartialEq for Query {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Query {
    pub fn new(kind: QueryKind, span: Span) -> Self {
        Query { kind, span }
    }

    /// Builders with empty spans, for constructing queries in code.
    pub fn one(entity: &str, type_name: &str) -> Self {
        Self::unspanned(QueryKind::One {
            entity: entity.into(),
            type_name: type_name.into(),
        })
    }

    pub fn none(type_name: &str) -> Self {
        Self::unspanned(QueryKind::None {
            type_name: type_name.into(),
        })
    }

    pub fn all(type_name: &str) -> Self {
        Self::unspanned(QueryKind::All {
            type_name: type_name.into(),
        })
    }

    pub fn var(name: &str) -> Self {
        Self::unspanned(QueryKind::Var(name.into()))
    }

    pub fn rel(self, relation: &str, inverse: bool) -> Self {
        Self::unspanned(QueryKind::RelCall {
            input: Box::new(self),
            relation: relation.into(),
            inverse,
        })
    }

    pub fn follow_name(self, relation: &str, inverse: bool) -> Self {
        Self::unspanned(QueryKind::Follow {
            input: Box::new(self),
            arg: FollowArg::Name(relation.into()),
            inverse,
        })
    }

    pub fn follow(self, r: Query, inverse: bool) -> Self {
        Self::unspanned(QueryKind::Follow {
            input: Box::new(self),
            arg: FollowArg::Expr(Box::new(r)),
            inverse,
        })
    }

    pub fn union(self, other: Query) -> Self {
        Self::unspanned(QueryKind::Union(Box::new(self), Box::new(other)))
    }

    pub fn intersect(self, other: Query) -> Self {
        Self::unspanned(QueryKind::Intersect(Box::new(self), Box::new(other)))
    }

    pub fn if_any(self, cond: Query) -> Self {
        Self::unspanned(QueryKind::IfAny {
            input: Box::new(self),
            cond: Box::new(cond),
        })
    }

    pub fn scale(self, factor: f64) -> Self {
        Self::unspanned(QueryKind::Scale {
            input: Box::new(self),
            factor,
        })
    }

    fn unspanned(kind: QueryKind) -> Self {
        Query {
            kind,
            span: Span::default(),
        }
    }
}

/// `name = expr`, or a bare expression.
#[derive(Debug, Clone)]
pub struct Statement {
    pub name: Option<String>,
    pub expr: Query,
    pub span: Span,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.expr == other.expr
    }
}

/// A sequence of statements. The last statement is the result.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub statements: Vec<Statement>,
}

impl Program {
    pub fn result(&self) -> &Query {
        &self.statements.last().expect("programs are nonempty").expr
    }
}
