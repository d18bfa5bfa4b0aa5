//! The operator algebra over multisets and the textual query language.

mod ast;
mod lexer;
mod parser;
mod printer;

use std::collections::HashMap;

pub use ast::{FollowArg, Program, Query, QueryKind, Span, Statement};
pub use parser::{parse, parse_program, ParseError};

use crate::error::{NqlError, Result};
use crate::graph::{Graph, MultisetExpr, Tensor};
use crate::sparse::DenseBatch;

impl<'kb> Graph<'kb> {
    fn check_type(&self, e: MultisetExpr, want: &str, what: impl FnOnce() -> String) -> Result<()> {
        let got = self.type_of(e);
        if got != want {
            return Err(NqlError::Type(format!(
                "{} expects type {want}, got {got}",
                what()
            )));
        }
        Ok(())
    }

    /// `s.rel()`, or `s.rel(-1)` when `inverse`.
    pub fn rel_call(&mut self, s: MultisetExpr, relation: &str, inverse: bool) -> Result<MultisetExpr> {
        let kb = self.kb();
        let rel = kb.relation(relation)?;
        let (input, output) = rel.signature(inverse);
        self.check_type(s, input, || {
            format!("relation `{relation}`{}", if inverse { " (inverse)" } else { "" })
        })?;
        self.rel_node(s.0, rel, inverse, output).map(MultisetExpr)
    }

    /// Traversal through a relation whose stored weights are replaced by
    /// the `1 × nnz` tensor `weights`, so gradients reach the weights.
    pub fn rel_call_weighted(
        &mut self,
        s: MultisetExpr,
        relation: &str,
        weights: Tensor,
        inverse: bool,
    ) -> Result<MultisetExpr> {
        let kb = self.kb();
        let rel = kb.relation(relation)?;
        let (input, output) = rel.signature(inverse);
        self.check_type(s, input, || format!("relation `{relation}`"))?;
        self.weighted_rel_node(s.0, weights.0, rel, inverse, output)
            .map(MultisetExpr)
    }

    /// `s.follow(r)`: traversal through the mixture of group members
    /// weighted by `r`, which must be a multiset over a group type.
    pub fn follow(&mut self, s: MultisetExpr, r: MultisetExpr, inverse: bool) -> Result<MultisetExpr> {
        let kb = self.kb();
        let rty = self.type_of(r).to_string();
        let group = kb.group(&rty).ok_or_else(|| {
            NqlError::Type(format!(
                "follow expects a multiset over a relation group, got type {rty}"
            ))
        })?;
        let (input, output) = group.signature(inverse);
        self.check_type(s, input, || format!("follow over group `{rty}`"))?;
        self.follow_node(s.0, r.0, group, inverse, output)
            .map(MultisetExpr)
    }

    /// `s.follow('rel')`, identical to `s.rel()`.
    pub fn follow_name(&mut self, s: MultisetExpr, relation: &str, inverse: bool) -> Result<MultisetExpr> {
        self.rel_call(s, relation, inverse)
    }

    /// `s | t`.
    pub fn union(&mut self, s: MultisetExpr, t: MultisetExpr) -> Result<MultisetExpr> {
        let ty = self.type_of(s).to_string();
        self.check_type(t, &ty, || "union".into())?;
        self.add_node(s.0, t.0, Some(ty)).map(MultisetExpr)
    }

    /// `s & t`.
    pub fn intersect(&mut self, s: MultisetExpr, t: MultisetExpr) -> Result<MultisetExpr> {
        let ty = self.type_of(s).to_string();
        self.check_type(t, &ty, || "intersection".into())?;
        self.mul_node(s.0, t.0, Some(ty)).map(MultisetExpr)
    }

    /// `s.if_any(t)`: `s` scaled by the total weight of `t`. The types
    /// of `s` and `t` may differ.
    pub fn if_any(&mut self, s: MultisetExpr, t: MultisetExpr) -> Result<MultisetExpr> {
        self.if_any_node(s.0, t.0).map(MultisetExpr)
    }

    /// `s * a` for a `B × 1` or `1 × 1` tensor `a`.
    pub fn gate(&mut self, s: MultisetExpr, a: Tensor) -> Result<MultisetExpr> {
        self.scale_node(s.0, a.0).map(MultisetExpr)
    }

    /// `s * c` for a literal `c`.
    pub fn scale_const(&mut self, s: MultisetExpr, c: f64) -> Result<MultisetExpr> {
        let a = self.constant(DenseBatch::scalar(c));
        self.gate(s, a)
    }

    /// Compiles a query into this graph. Variables resolve through `env`.
    pub fn bind(&mut self, q: &Query, env: &HashMap<String, MultisetExpr>) -> Result<MultisetExpr> {
        let at = |e: NqlError| e.at(q.span);
        // Errors from a `.name(...)` call point at the call, not its receiver.
        let at_call = |input: &Query| {
            let span = if input.span.end < q.span.end {
                Span::new(input.span.end, q.span.end)
            } else {
                q.span
            };
            move |e: NqlError| e.at(span)
        };
        match &q.kind {
            QueryKind::One { entity, type_name } => self.one(entity, type_name).map_err(at),
            QueryKind::None { type_name } => self.none(type_name).map_err(at),
            QueryKind::All { type_name } => self.all(type_name).map_err(at),
            QueryKind::Var(v) => env
                .get(v)
                .copied()
                .ok_or_else(|| NqlError::UnboundVariable(v.clone()).at(q.span)),
            QueryKind::RelCall {
                input,
                relation,
                inverse,
            } => {
                let s = self.bind(input, env)?;
                self.rel_call(s, relation, *inverse).map_err(at_call(input))
            }
            QueryKind::Follow { input, arg, inverse } => {
                let s = self.bind(input, env)?;
                match arg {
                    FollowArg::Name(n) => self.follow_name(s, n, *inverse).map_err(at_call(input)),
                    FollowArg::Expr(r) => {
                        let r = self.bind(r, env)?;
                        self.follow(s, r, *inverse).map_err(at_call(input))
                    }
                }
            }
            QueryKind::Union(l, r) => {
                let (l, r) = (self.bind(l, env)?, self.bind(r, env)?);
                self.union(l, r).map_err(at)
            }
            QueryKind::Intersect(l, r) => {
                let (l, r) = (self.bind(l, env)?, self.bind(r, env)?);
                self.intersect(l, r).map_err(at)
            }
            QueryKind::IfAny { input, cond } => {
                let (s, t) = (self.bind(input, env)?, self.bind(cond, env)?);
                self.if_any(s, t).map_err(at_call(input))
            }
            QueryKind::Scale { input, factor } => {
                let s = self.bind(input, env)?;
                self.scale_const(s, *factor).map_err(at)
            }
        }
    }

    /// Compiles every statement of a program; returns the value of the last.
    pub fn bind_program(&mut self, p: &Program) -> Result<MultisetExpr> {
        let mut env = HashMap::new();
        let mut last = None;
        for st in &p.statements {
            let e = self.bind(&st.expr, &env)?;
            if let Some(name) = &st.name {
                env.insert(name.clone(), e);
            }
            last = Some(e);
        }
        last.ok_or_else(|| NqlError::Usage("empty program".into()))
    }
}

/// Renders an error with a caret line under its source span, when it has one.
pub fn render_diagnostic(err: &NqlError, source: &str) -> String {
    let Some(span) = err.span() else {
        return format!("error: {err}");
    };
    let (line, col) = span.line_col(source);
    let text = source.lines().nth(line - 1).unwrap_or("");
    let line_start = source
        .match_indices('\n')
        .nth(line.wrapping_sub(2))
        .map_or(0, |(i, _)| i + 1);
    let line_start = if line == 1 { 0 } else { line_start };
    let end = span.end.min(line_start + text.len()).max(span.start);
    let width = source
        .get(span.start.min(source.len())..end.min(source.len()))
        .map_or(1, |s| s.chars().count())
        .max(1);
    let gutter = " ".repeat(line.to_string().len());
    format!(
        "error: {err}\n{gutter}--> {line}:{col}\n{gutter} |\n{line} | {text}\n{gutter} | {}{}",
        " ".repeat(col - 1),
        "^".repeat(width)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnostic_points_at_span() {
        let src = "a = x\nb = a.wife(";
        let err: NqlError = parse_program(src).unwrap_err().into();
        let d = render_diagnostic(&err, src);
        assert!(d.contains("--> 2:12"), "{d}");
        assert!(d.ends_with("           ^"), "{d}");
    }
}
