//! Canonical text form. Printing then parsing yields an equal AST.

use std::fmt::{self, Write};

use super::ast::{FollowArg, Program, Query, QueryKind};

const OR: u8 = 0;
const AND: u8 = 1;
const TERM: u8 = 2;
const POSTFIX: u8 = 3;

fn level(q: &Query) -> u8 {
    match q.kind {
        QueryKind::Union(..) => OR,
        QueryKind::Intersect(..) => AND,
        QueryKind::Scale { .. } => TERM,
        _ => POSTFIX,
    }
}

pub(crate) fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn type_name(s: &str) -> String {
    if is_ident(s) {
        s.to_string()
    } else {
        quote_str(s)
    }
}

fn write_at(out: &mut String, q: &Query, min: u8) -> fmt::Result {
    if level(q) < min {
        out.push('(');
        write_q(out, q)?;
        out.push(')');
        Ok(())
    } else {
        write_q(out, q)
    }
}

fn write_q(out: &mut String, q: &Query) -> fmt::Result {
    match &q.kind {
        QueryKind::One { entity, type_name: t } => {
            write!(out, "one({}, {})", quote_str(entity), type_name(t))
        }
        QueryKind::None { type_name: t } => write!(out, "none({})", type_name(t)),
        QueryKind::All { type_name: t } => write!(out, "all({})", type_name(t)),
        QueryKind::Var(v) => write!(out, "{v}"),
        QueryKind::RelCall {
            input,
            relation,
            inverse,
        } => {
            write_at(out, input, POSTFIX)?;
            write!(out, ".{relation}({})", if *inverse { "-1" } else { "" })
        }
        QueryKind::Follow { input, arg, inverse } => {
            write_at(out, input, POSTFIX)?;
            out.push_str(".follow(");
            match arg {
                FollowArg::Name(n) => out.push_str(&quote_str(n)),
                FollowArg::Expr(e) => write_q(out, e)?,
            }
            if *inverse {
                out.push_str(", -1");
            }
            out.push(')');
            Ok(())
        }
        QueryKind::IfAny { input, cond } => {
            write_at(out, input, POSTFIX)?;
            out.push_str(".if_any(");
            write_q(out, cond)?;
            out.push(')');
            Ok(())
        }
        QueryKind::Scale { input, factor } => {
            write_at(out, input, TERM)?;
            write!(out, " * {factor:?}")
        }
        QueryKind::Union(l, r) => {
            write_at(out, l, OR)?;
            out.push_str(" | ");
            write_at(out, r, AND)
        }
        QueryKind::Intersect(l, r) => {
            write_at(out, l, AND)?;
            out.push_str(" & ");
            write_at(out, r, TERM)
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_q(&mut s, self)?;
        f.write_str(&s)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, st) in self.statements.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            if let Some(name) = &st.name {
                write!(f, "{name} = ")?;
            }
            write!(f, "{}", st.expr)?;
        }
        Ok(())
    }
}
