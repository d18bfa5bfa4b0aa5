use std::fmt;

use super::ast::{FollowArg, Program, Query, QueryKind, Span, Statement};
use super::lexer::{tokenize, Tok, Token};

/// A syntax error with its location and the tokens that would have been
/// accepted there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    pub(crate) fn new(span: Span, src: &str, expected: Vec<String>, found: String) -> Self {
        let (line, column) = span.line_col(src);
        ParseError {
            span,
            line,
            column,
            expected,
            found,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}:{}: expected ", self.line, self.column)?;
        match self.expected.as_slice() {
            [] => write!(f, "nothing")?,
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

impl std::error::Error for ParseError {}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

const EXPR_START: &[&str] = &["`one(`", "`all(`", "`none(`", "`(`", "variable"];

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    /// What may follow a complete expression. A `.` seen here came after a
    /// scale factor, where trailers are not allowed, so it is not listed.
    fn continuations(&self, end: &'static str) -> Vec<&'static str> {
        let mut exp = vec!["`|`", "`&`", "`*`", "`.`", end];
        if *self.peek() == Tok::Dot {
            exp.retain(|e| *e != "`.`");
        }
        exp
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let found = self.toks[self.pos].tok.describe();
        ParseError::new(
            self.span(),
            self.src,
            expected.iter().map(|s| s.to_string()).collect(),
            found,
        )
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Span, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.error(&[what]))
        }
    }

    fn skip_seps(&mut self) {
        while *self.peek() == Tok::Sep {
            self.bump();
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut statements = Vec::new();
        self.skip_seps();
        while *self.peek() != Tok::Eof {
            statements.push(self.statement()?);
            match self.peek() {
                Tok::Sep => self.skip_seps(),
                Tok::Eof => {}
                _ => {
                    let mut exp = self.continuations("end of statement");
                    if statements.last().is_some_and(|s| s.name.is_none()) {
                        exp.retain(|e| *e != "end of statement");
                        exp.push("end of input");
                    }
                    return Err(self.error(&exp));
                }
            }
        }
        if statements.is_empty() {
            return Err(self.error(EXPR_START));
        }
        Ok(Program { statements })
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let start = self.span();
        if let (Tok::Ident(name), Tok::Assign) = (self.peek().clone(), self.peek_at(1)) {
            self.bump();
            self.bump();
            let expr = self.expr()?;
            return Ok(Statement {
                name: Some(name),
                span: start.join(expr.span),
                expr,
            });
        }
        let expr = self.expr()?;
        Ok(Statement {
            name: None,
            span: expr.span,
            expr,
        })
    }

    fn expr(&mut self) -> Result<Query, ParseError> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.and_expr()?;
            let span = lhs.span.join(rhs.span);
            lhs = Query::new(QueryKind::Union(Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Query, ParseError> {
        let mut lhs = self.term()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.term()?;
            let span = lhs.span.join(rhs.span);
            lhs = Query::new(QueryKind::Intersect(Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Query, ParseError> {
        let mut q = self.atom()?;
        while *self.peek() == Tok::Dot {
            q = self.trailer(q)?;
        }
        while *self.peek() == Tok::Star {
            self.bump();
            let Tok::Number(factor) = *self.peek() else {
                return Err(self.error(&["number"]));
            };
            let end = self.bump().span;
            let span = q.span.join(end);
            q = Query::new(
                QueryKind::Scale {
                    input: Box::new(q),
                    factor,
                },
                span,
            );
        }
        Ok(q)
    }

    fn type_name(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["type name"])),
        }
    }

    fn atom(&mut self) -> Result<Query, ParseError> {
        let start = self.span();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                let end = self.expect(Tok::RParen, "`)`")?;
                Ok(Query::new(inner.kind, start.join(end)))
            }
            Tok::Ident(name) if *self.peek_at(1) == Tok::LParen => {
                let kind = match name.as_str() {
                    "one" => {
                        self.bump();
                        self.bump();
                        let Tok::Str(entity) = self.peek().clone() else {
                            return Err(self.error(&["entity name string"]));
                        };
                        self.bump();
                        self.expect(Tok::Comma, "`,`")?;
                        let type_name = self.type_name()?;
                        QueryKind::One { entity, type_name }
                    }
                    "all" | "none" => {
                        self.bump();
                        self.bump();
                        let type_name = self.type_name()?;
                        if name == "all" {
                            QueryKind::All { type_name }
                        } else {
                            QueryKind::None { type_name }
                        }
                    }
                    _ => return Err(self.error(&["`one`", "`all`", "`none`"])),
                };
                let end = self.expect(Tok::RParen, "`)`")?;
                Ok(Query::new(kind, start.join(end)))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Query::new(QueryKind::Var(name), start))
            }
            _ => Err(self.error(EXPR_START)),
        }
    }

    /// Optional `, -1` or `-1` marker. Returns whether it was present.
    fn inverse_flag(&mut self, leading_comma: bool) -> Result<bool, ParseError> {
        if leading_comma {
            if *self.peek() != Tok::Comma {
                return Ok(false);
            }
            self.bump();
        }
        match *self.peek() {
            Tok::Number(-1.0) => {
                self.bump();
                Ok(true)
            }
            _ if leading_comma => Err(self.error(&["`-1`"])),
            _ => Ok(false),
        }
    }

    fn trailer(&mut self, input: Query) -> Result<Query, ParseError> {
        let input_span = input.span;
        self.bump();
        let Tok::Ident(method) = self.peek().clone() else {
            return Err(self.error(&["relation name", "`follow`", "`if_any`"]));
        };
        self.bump();
        self.expect(Tok::LParen, "`(`")?;
        let kind = match method.as_str() {
            "follow" => {
                let arg = if let Tok::Str(name) = self.peek().clone() {
                    self.bump();
                    FollowArg::Name(name)
                } else {
                    FollowArg::Expr(Box::new(self.expr()?))
                };
                let inverse = self.inverse_flag(true)?;
                QueryKind::Follow {
                    input: Box::new(input),
                    arg,
                    inverse,
                }
            }
            "if_any" => QueryKind::IfAny {
                input: Box::new(input),
                cond: Box::new(self.expr()?),
            },
            _ => {
                let inverse = self.inverse_flag(false)?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(if inverse { &["`)`"] } else { &["`-1`", "`)`"] }));
                }
                QueryKind::RelCall {
                    input: Box::new(input),
                    relation: method,
                    inverse,
                }
            }
        };
        let end = self.expect(Tok::RParen, "`)`")?;
        Ok(Query::new(kind, input_span.join(end)))
    }
}

/// Parses a program of `name = expr` statements separated by newlines or
/// `;`. A single expression is a one-statement program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        src: text,
        toks,
        pos: 0,
    };
    p.program()
}

/// Parses a single expression.
pub fn parse(text: &str) -> Result<Query, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        src: text,
        toks,
        pos: 0,
    };
    p.skip_seps();
    let q = p.expr()?;
    p.skip_seps();
    if *p.peek() != Tok::Eof {
        let exp = p.continuations("end of input");
        return Err(p.error(&exp));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_then_relation() {
        let q = parse("one('Henry VIII','person_t').wife()").unwrap();
        assert_eq!(q, Query::one("Henry VIII", "person_t").rel("wife", false));
    }

    #[test]
    fn precedence_and_associativity() {
        let a = || Query::var("a");
        let q = parse("a | a & a | a").unwrap();
        assert_eq!(q, a().union(a().intersect(a())).union(a()));
        let q = parse("(a.son() | a.daughter()).son()").unwrap();
        assert_eq!(
            q,
            a().rel("son", false)
                .union(a().rel("daughter", false))
                .rel("son", false)
        );
    }

    #[test]
    fn follow_forms() {
        assert_eq!(
            parse("x.follow('wife', -1)").unwrap(),
            Query::var("x").follow_name("wife", true)
        );
        assert_eq!(
            parse("x.follow(one('son', rel_t) | one('daughter', rel_t))").unwrap(),
            Query::var("x").follow(
                Query::one("son", "rel_t").union(Query::one("daughter", "rel_t")),
                false
            )
        );
    }

    #[test]
    fn scale_and_if_any() {
        assert_eq!(
            parse("x.if_any(y) * -0.5 * 2").unwrap(),
            Query::var("x").if_any(Query::var("y")).scale(-0.5).scale(2.0)
        );
    }

    #[test]
    fn spans_cover_source() {
        let src = "one('a', t).r()";
        let q = parse(src).unwrap();
        assert_eq!(q.span, Span::new(0, src.len()));
    }

    #[test]
    fn errors_report_position_and_expectations() {
        let err = parse("x.son(").unwrap_err();
        assert_eq!((err.line, err.column), (1, 7));
        assert!(err.expected.contains(&"`)`".to_string()));
        let err = parse("x |").unwrap_err();
        assert_eq!(err.found, "end of input");
        let err = parse("one(a, t)").unwrap_err();
        assert_eq!(err.column, 5);
        let err = parse("x.son(2)").unwrap_err();
        assert_eq!(err.column, 7);
    }

    #[test]
    fn programs() {
        let p = parse_program("a = one('x', t).r()\nb = a | a; b.s()\n").unwrap();
        assert_eq!(p.statements.len(), 3);
        assert_eq!(p.statements[1].name.as_deref(), Some("b"));
        assert_eq!(*p.result(), Query::var("b").rel("s", false));
        assert!(parse_program("").is_err());
        let err = parse_program("a = x y").unwrap_err();
        assert_eq!(err.column, 7);
    }
}
