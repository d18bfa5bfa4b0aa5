use super::ast::Span;
use super::parser::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Number(f64),
    Dot,
    Comma,
    LParen,
    RParen,
    Pipe,
    Amp,
    Star,
    Assign,
    /// Statement separator: `;` or a newline outside parentheses.
    Sep,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Number(n) => format!("number {n}"),
            Tok::Dot => "`.`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Star => "`*`".into(),
            Tok::Assign => "`=`".into(),
            Tok::Sep => "end of statement".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn number_len(bytes: &[u8]) -> usize {
    let mut i = 0;
    if bytes.first() == Some(&b'-') {
        i += 1;
    }
    let digits = |i: &mut usize| {
        let s = *i;
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
        *i > s
    };
    let int = digits(&mut i);
    if i < bytes.len() && bytes[i] == b'.' {
        let save = i;
        i += 1;
        if !digits(&mut i) && !int {
            return 0;
        }
        if !int && i == save + 1 {
            return 0;
        }
    } else if !int {
        return 0;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let save = i;
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        if !digits(&mut i) {
            i = save;
        }
    }
    i
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = |tok: Tok| Token {
            tok,
            span: Span::new(start, start + 1),
        };
        match c {
            b' ' | b'\t' | b'\r' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'\n' => {
                if depth == 0 {
                    out.push(simple(Tok::Sep));
                }
                i += 1;
            }
            b';' => {
                out.push(simple(Tok::Sep));
                i += 1;
            }
            b'.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                out.push(simple(Tok::Dot));
                i += 1;
            }
            b',' => {
                out.push(simple(Tok::Comma));
                i += 1;
            }
            b'(' => {
                depth += 1;
                out.push(simple(Tok::LParen));
                i += 1;
            }
            b')' => {
                depth = depth.saturating_sub(1);
                out.push(simple(Tok::RParen));
                i += 1;
            }
            b'|' => {
                out.push(simple(Tok::Pipe));
                i += 1;
            }
            b'&' => {
                out.push(simple(Tok::Amp));
                i += 1;
            }
            b'*' => {
                out.push(simple(Tok::Star));
                i += 1;
            }
            b'=' => {
                out.push(simple(Tok::Assign));
                i += 1;
            }
            b'\'' | b'"' => {
                let quote = c as char;
                let mut s = String::new();
                let mut chars = src[i + 1..].char_indices();
                let mut end = None;
                while let Some((k, ch)) = chars.next() {
                    match ch {
                        '\\' => match chars.next() {
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, 't')) => s.push('\t'),
                            Some((_, e)) => s.push(e),
                            None => break,
                        },
                        ch if ch == quote => {
                            end = Some(i + 1 + k + 1);
                            break;
                        }
                        ch => s.push(ch),
                    }
                }
                let Some(end) = end else {
                    return Err(ParseError::new(
                        Span::new(start, src.len()),
                        src,
                        vec!["closing quote".into()],
                        "end of input".into(),
                    ));
                };
                out.push(Token {
                    tok: Tok::Str(s),
                    span: Span::new(start, end),
                });
                i = end;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(src[start..i].to_string()),
                    span: Span::new(start, i),
                });
            }
            b'-' | b'0'..=b'9' | b'.' => {
                let len = number_len(&bytes[i..]);
                let parsed = (len > 0).then(|| src[i..i + len].parse::<f64>().ok()).flatten();
                match parsed {
                    Some(v) => {
                        out.push(Token {
                            tok: Tok::Number(v),
                            span: Span::new(start, start + len),
                        });
                        i += len;
                    }
                    None => {
                        return Err(ParseError::new(
                            Span::new(start, start + 1),
                            src,
                            vec!["number".into()],
                            format!("`{}`", c as char),
                        ))
                    }
                }
            }
            _ => {
                let ch = src[i..].chars().next().expect("in bounds");
                return Err(ParseError::new(
                    Span::new(start, start + ch.len_utf8()),
                    src,
                    vec!["expression".into()],
                    format!("unexpected character `{ch}`"),
                ));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(src.len(), src.len()),
    });
    Ok(out)
}
