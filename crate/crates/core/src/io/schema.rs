//! Line-oriented schema files.
//!
//! ```text
//! # comment
//! type person_t
//! type word_t oov
//! type color_t = red, green, blue
//! rel wife person_t person_t
//! group rel_t = aunt, brother, daughter
//! ```
//!
//! A type with an explicit entity list is closed: facts cannot add to it.
//! `oov` appends a sentinel entity that absorbs unknown names on lookup.
//! Declarations may appear in any order.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{NqlError, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TypeSpec {
    pub name: String,
    pub entities: Vec<String>,
    pub closed: bool,
    pub oov: bool,
    pub line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelationSpec {
    pub name: String,
    pub domain: String,
    pub range: String,
    pub line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupSpec {
    pub name: String,
    pub members: Vec<String>,
    pub line: Option<usize>,
}

/// Declared types, relations and relation groups.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SchemaSpec {
    pub types: Vec<TypeSpec>,
    pub relations: Vec<RelationSpec>,
    pub groups: Vec<GroupSpec>,
}

impl SchemaSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_type(mut self, name: &str) -> Self {
        self.types.push(TypeSpec {
            name: name.to_string(),
            ..Default::default()
        });
        self
    }

    pub fn with_oov_type(mut self, name: &str) -> Self {
        self.types.push(TypeSpec {
            name: name.to_string(),
            oov: true,
            ..Default::default()
        });
        self
    }

    pub fn with_closed_type(mut self, name: &str, entities: &[&str]) -> Self {
        self.types.push(TypeSpec {
            name: name.to_string(),
            entities: entities.iter().map(|e| e.to_string()).collect(),
            closed: true,
            ..Default::default()
        });
        self
    }

    pub fn with_relation(mut self, name: &str, domain: &str, range: &str) -> Self {
        self.relations.push(RelationSpec {
            name: name.to_string(),
            domain: domain.to_string(),
            range: range.to_string(),
            line: None,
        });
        self
    }

    pub fn with_group(mut self, name: &str, members: &[&str]) -> Self {
        self.groups.push(GroupSpec {
            name: name.to_string(),
            members: members.iter().map(|m| m.to_string()).collect(),
            line: None,
        });
        self
    }

    /// Checks name uniqueness and that every reference resolves.
    pub fn validate(&self) -> Result<()> {
        let err = |line: Option<usize>, msg: String| match line {
            Some(line) => NqlError::Format {
                file: None,
                line,
                column: 1,
                message: msg,
            },
            None => NqlError::Validation(msg),
        };
        let mut type_names = HashSet::new();
        for t in &self.types {
            if !type_names.insert(t.name.as_str()) {
                return Err(err(t.line, format!("type `{}` declared twice", t.name)));
            }
        }
        let mut rel_names = HashSet::new();
        for r in &self.relations {
            if !rel_names.insert(r.name.as_str()) {
                return Err(err(r.line, format!("relation `{}` declared twice", r.name)));
            }
            for t in [&r.domain, &r.range] {
                if !type_names.contains(t.as_str()) {
                    return Err(err(
                        r.line,
                        format!("relation `{}` refers to undeclared type `{t}`", r.name),
                    ));
                }
            }
        }
        let mut group_names = HashSet::new();
        for g in &self.groups {
            if !group_names.insert(g.name.as_str()) || type_names.contains(g.name.as_str()) {
                return Err(err(
                    g.line,
                    format!("group `{}` collides with another type or group", g.name),
                ));
            }
            if g.members.is_empty() {
                return Err(err(g.line, format!("group `{}` has no members", g.name)));
            }
            for m in &g.members {
                if !rel_names.contains(m.as_str()) {
                    return Err(err(
                        g.line,
                        format!("group `{}` refers to undeclared relation `{m}`", g.name),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Serializes back to the schema file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.types {
            let _ = write!(out, "type {}", t.name);
            if t.oov {
                out.push_str(" oov");
            }
            if t.closed {
                let _ = write!(out, " = {}", t.entities.join(", "));
            }
            out.push('\n');
        }
        for r in &self.relations {
            let _ = writeln!(out, "rel {} {} {}", r.name, r.domain, r.range);
        }
        for g in &self.groups {
            let _ = writeln!(out, "group {} = {}", g.name, g.members.join(", "));
        }
        out
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Parses schema text; `file` is used only in error messages.
pub fn parse_schema(text: &str, file: Option<&str>) -> Result<SchemaSpec> {
    let mut schema = SchemaSpec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let fail = |column: usize, message: String| NqlError::Format {
            file: file.map(str::to_string),
            line,
            column,
            message,
        };
        // Column (1-based) of the first occurrence of `needle` in the line.
        let col_of = |needle: &str| raw.find(needle).map_or(1, |b| raw[..b].chars().count() + 1);

        let (head, list) = match body.split_once('=') {
            Some((h, l)) => (h, Some(l)),
            None => (body, None),
        };
        let words: Vec<&str> = head.split_whitespace().collect();
        for w in &words[1..] {
            if !is_ident(w) {
                return Err(fail(col_of(w), format!("`{w}` is not a valid identifier")));
            }
        }
        let members = |l: &str| -> Vec<String> {
            l.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        };
        match words[0] {
            "type" => {
                let (name, oov) = match words.as_slice() {
                    [_, name] => (*name, false),
                    [_, name, "oov"] => (*name, true),
                    _ => {
                        return Err(fail(
                            1,
                            "expected `type <name> [oov] [= entity, ...]`".to_string(),
                        ))
                    }
                };
                let entities = list.map(members).unwrap_or_default();
                schema.types.push(TypeSpec {
                    name: name.to_string(),
                    closed: list.is_some(),
                    entities,
                    oov,
                    line: Some(line),
                });
            }
            "rel" => match (words.as_slice(), list) {
                ([_, name, domain, range], None) => schema.relations.push(RelationSpec {
                    name: name.to_string(),
                    domain: domain.to_string(),
                    range: range.to_string(),
                    line: Some(line),
                }),
                _ => {
                    return Err(fail(1, "expected `rel <name> <domain> <range>`".to_string()));
                }
            },
            "group" => match (words.as_slice(), list) {
                ([_, name], Some(l)) => {
                    let members = members(l);
                    if let Some(bad) = members.iter().find(|m| !is_ident(m)) {
                        return Err(fail(col_of(bad), format!("`{bad}` is not a valid relation name")));
                    }
                    schema.groups.push(GroupSpec {
                        name: name.to_string(),
                        members,
                        line: Some(line),
                    })
                }
                _ => {
                    return Err(fail(1, "expected `group <name> = <rel>, <rel>, ...`".to_string()));
                }
            },
            other => {
                return Err(fail(
                    col_of(other),
                    format!("unknown declaration `{other}`; expected type, rel or group"),
                ))
            }
        }
    }
    schema.validate().map_err(|e| match e {
        NqlError::Format {
            line,
            column,
            message,
            ..
        } => NqlError::Format {
            file: file.map(str::to_string),
            line,
            column,
            message,
        },
        e => e,
    })?;
    Ok(schema)
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<SchemaSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_schema(&text, Some(&path.display().to_string()))
}
