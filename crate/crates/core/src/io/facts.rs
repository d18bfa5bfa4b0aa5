//! Tab-separated fact files: `relation<TAB>subject<TAB>object[<TAB>weight]`.
//!
//! `#` starts a comment line; blank lines are ignored. Parsing streams one
//! line at a time so multi-million-tuple files never sit in memory as text.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{NqlError, Result};

/// One weighted `(relation, subject, object)` fact.
#[derive(Debug, Clone, PartialEq)]
pub struct FactTriple {
    pub relation: String,
    pub subject: String,
    pub object: String,
    pub weight: f64,
    /// Source line, when the fact came from a file.
    pub line: Option<usize>,
}

impl FactTriple {
    pub fn new(relation: &str, subject: &str, object: &str) -> Self {
        FactTriple {
            relation: relation.to_string(),
            subject: subject.to_string(),
            object: object.to_string(),
            weight: 1.0,
            line: None,
        }
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

/// Streaming fact parser over any buffered reader.
pub struct FactReader<R> {
    reader: R,
    file: Option<String>,
    line: usize,
    buf: String,
}

impl<R: BufRead> FactReader<R> {
    pub fn new(reader: R, file: Option<String>) -> Self {
        FactReader {
            reader,
            file,
            line: 0,
            buf: String::new(),
        }
    }

    fn error(&self, column: usize, message: String) -> NqlError {
        NqlError::Format {
            file: self.file.clone(),
            line: self.line,
            column,
            message,
        }
    }
}

impl<R: BufRead> Iterator for FactReader<R> {
    type Item = Result<FactTriple>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let text = self.buf.trim_end_matches(['\n', '\r']);
            if text.trim().is_empty() || text.trim_start().starts_with('#') {
                continue;
            }
            return Some(parse_fact_line(text, self.line).map_err(|(col, msg)| self.error(col, msg)));
        }
    }
}

fn parse_fact_line(text: &str, line: usize) -> std::result::Result<FactTriple, (usize, String)> {
    let fields: Vec<&str> = text.split('\t').collect();
    let column_of =
        |k: usize| -> usize { fields[..k].iter().map(|f| f.chars().count() + 1).sum::<usize>() + 1 };
    if !(3..=4).contains(&fields.len()) {
        let col = if fields.len() > 4 {
            column_of(4)
        } else {
            text.chars().count() + 1
        };
        return Err((
            col,
            format!(
                "expected 3 or 4 tab-separated fields (relation, subject, object[, weight]), found {}",
                fields.len()
            ),
        ));
    }
    for (k, f) in fields[..3].iter().enumerate() {
        if f.is_empty() {
            return Err((column_of(k), "empty field".to_string()));
        }
    }
    let weight = match fields.get(3) {
        None => 1.0,
        Some(w) => match w.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => v,
            Ok(v) => return Err((column_of(3), format!("weight {v} must be finite and nonnegative"))),
            Err(_) => return Err((column_of(3), format!("cannot parse weight `{w}`"))),
        },
    };
    Ok(FactTriple {
        relation: fields[0].to_string(),
        subject: fields[1].to_string(),
        object: fields[2].to_string(),
        weight,
        line: Some(line),
    })
}

pub fn load_facts(path: impl AsRef<Path>) -> Result<FactReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    Ok(FactReader::new(
        BufReader::with_capacity(1 << 16, file),
        Some(path.display().to_string()),
    ))
}

/// Parses facts held in memory.
pub fn parse_facts(text: &str) -> Result<Vec<FactTriple>> {
    FactReader::new(text.as_bytes(), None).collect()
}

/// Writes facts in the TSV format; unit weights are omitted.
pub fn write_facts<'a, W: Write>(mut out: W, facts: impl IntoIterator<Item = &'a FactTriple>) -> Result<()> {
    for f in facts {
        for field in [&f.relation, &f.subject, &f.object] {
            if field.contains(['\t', '\n', '\r']) {
                return Err(NqlError::Validation(format!(
                    "fact field `{field}` contains a tab or newline"
                )));
            }
        }
        if f.weight == 1.0 {
            writeln!(out, "{}\t{}\t{}", f.relation, f.subject, f.object)?;
        } else {
            writeln!(out, "{}\t{}\t{}\t{:?}", f.relation, f.subject, f.object, f.weight)?;
        }
    }
    Ok(())
}
