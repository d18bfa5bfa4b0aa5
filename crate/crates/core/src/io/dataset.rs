//! Question/answer datasets: `question<TAB>seed<TAB>target1,target2,...`.

use std::io::Write;
use std::path::Path;

use crate::error::{NqlError, Result};

/// One training example: a question, its seed entity, and the answer set.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub question: String,
    pub seed: String,
    pub targets: Vec<String>,
}

impl Example {
    pub fn new(question: &str, seed: &str, targets: &[&str]) -> Self {
        Example {
            question: question.to_string(),
            seed: seed.to_string(),
            targets: targets.iter().map(|t| t.to_string()).collect(),
        }
    }
}

pub fn parse_dataset(text: &str, file: Option<&str>) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fail = |column: usize, message: &str| NqlError::Format {
            file: file.map(str::to_string),
            line,
            column,
            message: message.to_string(),
        };
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(fail(
                1,
                "expected 3 tab-separated fields: question, seed entity, comma-separated targets",
            ));
        }
        let targets: Vec<String> = fields[2]
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        let targets_col = fields[0].chars().count() + fields[1].chars().count() + 3;
        if targets.is_empty() {
            return Err(fail(targets_col, "empty target set"));
        }
        if fields[1].is_empty() {
            return Err(fail(fields[0].chars().count() + 2, "empty seed entity"));
        }
        out.push(Example {
            question: fields[0].to_string(),
            seed: fields[1].to_string(),
            targets,
        });
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Example>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, Some(&path.display().to_string()))
}

pub fn write_dataset<W: Write>(mut out: W, examples: &[Example]) -> Result<()> {
    for ex in examples {
        let bad = |s: &str| s.contains(['\t', '\n']);
        if bad(&ex.question) || bad(&ex.seed) || ex.targets.iter().any(|t| bad(t) || t.contains(',')) {
            return Err(NqlError::Validation(format!(
                "example `{}` has a field that cannot be written as TSV",
                ex.question
            )));
        }
        writeln!(out, "{}\t{}\t{}", ex.question, ex.seed, ex.targets.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let data = vec![
            Example::new("who is the father of p1", "p1", &["p7"]),
            Example::new("who is the son of p2", "p2", &["p3", "p4"]),
        ];
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let back = parse_dataset(std::str::from_utf8(&buf).unwrap(), None).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse_dataset("q\tseed\n", None).is_err());
        let err = parse_dataset("q\ts\t \n", None).unwrap_err();
        assert!(
            matches!(
                err,
                NqlError::Format {
                    line: 1,
                    column: 5,
                    ..
                }
            ),
            "{err}"
        );
    }
}
