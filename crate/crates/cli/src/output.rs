use std::io::Write;

use clap::ValueEnum;
use serde_json::{Map, Value};

/// Version tag carried by every machine-readable record.
pub const RECORD_SCHEMA: &str = "nql.v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Writes either text lines or one JSON object per line. Both forms start
/// by echoing the seed: text as a `# seed: N` comment line, JSON as a field
/// of every record.
pub struct Output {
    format: Format,
    seed: u64,
    started: bool,
}

impl Output {
    pub fn new(format: Format, seed: u64) -> Self {
        Output {
            format,
            seed,
            started: false,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn start(&mut self) {
        if !self.started && self.format == Format::Text {
            println!("# seed: {}", self.seed);
        }
        self.started = true;
    }

    /// A line of human output; ignored in JSON mode.
    pub fn text(&mut self, line: impl AsRef<str>) {
        if self.format == Format::Text {
            self.start();
            println!("{}", line.as_ref());
        }
    }

    /// A JSON record; ignored in text mode. `fields` must be an object.
    pub fn record(&mut self, kind: &str, fields: Value) {
        if self.format != Format::Json {
            return;
        }
        let mut obj = Map::new();
        obj.insert("schema".into(), RECORD_SCHEMA.into());
        obj.insert("record".into(), kind.into());
        obj.insert("seed".into(), self.seed.into());
        if let Value::Object(f) = fields {
            obj.extend(f);
        }
        let mut stdout = std::io::stdout().lock();
        let _ = writeln!(stdout, "{}", Value::Object(obj));
        let _ = stdout.flush();
    }
}
