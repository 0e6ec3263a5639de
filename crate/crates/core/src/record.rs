//! JSON Lines records and run metadata.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::annotate::{KindSet, SpanRecord, TextInput};
use crate::chain::PlanLevel;
use crate::control::MatchPolicy;
use crate::error::{Error, Result};

/// One example flowing through the pipeline. Unknown fields are preserved.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entities: Option<Vec<SpanRecord>>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl DatasetRecord {
    pub fn new(id: impl Into<String>) -> Self {
        DatasetRecord {
            id: id.into(),
            ..Default::default()
        }
    }

    pub fn document(&self) -> Result<&str> {
        self.document.as_deref().ok_or_else(|| self.missing("document"))
    }

    pub fn summary(&self) -> Result<&str> {
        self.summary.as_deref().ok_or_else(|| self.missing("summary"))
    }

    pub fn predicted(&self) -> Result<&str> {
        self.predicted.as_deref().ok_or_else(|| self.missing("predicted"))
    }

    fn missing(&self, field: &'static str) -> Error {
        Error::MissingField {
            id: self.id.clone(),
            field,
        }
    }

    /// Annotation input for `text`, carrying this record's id and entities.
    pub fn input<'a>(&'a self, text: &'a str) -> TextInput<'a> {
        let input = TextInput::new(text).with_id(&self.id);
        match &self.entities {
            Some(spans) => input.with_entities(spans),
            None => input,
        }
    }
}

/// Recognizer selection as recorded in metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecognizerChoice {
    Passthrough,
    Heuristic,
    External,
}

impl std::str::FromStr for RecognizerChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "passthrough" => Ok(RecognizerChoice::Passthrough),
            "heuristic" => Ok(RecognizerChoice::Heuristic),
            "external" => Ok(RecognizerChoice::External),
            other => Err(format!("unknown recognizer {other:?}")),
        }
    }
}

/// Everything that determines a run's output. Written verbatim into each output header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub kinds: KindSet,
    pub level: PlanLevel,
    pub recognizer: RecognizerChoice,
    pub stemming: bool,
    pub policy: MatchPolicy,
    pub n_max: usize,
    pub mask_token: String,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kinds: KindSet::ALL,
            level: PlanLevel::Summary,
            recognizer: RecognizerChoice::Heuristic,
            stemming: true,
            policy: MatchPolicy::default(),
            n_max: crate::pretrain::DEFAULT_N_MAX,
            mask_token: crate::pretrain::DEFAULT_MASK_TOKEN.to_string(),
            seed: 0,
        }
    }
}

pub const META_KEY: &str = "_meta";

/// `{"_meta": {...}}` header line content.
pub fn meta_header(command: &str, config: &RunConfig) -> Value {
    let mut meta = serde_json::to_value(config).expect("config serializes");
    meta.as_object_mut()
        .expect("config is an object")
        .insert("command".to_string(), Value::String(command.to_string()));
    let mut header = Map::new();
    header.insert(META_KEY.to_string(), meta);
    Value::Object(header)
}

/// A parsed line: a record, a skipped header, or a per-line error.
#[derive(Debug)]
pub enum Line {
    Record(DatasetRecord),
    Meta,
    Error { line: usize, message: String },
}

/// Streams records from JSON Lines, skipping blank lines and metadata headers.
pub struct RecordReader<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(reader: R) -> Self {
        RecordReader {
            inner: reader.lines(),
            line_no: 0,
        }
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = std::io::Result<(usize, Line)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.inner.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e)),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed = match serde_json::from_str::<Value>(&line) {
                Ok(Value::Object(obj)) if obj.contains_key(META_KEY) => Line::Meta,
                Ok(value) => match serde_json::from_value::<DatasetRecord>(value) {
                    Ok(rec) => Line::Record(rec),
                    Err(e) => Line::Error {
                        line: self.line_no,
                        message: e.to_string(),
                    },
                },
                Err(e) => Line::Error {
                    line: self.line_no,
                    message: e.to_string(),
                },
            };
            return Some(Ok((self.line_no, parsed)));
        }
    }
}

/// Reads every record of a file, failing on the first malformed line.
pub fn read_records(reader: impl BufRead, origin: &str) -> Result<Vec<DatasetRecord>> {
    let mut out = Vec::new();
    for item in RecordReader::new(reader) {
        match item? {
            (_, Line::Record(r)) => out.push(r),
            (_, Line::Meta) => {}
            (line, Line::Error { message, .. }) => {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line,
                    message,
                })
            }
        }
    }
    Ok(out)
}

/// Writes one compact JSON value per line.
pub fn write_json_line(out: &mut impl Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_survive() {
        let line = r#"{"id":"a","summary":"S.","source_url":"http://x","rank":3}"#;
        let rec: DatasetRecord = serde_json::from_str(line).unwrap();
        assert_eq!(rec.extra.len(), 2);
        let back = serde_json::to_string(&rec).unwrap();
        assert_eq!(back, r#"{"id":"a","summary":"S.","rank":3,"source_url":"http://x"}"#);
    }

    #[test]
    fn reader_skips_meta_and_reports_bad_lines() {
        let data = "{\"_meta\":{}}\n\n{\"id\":\"a\"}\nnot json\n{\"summary\":\"no id\"}\n";
        let lines: Vec<_> = RecordReader::new(data.as_bytes()).map(|l| l.unwrap()).collect();
        assert!(matches!(lines[0], (1, Line::Meta)));
        assert!(matches!(&lines[1], (3, Line::Record(r)) if r.id == "a"));
        assert!(matches!(lines[2], (4, Line::Error { line: 4, .. })));
        assert!(matches!(lines[3], (5, Line::Error { .. })));
        assert!(read_records(data.as_bytes(), "x").is_err());
    }

    #[test]
    fn missing_fields() {
        let rec = DatasetRecord::new("r");
        assert!(matches!(rec.summary(), Err(Error::MissingField { field: "summary", .. })));
    }

    #[test]
    fn meta_header_is_stable() {
        let h = meta_header("stats", &RunConfig::default());
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.starts_with(r#"{"_meta":{"#));
        assert!(s.contains(r#""command":"stats""#));
        assert!(s.contains(r#""kinds":["named","date","number"]"#));
        assert_eq!(s, serde_json::to_string(&meta_header("stats", &RunConfig::default())).unwrap());
    }
}
