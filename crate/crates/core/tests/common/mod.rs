#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use frostkit::annotate::{Annotator, KindSet, PassThrough};
use frostkit::record::{read_records, DatasetRecord, RunConfig};
use frostkit::pipeline::Context;
use serde_json::Value;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn load(name: &str) -> Vec<DatasetRecord> {
    let path = data_path(name);
    read_records(BufReader::new(File::open(&path).unwrap()), name).unwrap()
}

pub fn expected(name: &str) -> Value {
    let text = std::fs::read_to_string(data_path(&format!("expected/{name}"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn passthrough() -> Annotator {
    Annotator::new(KindSet::ALL, PassThrough).unwrap()
}

pub fn context(annotator: Annotator) -> Context {
    Context {
        config: RunConfig::default(),
        annotator,
        strict: true,
    }
}

/// Walks two JSON values, collecting numeric deviations above `tol` and any
/// structural mismatch. Keys missing from `actual` are reported.
pub fn compare_json(expected: &Value, actual: &Value, tol: f64, path: &str, out: &mut Vec<String>) {
    match (expected, actual) {
        (Value::Object(e), Value::Object(a)) => {
            for (k, ev) in e {
                match a.get(k) {
                    Some(av) => compare_json(ev, av, tol, &format!("{path}.{k}"), out),
                    None => out.push(format!("{path}.{k}: missing")),
                }
            }
        }
        (Value::Array(e), Value::Array(a)) => {
            if e.len() != a.len() {
                out.push(format!("{path}: length {} vs {}", e.len(), a.len()));
                return;
            }
            for (i, (ev, av)) in e.iter().zip(a).enumerate() {
                compare_json(ev, av, tol, &format!("{path}[{i}]"), out);
            }
        }
        (Value::Number(e), Value::Number(a)) => {
            let (e, a) = (e.as_f64().unwrap(), a.as_f64().unwrap());
            if (e - a).abs() > tol {
                out.push(format!("{path}: expected {e}, got {a}"));
            }
        }
        (e, a) if e == a => {}
        (e, a) => out.push(format!("{path}: expected {e}, got {a}")),
    }
}
