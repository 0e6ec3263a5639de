//! Streaming subcommand bodies over JSON Lines.
//!
//! Records are read in fixed-size chunks, processed in parallel and written in
//! input order, so memory is bounded by the chunk size. `evaluate` and the
//! document side of `drop-prompt` join by id and are held in memory.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::annotate::{
    Annotator, ExternalRecognizer, HeuristicRecognizer, NamedEntityRecognizer, PassThrough, SpanRecord,
};
use crate::chain::{
    build_chain, parse_augmented, serialize_sentence_level, serialize_summary_level, AugmentedTarget,
    EntityChain, PlanLevel, SentenceLevelTarget,
};
use crate::control::{check_record, drop_prompt, make_prompt, DropReport, FilterCounts, RejectReason};
use crate::error::{Error, Result};
use crate::eval::report::{build_report, score_all, EvalConfig, EvalReport, CSV_HEADER};
use crate::pretrain::{build_pretrain_example, select_gap_sentences};
use crate::record::{meta_header, write_json_line, DatasetRecord, Line, RecognizerChoice, RecordReader, RunConfig};
use crate::stats::{CorpusStats, StatsAccumulator, MARKDOWN_HEADER};

pub const CHUNK_SIZE: usize = 256;

/// Builds the annotator a run configuration asks for.
pub fn build_annotator(config: &RunConfig, entities_file: Option<&Path>, gazetteer: Option<&Path>) -> Result<Annotator> {
    let recognizer: Arc<dyn NamedEntityRecognizer> = match config.recognizer {
        RecognizerChoice::Passthrough => Arc::new(PassThrough),
        RecognizerChoice::Heuristic => Arc::new(match gazetteer {
            Some(path) => HeuristicRecognizer::from_gazetteer_file(path)?,
            None => HeuristicRecognizer::new(),
        }),
        RecognizerChoice::External => {
            let path =
                entities_file.ok_or_else(|| Error::Failed("the external recognizer requires --entities-file".into()))?;
            Arc::new(ExternalRecognizer::from_path(path)?)
        }
    };
    Annotator::from_arc(config.kinds, recognizer)
}

/// Shared state of one run.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub annotator: Annotator,
    /// Abort on the first bad record instead of skipping it.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub line: usize,
    pub id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    /// Records processed successfully.
    pub records: usize,
    pub failures: Vec<Failure>,
}

impl RunSummary {
    fn fail(&mut self, strict: bool, line: usize, id: Option<String>, message: String) -> Result<()> {
        if strict {
            return Err(Error::Record { line, id, message });
        }
        self.failures.push(Failure { line, id, message });
        Ok(())
    }
}

#[derive(Debug)]
enum Item {
    Record(usize, DatasetRecord),
    Bad(usize, String),
}

fn jsonl_items(reader: impl BufRead) -> impl Iterator<Item = std::io::Result<Item>> {
    RecordReader::new(reader).filter_map(|r| match r {
        Err(e) => Some(Err(e)),
        Ok((line, Line::Record(rec))) => Some(Ok(Item::Record(line, rec))),
        Ok((_, Line::Meta)) => None,
        Ok((line, Line::Error { message, .. })) => Some(Ok(Item::Bad(line, message))),
    })
}

/// One document per non-blank line; the id is the line number.
fn text_items(reader: impl BufRead) -> impl Iterator<Item = std::io::Result<Item>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e)),
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => {
            let mut rec = DatasetRecord::new((i + 1).to_string());
            rec.document = Some(l);
            Some(Ok(Item::Record(i + 1, rec)))
        }
    })
}

/// Runs `work` over chunks in parallel and hands results to `emit` in input order.
fn drive<T, I, W, E>(mut items: I, strict: bool, work: W, mut emit: E) -> Result<RunSummary>
where
    T: Send,
    I: Iterator<Item = std::io::Result<Item>>,
    W: Fn(&DatasetRecord) -> Result<T> + Sync,
    E: FnMut(T) -> Result<()>,
{
    let mut summary = RunSummary::default();
    let mut chunk = Vec::with_capacity(CHUNK_SIZE);
    loop {
        chunk.clear();
        for item in items.by_ref().take(CHUNK_SIZE) {
            chunk.push(item?);
        }
        if chunk.is_empty() {
            return Ok(summary);
        }
        let results: Vec<Option<Result<T>>> = chunk
            .par_iter()
            .map(|item| match item {
                Item::Record(_, rec) => Some(work(rec)),
                Item::Bad(..) => None,
            })
            .collect();
        for (item, result) in chunk.drain(..).zip(results) {
            match (item, result) {
                (Item::Record(_, _), Some(Ok(value))) => {
                    summary.records += 1;
                    emit(value)?;
                }
                (Item::Record(line, rec), Some(Err(e))) => summary.fail(strict, line, Some(rec.id), e.to_string())?,
                (Item::Record(line, rec), None) => summary.fail(strict, line, Some(rec.id), "not processed".into())?,
                (Item::Bad(line, message), _) => summary.fail(strict, line, None, message)?,
            }
        }
    }
}

/// Which text field of a record to annotate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TextField {
    #[default]
    Summary,
    Document,
    Predicted,
}

impl FromStr for TextField {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "summary" => Ok(TextField::Summary),
            "document" => Ok(TextField::Document),
            "predicted" => Ok(TextField::Predicted),
            other => Err(format!("unknown field {other:?}")),
        }
    }
}

impl TextField {
    fn get(self, rec: &DatasetRecord) -> Result<&str> {
        match self {
            TextField::Summary => rec.summary(),
            TextField::Document => rec.document(),
            TextField::Predicted => rec.predicted(),
        }
    }
}

/// Fills `entities` with the spans found in `field`.
pub fn cmd_annotate(input: impl BufRead, out: &mut impl Write, ctx: &Context, field: TextField) -> Result<RunSummary> {
    write_json_line(out, &meta_header("annotate", &ctx.config))?;
    drive(
        jsonl_items(input),
        ctx.strict,
        |rec| {
            let annotated = ctx.annotator.annotate(&rec.input(field.get(rec)?))?;
            let mut rec = rec.clone();
            rec.entities = Some(
                annotated
                    .spans
                    .iter()
                    .map(|s| SpanRecord::new(s.text.clone(), s.kind, s.start, s.end))
                    .collect(),
            );
            Ok(rec)
        },
        |rec| write_json_line(out, &rec),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedRecord {
    pub id: String,
    pub source: String,
    pub target: String,
}

pub fn augment_record(rec: &DatasetRecord, ctx: &Context) -> Result<AugmentedRecord> {
    let annotated = ctx.annotator.annotate(&rec.input(rec.summary()?))?;
    let target = match ctx.config.level {
        PlanLevel::Summary => serialize_summary_level(&AugmentedTarget::from_annotated(&annotated))?,
        PlanLevel::Sentence => serialize_sentence_level(&SentenceLevelTarget::from_annotated(&annotated))?,
    };
    Ok(AugmentedRecord {
        id: rec.id.clone(),
        source: rec.document()?.to_string(),
        target,
    })
}

/// Writes `{id, source, target}` training pairs at the configured level.
pub fn cmd_augment(input: impl BufRead, out: &mut impl Write, ctx: &Context) -> Result<RunSummary> {
    write_json_line(out, &meta_header("augment", &ctx.config))?;
    drive(
        jsonl_items(input),
        ctx.strict,
        |rec| augment_record(rec, ctx),
        |r| write_json_line(out, &r),
    )
}

fn rejected_value(mut rec: DatasetRecord, reason: &RejectReason) -> DatasetRecord {
    rec.extra
        .insert("reject_reason".to_string(), Value::String(reason.to_string()));
    if let RejectReason::Unsupported(entities) = reason {
        rec.extra.insert(
            "unsupported".to_string(),
            Value::Array(entities.iter().cloned().map(Value::String).collect()),
        );
    }
    rec
}

/// Splits records into fully extractive summaries and the rest.
pub fn cmd_filter(
    input: impl BufRead,
    kept: &mut impl Write,
    rejected: &mut impl Write,
    ctx: &Context,
) -> Result<(RunSummary, FilterCounts)> {
    write_json_line(kept, &meta_header("filter", &ctx.config))?;
    write_json_line(rejected, &meta_header("filter", &ctx.config))?;
    let mut counts = FilterCounts::default();
    let policy = ctx.config.policy;
    let summary = drive(
        jsonl_items(input),
        ctx.strict,
        |rec| match check_record(rec, &ctx.annotator, policy) {
            Err(RejectReason::Failed(msg)) if ctx.strict => Err(Error::Failed(msg)),
            verdict => Ok((rec.clone(), verdict)),
        },
        |(rec, verdict)| {
            counts.total += 1;
            match verdict {
                Ok(()) => {
                    counts.kept += 1;
                    write_json_line(kept, &rec)
                }
                Err(reason) => {
                    counts.rejected += 1;
                    write_json_line(rejected, &rejected_value(rec, &reason))
                }
            }
        },
    )?;
    Ok((summary, counts))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub id: String,
    pub original_chain: EntityChain,
    pub dropped_chain: EntityChain,
    pub report: DropReport,
    /// Forced decoder prefix for re-decoding.
    pub prompt: String,
}

/// The predicted chain: parsed from the output when it has one, otherwise
/// annotated from the plain summary.
pub fn predicted_chain(rec: &DatasetRecord, annotator: &Annotator) -> Result<EntityChain> {
    let text = rec.predicted.as_deref().map_or_else(|| rec.summary(), Ok)?;
    let parsed = parse_augmented(text);
    if !parsed.malformed || parsed.target.chain.has_entities() {
        return Ok(parsed.target.chain);
    }
    Ok(build_chain(&annotator.annotate(&rec.input(&parsed.target.summary))?))
}

pub fn drop_record(rec: &DatasetRecord, document: &str, ctx: &Context) -> Result<DropRecord> {
    let original = predicted_chain(rec, &ctx.annotator)?;
    let (dropped, report) = drop_prompt(&original, document, ctx.config.policy);
    Ok(DropRecord {
        id: rec.id.clone(),
        prompt: make_prompt(&dropped)?,
        original_chain: original,
        dropped_chain: dropped,
        report,
    })
}

/// Rewrites each predicted chain to its supported part. Documents come from
/// `documents` when given, else from each record's own `document` field.
pub fn cmd_drop_prompt(
    predictions: impl BufRead,
    documents: Option<&[DatasetRecord]>,
    out: &mut impl Write,
    ctx: &Context,
) -> Result<RunSummary> {
    let index: Option<HashMap<&str, &DatasetRecord>> = match documents {
        Some(docs) => {
            let mut map = HashMap::with_capacity(docs.len());
            for d in docs {
                if map.insert(d.id.as_str(), d).is_some() {
                    return Err(Error::DuplicateId {
                        id: d.id.clone(),
                        file: "documents".into(),
                    });
                }
            }
            Some(map)
        }
        None => None,
    };
    write_json_line(out, &meta_header("drop-prompt", &ctx.config))?;
    drive(
        jsonl_items(predictions),
        ctx.strict,
        |rec| {
            let document = match &index {
                Some(map) => map
                    .get(rec.id.as_str())
                    .ok_or_else(|| Error::MissingId {
                        id: rec.id.clone(),
                        file: "documents".into(),
                    })?
                    .document()?,
                None => rec.document()?,
            };
            drop_record(rec, document, ctx)
        },
        |r| write_json_line(out, &r),
    )
}

fn with_meta(command: &str, config: &RunConfig, body: &impl Serialize) -> Result<Value> {
    let mut obj: Map<String, Value> = match meta_header(command, config) {
        Value::Object(m) => m,
        _ => unreachable!("header is an object"),
    };
    match serde_json::to_value(body)? {
        Value::Object(fields) => obj.extend(fields),
        other => {
            obj.insert("value".into(), other);
        }
    }
    Ok(Value::Object(obj))
}

/// Scores predictions and writes one report object, or a CSV header and row.
pub fn cmd_evaluate(
    predictions: &[DatasetRecord],
    references: &[DatasetRecord],
    documents: &[DatasetRecord],
    out: &mut impl Write,
    ctx: &Context,
    eval: &EvalConfig,
    csv: bool,
) -> Result<EvalReport> {
    let scored = score_all(predictions, references, documents, &ctx.annotator, eval)?;
    if ctx.strict {
        if let Some((id, Err(e))) = scored.iter().find(|(_, r)| r.is_err()) {
            return Err(Error::Record {
                line: 0,
                id: Some(id.clone()),
                message: e.to_string(),
            });
        }
    }
    let report = build_report(&scored, eval);
    if csv {
        writeln!(out, "{CSV_HEADER}")?;
        writeln!(out, "{}", report.csv_row())?;
    } else {
        write_json_line(out, &with_meta("evaluate", &ctx.config, &report)?)?;
    }
    Ok(report)
}

/// Corpus statistics over annotated summaries; `markdown` names the table row.
pub fn cmd_stats(
    input: impl BufRead,
    out: &mut impl Write,
    ctx: &Context,
    markdown: Option<&str>,
) -> Result<(RunSummary, CorpusStats)> {
    let mut acc = StatsAccumulator::default();
    let summary = drive(
        jsonl_items(input),
        ctx.strict,
        |rec| ctx.annotator.annotate(&rec.input(rec.summary()?)),
        |annotated| {
            acc.add(&annotated);
            Ok(())
        },
    )?;
    for _ in &summary.failures {
        acc.add_failure();
    }
    let stats = acc.finish();
    match markdown {
        Some(name) => {
            writeln!(out, "{MARKDOWN_HEADER}")?;
            writeln!(out, "{}", stats.markdown_row(name))?;
        }
        None => write_json_line(out, &with_meta("stats", &ctx.config, &stats)?)?,
    }
    Ok((summary, stats))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PretrainRecord {
    pub id: String,
    pub masked_input: String,
    pub target: String,
    pub selected: Vec<usize>,
}

pub fn pretrain_record(rec: &DatasetRecord, ctx: &Context) -> Result<PretrainRecord> {
    let document = ctx.annotator.annotate(&rec.input(rec.document()?))?;
    let selection = select_gap_sentences(&document, ctx.config.n_max, &ctx.config.mask_token, ctx.config.stemming)?;
    let example = build_pretrain_example(&document, &selection)?;
    Ok(PretrainRecord {
        id: rec.id.clone(),
        masked_input: example.masked_input,
        target: example.target,
        selected: selection.selected,
    })
}

/// Gap-sentence examples. With `plain_text`, each non-blank line is a document.
pub fn cmd_pretrain_prep(input: impl BufRead, out: &mut impl Write, ctx: &Context, plain_text: bool) -> Result<RunSummary> {
    write_json_line(out, &meta_header("pretrain-prep", &ctx.config))?;
    let work = |rec: &DatasetRecord| pretrain_record(rec, ctx);
    if plain_text {
        drive(text_items(input), ctx.strict, work, |r| write_json_line(out, &r))
    } else {
        drive(jsonl_items(input), ctx.strict, work, |r| write_json_line(out, &r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(strict: bool) -> Context {
        Context {
            config: RunConfig::default(),
            annotator: Annotator::heuristic(),
            strict,
        }
    }

    const INPUT: &str = r#"{"id":"1","document":"Walsall signed Leahy from Falkirk.","summary":"Walsall signed Leahy."}
not json
{"id":"2","document":"Rain fell.","summary":"Walsall lost."}
"#;

    fn lines(buf: &[u8]) -> Vec<String> {
        String::from_utf8(buf.to_vec()).unwrap().lines().map(str::to_string).collect()
    }

    #[test]
    fn augment_skips_bad_lines_unless_strict() {
        let mut out = Vec::new();
        let s = cmd_augment(INPUT.as_bytes(), &mut out, &ctx(false)).unwrap();
        assert_eq!(s.records, 2);
        assert_eq!(s.failures.len(), 1);
        assert_eq!(s.failures[0].line, 2);
        let out = lines(&out);
        assert!(out[0].starts_with(r#"{"_meta":"#));
        assert_eq!(
            out[1],
            r#"{"id":"1","source":"Walsall signed Leahy from Falkirk.","target":"[ENTITYCHAIN] Walsall | Leahy [SUMMARY] Walsall signed Leahy."}"#
        );
        assert!(cmd_augment(INPUT.as_bytes(), &mut Vec::new(), &ctx(true)).is_err());
    }

    #[test]
    fn filter_writes_both_sides() {
        let (mut kept, mut rejected) = (Vec::new(), Vec::new());
        let (_, counts) = cmd_filter(INPUT.as_bytes(), &mut kept, &mut rejected, &ctx(false)).unwrap();
        assert_eq!(counts, FilterCounts { total: 2, kept: 1, rejected: 1 });
        let rejected = lines(&rejected);
        assert!(rejected[1].contains(r#""reject_reason":"unsupported entities: Walsall""#));
        assert!(rejected[1].contains(r#""unsupported":["Walsall"]"#));
    }

    #[test]
    fn drop_prompt_with_own_documents() {
        let input = r#"{"id":"a","document":"Walsall signed Leahy.","predicted":"[ENTITYCHAIN] Walsall | Liam Leahy | two [SUMMARY] whatever"}"#;
        let mut out = Vec::new();
        cmd_drop_prompt(input.as_bytes(), None, &mut out, &ctx(true)).unwrap();
        let rec: DropRecord = serde_json::from_str(&lines(&out)[1]).unwrap();
        assert_eq!(rec.prompt, "[ENTITYCHAIN] Walsall | Leahy [SUMMARY]");
        assert_eq!(rec.report.dropped, ["two"]);
    }

    #[test]
    fn empty_input_gives_header_only() {
        let mut out = Vec::new();
        let s = cmd_annotate("".as_bytes(), &mut out, &ctx(true), TextField::Summary).unwrap();
        assert_eq!(s, RunSummary::default());
        assert_eq!(lines(&out).len(), 1);
    }

    #[test]
    fn stats_markdown() {
        let mut out = Vec::new();
        let (_, stats) = cmd_stats(INPUT.as_bytes(), &mut out, &ctx(false), Some("toy")).unwrap();
        assert_eq!(stats.n_records, 2);
        assert_eq!(stats.failed, 1);
        assert_eq!(lines(&out)[2], "| toy | 2 | 1.00 | 1.50 | 1.50 | 0.00 | 3 | 0 | 0 |");
    }

    #[test]
    fn pretrain_plain_text() {
        let mut out = Vec::new();
        let text = "Alice met Bob. Bob met Alice. Carol left.\n\nOne line only.\n";
        let s = cmd_pretrain_prep(text.as_bytes(), &mut out, &ctx(true), true).unwrap();
        assert_eq!(s.records, 2);
        let recs: Vec<PretrainRecord> = lines(&out)[1..].iter().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(recs[0].id, "1");
        assert_eq!(recs[1].id, "3");
        assert_eq!(recs[1].masked_input, "[MASK]");
    }
}
