//! Whole-corpus evaluation of a prediction file.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotatedText, Annotator};
use crate::chain::{build_chain, parse_augmented};
use crate::control::MatchPolicy;
use crate::error::{Error, Result};
use crate::record::DatasetRecord;

use super::entity::{
    aggregate_ent_f1, aggregate_ent_prec, entity_set, plan_rouge, summary_rouge, EntF1, EntPrec,
    EntityCounts, SupportCounts,
};
use super::rouge::RougeSet;

pub const DEFAULT_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub stemming: bool,
    pub policy: MatchPolicy,
    pub bootstrap: Option<Bootstrap>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            stemming: true,
            policy: MatchPolicy::default(),
            bootstrap: None,
        }
    }
}

/// Everything measured for one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScores {
    pub id: String,
    pub summary: RougeSet,
    pub plan: RougeSet,
    pub entities: EntityCounts,
    pub support: SupportCounts,
    pub length: usize,
    pub malformed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_examples: usize,
    pub malformed_count: usize,
    /// Ids excluded because they could not be scored.
    pub failed: Vec<String>,
    pub summary_rouge: RougeSet,
    pub plan_rouge: RougeSet,
    pub entf1: EntF1,
    pub entprec: EntPrec,
    pub avg_length: f64,
    /// 95% percentile intervals of the headline numbers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<BTreeMap<String, Interval>>,
}

/// Prediction text: `predicted`, else `summary`.
fn prediction_text(record: &DatasetRecord) -> Result<&str> {
    record
        .predicted
        .as_deref()
        .or(record.summary.as_deref())
        .ok_or(Error::MissingField {
            id: record.id.clone(),
            field: "predicted",
        })
}

/// Scores one prediction. Entities on the prediction record refer to its stripped summary.
pub fn score_example(
    prediction: &DatasetRecord,
    reference: &DatasetRecord,
    document: &str,
    annotator: &Annotator,
    config: &EvalConfig,
) -> Result<ExampleScores> {
    let parsed = parse_augmented(prediction_text(prediction)?);
    let pred_summary = parsed.target.summary.as_str();
    let ref_summary = reference.summary()?;
    let pred: AnnotatedText = annotator.annotate(&prediction.input(pred_summary))?;
    let gold: AnnotatedText = annotator.annotate(&reference.input(ref_summary))?;
    Ok(ExampleScores {
        id: prediction.id.clone(),
        summary: summary_rouge(pred_summary, ref_summary, config.stemming),
        plan: plan_rouge(&build_chain(&pred), &build_chain(&gold), config.stemming),
        entities: EntityCounts::between(&entity_set(&pred), &entity_set(&gold)),
        support: SupportCounts::of(&pred, document, config.policy),
        length: pred_summary.split_whitespace().count(),
        malformed: parsed.malformed,
    })
}

fn index_by_id<'a>(records: &'a [DatasetRecord], file: &str) -> Result<HashMap<&'a str, &'a DatasetRecord>> {
    let mut map = HashMap::with_capacity(records.len());
    for r in records {
        if map.insert(r.id.as_str(), r).is_some() {
            return Err(Error::DuplicateId {
                id: r.id.clone(),
                file: file.to_string(),
            });
        }
    }
    Ok(map)
}

/// Joined (prediction, reference, document) triples in prediction order.
pub fn align<'a>(
    predictions: &'a [DatasetRecord],
    references: &'a [DatasetRecord],
    documents: &'a [DatasetRecord],
) -> Result<Vec<(&'a DatasetRecord, &'a DatasetRecord, &'a DatasetRecord)>> {
    index_by_id(predictions, "predictions")?;
    let refs = index_by_id(references, "references")?;
    let docs = index_by_id(documents, "documents")?;
    predictions
        .iter()
        .map(|p| {
            let missing = |file: &str| Error::MissingId {
                id: p.id.clone(),
                file: file.to_string(),
            };
            let r = refs.get(p.id.as_str()).ok_or_else(|| missing("references"))?;
            let d = docs.get(p.id.as_str()).ok_or_else(|| missing("documents"))?;
            Ok((p, *r, *d))
        })
        .collect()
}

/// Scores every aligned triple in parallel; output order follows the predictions.
pub fn score_all(
    predictions: &[DatasetRecord],
    references: &[DatasetRecord],
    documents: &[DatasetRecord],
    annotator: &Annotator,
    config: &EvalConfig,
) -> Result<Vec<(String, Result<ExampleScores>)>> {
    let triples = align(predictions, references, documents)?;
    Ok(triples
        .par_iter()
        .map(|(p, r, d)| {
            let scored = d
                .document()
                .and_then(|doc| score_example(p, r, doc, annotator, config));
            (p.id.clone(), scored)
        })
        .collect())
}

#[derive(Debug, Clone, Copy)]
struct Headline {
    values: [f64; 9],
}

const HEADLINE_NAMES: [&str; 9] = [
    "summary_rouge1",
    "summary_rouge2",
    "summary_rougeL",
    "plan_rouge1",
    "plan_rouge2",
    "plan_rougeL",
    "entf1",
    "entprec",
    "avg_length",
];

fn headline(examples: &[&ExampleScores]) -> Headline {
    let n = examples.len().max(1) as f64;
    let mut values = [0.0; 9];
    for e in examples {
        values[0] += e.summary.rouge1.f1;
        values[1] += e.summary.rouge2.f1;
        values[2] += e.summary.rouge_l.f1;
        values[3] += e.plan.rouge1.f1;
        values[4] += e.plan.rouge2.f1;
        values[5] += e.plan.rouge_l.f1;
        values[6] += e.entities.prf().2;
        values[7] += e.support.precision();
        values[8] += e.length as f64;
    }
    for v in &mut values {
        *v /= n;
    }
    Headline { values }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn bootstrap(examples: &[&ExampleScores], spec: Bootstrap) -> BTreeMap<String, Interval> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draws = vec![Vec::with_capacity(spec.resamples); HEADLINE_NAMES.len()];
    let mut sample = Vec::with_capacity(examples.len());
    for _ in 0..spec.resamples {
        sample.clear();
        sample.extend((0..examples.len()).map(|_| examples[rng.gen_range(0..examples.len())]));
        for (d, v) in draws.iter_mut().zip(headline(&sample).values) {
            d.push(v);
        }
    }
    HEADLINE_NAMES
        .iter()
        .zip(draws)
        .map(|(name, mut d)| {
            d.sort_by(f64::total_cmp);
            let interval = Interval {
                low: percentile(&d, 0.025),
                high: percentile(&d, 0.975),
            };
            (name.to_string(), interval)
        })
        .collect()
}

/// Folds per-example scores into a report. Failed examples are listed and excluded.
pub fn build_report(scored: &[(String, Result<ExampleScores>)], config: &EvalConfig) -> EvalReport {
    let ok: Vec<&ExampleScores> = scored.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    let failed = scored
        .iter()
        .filter(|(_, r)| r.is_err())
        .map(|(id, _)| id.clone())
        .collect();
    let entities: Vec<EntityCounts> = ok.iter().map(|e| e.entities).collect();
    let support: Vec<SupportCounts> = ok.iter().map(|e| e.support).collect();
    let confidence = match config.bootstrap {
        Some(spec) if !ok.is_empty() && spec.resamples > 0 => Some(bootstrap(&ok, spec)),
        _ => None,
    };
    EvalReport {
        n_examples: ok.len(),
        malformed_count: ok.iter().filter(|e| e.malformed).count(),
        failed,
        summary_rouge: RougeSet::mean(ok.iter().map(|e| &e.summary)),
        plan_rouge: RougeSet::mean(ok.iter().map(|e| &e.plan)),
        entf1: aggregate_ent_f1(&entities),
        entprec: aggregate_ent_prec(&support),
        avg_length: if ok.is_empty() {
            0.0
        } else {
            ok.iter().map(|e| e.length as f64).sum::<f64>() / ok.len() as f64
        },
        confidence,
    }
}

/// Evaluates predictions against references and source documents joined by id.
pub fn evaluate(
    predictions: &[DatasetRecord],
    references: &[DatasetRecord],
    documents: &[DatasetRecord],
    annotator: &Annotator,
    config: &EvalConfig,
) -> Result<EvalReport> {
    let scored = score_all(predictions, references, documents, annotator, config)?;
    Ok(build_report(&scored, config))
}

pub const CSV_HEADER: &str =
    "summary_r1,summary_r2,summary_rl,plan_r1,plan_r2,plan_rl,entf1,entf1_micro,entprec,entprec_micro,avg_length,n_examples,malformed";

impl EvalReport {
    /// One row in table column order, F1 values for the ROUGE variants.
    pub fn csv_row(&self) -> String {
        let floats = [
            self.summary_rouge.rouge1.f1,
            self.summary_rouge.rouge2.f1,
            self.summary_rouge.rouge_l.f1,
            self.plan_rouge.rouge1.f1,
            self.plan_rouge.rouge2.f1,
            self.plan_rouge.rouge_l.f1,
            self.entf1.macro_avg.f1,
            self.entf1.micro.f1,
            self.entprec.macro_avg,
            self.entprec.micro,
            self.avg_length,
        ];
        let mut row: Vec<String> = floats.iter().map(|v| format!("{v:.6}")).collect();
        row.push(self.n_examples.to_string());
        row.push(self.malformed_count.to_string());
        row.join(",")
    }
}
