//! Entity-level metrics: specificity against references and precision against sources.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::annotate::AnnotatedText;
use crate::chain::{strip_chain, EntityChain};
use crate::control::{DocumentIndex, MatchPolicy};
use crate::error::{Error, Result};

use super::rouge::{tokenize, RougeSet};

/// Lowercased, deduplicated entity surface forms.
pub fn entity_set(text: &AnnotatedText) -> BTreeSet<String> {
    text.spans.iter().map(|s| s.text.to_lowercase()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EntityCounts {
    pub matched: usize,
    pub predicted: usize,
    pub reference: usize,
}

impl EntityCounts {
    pub fn between(predicted: &BTreeSet<String>, reference: &BTreeSet<String>) -> Self {
        EntityCounts {
            matched: predicted.intersection(reference).count(),
            predicted: predicted.len(),
            reference: reference.len(),
        }
    }

    /// Precision, recall and F1. Two empty sets agree perfectly; a single empty side scores zero.
    pub fn prf(&self) -> (f64, f64, f64) {
        if self.predicted == 0 && self.reference == 0 {
            return (1.0, 1.0, 1.0);
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        (
            ratio(self.matched, self.predicted),
            ratio(self.matched, self.reference),
            ratio(2 * self.matched, self.predicted + self.reference),
        )
    }

    fn add(&mut self, other: &EntityCounts) {
        self.matched += other.matched;
        self.predicted += other.predicted;
        self.reference += other.reference;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageMode {
    /// Mean of per-example scores.
    Macro,
    /// Scores of corpus-wide summed counts.
    Micro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityScore {
    pub mode: AverageMode,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub predicted: usize,
    pub reference: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntF1 {
    #[serde(rename = "macro")]
    pub macro_avg: EntityScore,
    pub micro: EntityScore,
}

/// Aggregates per-example counts. The macro F1 is the mean of per-example F1,
/// not the harmonic mean of the averaged precision and recall.
pub fn aggregate_ent_f1(examples: &[EntityCounts]) -> EntF1 {
    let mut total = EntityCounts::default();
    let mut sums = (0.0, 0.0, 0.0);
    for c in examples {
        total.add(c);
        let (p, r, f) = c.prf();
        sums.0 += p;
        sums.1 += r;
        sums.2 += f;
    }
    let n = examples.len().max(1) as f64;
    let (p, r, f) = if examples.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        total.prf()
    };
    EntF1 {
        macro_avg: EntityScore {
            mode: AverageMode::Macro,
            precision: sums.0 / n,
            recall: sums.1 / n,
            f1: sums.2 / n,
            matched: total.matched,
            predicted: total.predicted,
            reference: total.reference,
        },
        micro: EntityScore {
            mode: AverageMode::Micro,
            precision: p,
            recall: r,
            f1: f,
            matched: total.matched,
            predicted: total.predicted,
            reference: total.reference,
        },
    }
}

fn check_aligned(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::LengthMismatch { left, right })
    }
}

pub fn ent_f1(predictions: &[AnnotatedText], references: &[AnnotatedText]) -> Result<EntF1> {
    check_aligned(predictions.len(), references.len())?;
    let counts: Vec<_> = predictions
        .iter()
        .zip(references)
        .map(|(p, r)| EntityCounts::between(&entity_set(p), &entity_set(r)))
        .collect();
    Ok(aggregate_ent_f1(&counts))
}

/// How many distinct predicted entities the document supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SupportCounts {
    pub supported: usize,
    pub predicted: usize,
}

impl SupportCounts {
    /// Dedup is by lowercased form; the first surface form of each is tested.
    pub fn of(prediction: &AnnotatedText, document: &str, policy: MatchPolicy) -> Self {
        let mut distinct: BTreeMap<String, &str> = BTreeMap::new();
        for span in &prediction.spans {
            distinct.entry(span.text.to_lowercase()).or_insert(&span.text);
        }
        let index = DocumentIndex::new(document, policy);
        SupportCounts {
            supported: distinct.values().filter(|e| index.supports(e)).count(),
            predicted: distinct.len(),
        }
    }

    /// Zero predicted entities counts as fully faithful.
    pub fn precision(&self) -> f64 {
        if self.predicted == 0 {
            1.0
        } else {
            self.supported as f64 / self.predicted as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntPrec {
    #[serde(rename = "macro")]
    pub macro_avg: f64,
    pub micro: f64,
}

pub fn aggregate_ent_prec(examples: &[SupportCounts]) -> EntPrec {
    if examples.is_empty() {
        return EntPrec {
            macro_avg: 0.0,
            micro: 0.0,
        };
    }
    let macro_avg = examples.iter().map(SupportCounts::precision).sum::<f64>() / examples.len() as f64;
    let total = examples.iter().fold(SupportCounts::default(), |acc, c| SupportCounts {
        supported: acc.supported + c.supported,
        predicted: acc.predicted + c.predicted,
    });
    EntPrec {
        macro_avg,
        micro: total.precision(),
    }
}

pub fn ent_prec(predictions: &[AnnotatedText], documents: &[&str], policy: MatchPolicy) -> Result<EntPrec> {
    check_aligned(predictions.len(), documents.len())?;
    let counts: Vec<_> = predictions
        .iter()
        .zip(documents)
        .map(|(p, d)| SupportCounts::of(p, d, policy))
        .collect();
    Ok(aggregate_ent_prec(&counts))
}

/// Whitespace-token count of the summary once any chain is stripped.
pub fn summary_length(prediction: &str) -> usize {
    strip_chain(prediction).split_whitespace().count()
}

pub fn avg_length<S: AsRef<str>>(predictions: &[S]) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    let total: usize = predictions.iter().map(|p| summary_length(p.as_ref())).sum();
    total as f64 / predictions.len() as f64
}

pub fn summary_rouge(prediction: &str, reference: &str, stem: bool) -> RougeSet {
    RougeSet::score(&tokenize(prediction, stem), &tokenize(reference, stem))
}

/// Entity tokens in chain order, ignoring group boundaries.
pub fn flatten_chain(chain: &EntityChain, stem: bool) -> Vec<String> {
    chain.entities().flat_map(|e| tokenize(e, stem)).collect()
}

/// ROUGE between two chains. Two chains without entities agree perfectly.
pub fn plan_rouge(predicted: &EntityChain, reference: &EntityChain, stem: bool) -> RougeSet {
    let p = flatten_chain(predicted, stem);
    let r = flatten_chain(reference, stem);
    if p.is_empty() && r.is_empty() {
        return RougeSet::PERFECT;
    }
    RougeSet::score(&p, &r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::Annotator;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn set_prf() {
        let c = EntityCounts::between(&set(&["a", "b"]), &set(&["b", "c"]));
        assert_eq!(c.prf(), (0.5, 0.5, 0.5));
        assert_eq!(EntityCounts::between(&set(&[]), &set(&[])).prf(), (1.0, 1.0, 1.0));
        assert_eq!(EntityCounts::between(&set(&["a"]), &set(&[])).prf(), (0.0, 0.0, 0.0));
        assert_eq!(EntityCounts::between(&set(&[]), &set(&["a"])).prf(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn macro_and_micro_differ() {
        let examples = [
            EntityCounts { matched: 1, predicted: 1, reference: 1 },
            EntityCounts { matched: 0, predicted: 3, reference: 1 },
        ];
        let s = aggregate_ent_f1(&examples);
        assert_eq!(s.macro_avg.f1, 0.5);
        assert_eq!(s.micro.precision, 0.25);
        assert_eq!(s.micro.recall, 0.5);
        assert_eq!(s.micro.f1, 2.0 / 6.0);
    }

    #[test]
    fn dedup_is_case_folded() {
        let ann = Annotator::heuristic();
        let t = ann.annotate_text("Apple sued Google. APPLE won.").unwrap();
        assert_eq!(entity_set(&t), set(&["apple", "google"]));
    }

    #[test]
    fn entprec_walsall_prediction() {
        let ann = Annotator::heuristic();
        let doc = "Walsall have completed the signing of defender Leahy from Falkirk.";
        let pred = ann
            .annotate_text("Walsall have signed Falkirk defender Liam Leahy on a two-year deal.")
            .unwrap();
        let c = SupportCounts::of(&pred, doc, MatchPolicy::default());
        assert_eq!(c, SupportCounts { supported: 2, predicted: 4 });
        assert_eq!(c.precision(), 0.5);
        let none = ann.annotate_text("it rained.").unwrap();
        assert_eq!(SupportCounts::of(&none, doc, MatchPolicy::default()).precision(), 1.0);
        assert!(ent_prec(&[pred], &[], MatchPolicy::default()).is_err());
    }

    #[test]
    fn lengths() {
        assert_eq!(avg_length(&["a b", "c d e f"]), 3.0);
        assert_eq!(avg_length(&["", "x"]), 0.5);
        assert_eq!(summary_length("[ENTITYCHAIN] A | B [SUMMARY] one two three"), 3);
    }

    #[test]
    fn plan_rouge_conventions() {
        let empty = EntityChain::empty();
        let walsall = EntityChain::single(["Walsall", "Falkirk"]);
        assert_eq!(plan_rouge(&empty, &EntityChain::default(), true), RougeSet::PERFECT);
        assert_eq!(plan_rouge(&empty, &walsall, true).rouge1.f1, 0.0);
        assert_eq!(plan_rouge(&walsall, &walsall, true), RougeSet::PERFECT);
    }
}
