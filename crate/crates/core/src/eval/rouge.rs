//! ROUGE-N and summary-level ROUGE-L.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::porter;
use crate::text::word_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub const PERFECT: RougeScore = RougeScore {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
    };

    /// Scores from an overlap count and the two sequence sizes. Zero sizes give zero.
    pub fn from_counts(overlap: usize, candidate: usize, reference: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        RougeScore {
            precision: ratio(overlap, candidate),
            recall: ratio(overlap, reference),
            f1: ratio(2 * overlap, candidate + reference),
        }
    }
}

/// Lowercases, splits into alphanumeric runs and stems words longer than three characters.
pub fn tokenize(text: &str, stem: bool) -> Vec<String> {
    word_tokens(text)
        .into_iter()
        .map(|t| {
            let lower = t.text.to_lowercase();
            if stem && lower.chars().count() > 3 {
                porter::stem(&lower)
            } else {
                lower
            }
        })
        .collect()
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap. Panics if `n == 0`.
pub fn rouge_n<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> RougeScore {
    assert!(n >= 1, "n-gram order must be positive");
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap = cand
        .iter()
        .map(|(gram, &c)| refs.get(gram).map_or(0, |&r| c.min(r)))
        .sum();
    let total = |len: usize| len.saturating_sub(n - 1);
    RougeScore::from_counts(overlap, total(candidate.len()), total(reference.len()))
}

pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> RougeScore {
    RougeScore::from_counts(lcs_len(candidate, reference), candidate.len(), reference.len())
}

/// The three variants reported per comparison.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeSet {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
}

impl RougeSet {
    pub const PERFECT: RougeSet = RougeSet {
        rouge1: RougeScore::PERFECT,
        rouge2: RougeScore::PERFECT,
        rouge_l: RougeScore::PERFECT,
    };

    pub fn score<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> Self {
        RougeSet {
            rouge1: rouge_n(candidate, reference, 1),
            rouge2: rouge_n(candidate, reference, 2),
            rouge_l: rouge_l(candidate, reference),
        }
    }

    pub fn variants(&self) -> [RougeScore; 3] {
        [self.rouge1, self.rouge2, self.rouge_l]
    }

    pub(crate) fn mean<'a>(sets: impl IntoIterator<Item = &'a RougeSet>) -> RougeSet {
        let mut sum = [[0.0; 3]; 3];
        let mut n = 0usize;
        for set in sets {
            n += 1;
            for (acc, s) in sum.iter_mut().zip(set.variants()) {
                acc[0] += s.precision;
                acc[1] += s.recall;
                acc[2] += s.f1;
            }
        }
        if n == 0 {
            return RougeSet::default();
        }
        let avg = |a: [f64; 3]| RougeScore {
            precision: a[0] / n as f64,
            recall: a[1] / n as f64,
            f1: a[2] / n as f64,
        };
        RougeSet {
            rouge1: avg(sum[0]),
            rouge2: avg(sum[1]),
            rouge_l: avg(sum[2]),
        }
    }
}
