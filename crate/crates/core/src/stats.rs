//! Corpus statistics over annotated target summaries.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotatedText, EntityKind};

/// Mergeable running totals. Merging is associative and commutative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatsAccumulator {
    pub records: usize,
    pub sentences: usize,
    pub entities: usize,
    pub unique_entities: usize,
    pub no_entity_records: usize,
    pub named: usize,
    pub date: usize,
    pub number: usize,
    pub failed: usize,
}

impl StatsAccumulator {
    pub fn add(&mut self, summary: &AnnotatedText) {
        self.records += 1;
        self.sentences += summary.sentence_count();
        self.entities += summary.spans.len();
        let unique: BTreeSet<String> = summary.spans.iter().map(|s| s.text.to_lowercase()).collect();
        self.unique_entities += unique.len();
        if summary.spans.is_empty() {
            self.no_entity_records += 1;
        }
        for span in &summary.spans {
            match span.kind {
                EntityKind::Named => self.named += 1,
                EntityKind::Date => self.date += 1,
                EntityKind::Number => self.number += 1,
            }
        }
    }

    pub fn add_failure(&mut self) {
        self.failed += 1;
    }

    pub fn merge(mut self, other: StatsAccumulator) -> Self {
        self.records += other.records;
        self.sentences += other.sentences;
        self.entities += other.entities;
        self.unique_entities += other.unique_entities;
        self.no_entity_records += other.no_entity_records;
        self.named += other.named;
        self.date += other.date;
        self.number += other.number;
        self.failed += other.failed;
        self
    }

    pub fn finish(&self) -> CorpusStats {
        let avg = |x: usize| {
            if self.records == 0 {
                0.0
            } else {
                x as f64 / self.records as f64
            }
        };
        CorpusStats {
            n_records: self.records,
            avg_sentences: avg(self.sentences),
            avg_entities: avg(self.entities),
            avg_unique_entities: avg(self.unique_entities),
            pct_no_entities: 100.0 * avg(self.no_entity_records),
            totals: KindTotals {
                named: self.named,
                date: self.date,
                number: self.number,
            },
            failed: self.failed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KindTotals {
    pub named: usize,
    pub date: usize,
    pub number: usize,
}

impl KindTotals {
    pub fn sum(&self) -> usize {
        self.named + self.date + self.number
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_records: usize,
    pub avg_sentences: f64,
    pub avg_entities: f64,
    pub avg_unique_entities: f64,
    /// Percentage, 0 to 100.
    pub pct_no_entities: f64,
    pub totals: KindTotals,
    /// Records that could not be annotated and were excluded.
    pub failed: usize,
}

pub fn compute_stats<'a>(summaries: impl IntoIterator<Item = &'a AnnotatedText>) -> CorpusStats {
    summaries
        .into_iter()
        .fold(StatsAccumulator::default(), |mut acc, s| {
            acc.add(s);
            acc
        })
        .finish()
}

pub const MARKDOWN_HEADER: &str = "| dataset | records | avg. sent. | avg. ent. | avg. uniq. ent. | % no ent. | named | date | number |\n|---|---|---|---|---|---|---|---|---|";

impl CorpusStats {
    pub fn markdown_row(&self, name: &str) -> String {
        format!(
            "| {name} | {} | {:.2} | {:.2} | {:.2} | {:.2} | {} | {} | {} |",
            self.n_records,
            self.avg_sentences,
            self.avg_entities,
            self.avg_unique_entities,
            self.pct_no_entities,
            self.totals.named,
            self.totals.date,
            self.totals.number
        )
    }
}
