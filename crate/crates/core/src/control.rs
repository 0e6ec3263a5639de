//! Chain-level control: extractiveness, dataset filtering, drop-prompt and prompts.
//!
//! An entity is *supported* by a document when its token sequence occurs as a
//! contiguous token subsequence of the document. Tokens are maximal
//! alphanumeric runs, so "art" is not found in "party" and "two" is not
//! found as "2". Case folding and separator collapsing are controlled by
//! [`MatchPolicy`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::annotate::Annotator;
use crate::chain::{build_chain, serialize_prefix, EntityChain};
use crate::error::Result;
use crate::record::DatasetRecord;
use crate::text::word_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchPolicy {
    /// Compare tokens case-insensitively.
    pub case_fold: bool,
    /// Ignore the exact separators between tokens. When off, the text between
    /// consecutive entity tokens must equal the text between the matched
    /// document tokens.
    pub whitespace_collapse: bool,
}

impl Default for MatchPolicy {
    fn default() -> Self {
        MatchPolicy {
            case_fold: true,
            whitespace_collapse: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct MatchToken<'a> {
    norm: String,
    // separator text since the previous token; empty for the first one
    gap: &'a str,
    start: usize,
    end: usize,
}

fn match_tokens(text: &str, policy: MatchPolicy) -> Vec<MatchToken<'_>> {
    let mut prev_end = None;
    word_tokens(text)
        .into_iter()
        .map(|t| {
            let gap = prev_end.map_or("", |p| &text[p..t.start]);
            prev_end = Some(t.end);
            MatchToken {
                norm: if policy.case_fold {
                    t.text.to_lowercase()
                } else {
                    t.text.to_string()
                },
                gap,
                start: t.start,
                end: t.end,
            }
        })
        .collect()
}

/// A tokenized document for repeated support queries.
#[derive(Debug, Clone)]
pub struct DocumentIndex<'a> {
    tokens: Vec<MatchToken<'a>>,
    policy: MatchPolicy,
}

impl<'a> DocumentIndex<'a> {
    pub fn new(document: &'a str, policy: MatchPolicy) -> Self {
        DocumentIndex {
            tokens: match_tokens(document, policy),
            policy,
        }
    }

    fn contains(&self, needle: &[MatchToken<'_>]) -> bool {
        if needle.is_empty() || needle.len() > self.tokens.len() {
            return false;
        }
        self.tokens.windows(needle.len()).any(|window| {
            window.iter().zip(needle).enumerate().all(|(i, (d, e))| {
                d.norm == e.norm && (self.policy.whitespace_collapse || i == 0 || d.gap == e.gap)
            })
        })
    }

    /// True iff `entity` has at least one token and its tokens occur contiguously.
    pub fn supports(&self, entity: &str) -> bool {
        self.contains(&match_tokens(entity, self.policy))
    }

    /// The longest contiguous token run of `entity` found in the document, as
    /// a substring of `entity`. Ties go to the run ending latest.
    pub fn longest_supported_part<'e>(&self, entity: &'e str) -> Option<&'e str> {
        let toks = match_tokens(entity, self.policy);
        let n = toks.len();
        for len in (1..=n).rev() {
            for start in (0..=n - len).rev() {
                let part = &toks[start..start + len];
                if self.contains(part) {
                    return Some(&entity[part[0].start..part[len - 1].end]);
                }
            }
        }
        None
    }
}

pub fn entity_supported(entity: &str, document: &str, policy: MatchPolicy) -> bool {
    DocumentIndex::new(document, policy).supports(entity)
}

/// True iff every entity of every group is supported. Vacuously true for empty chains.
pub fn is_extractive_chain(chain: &EntityChain, document: &str, policy: MatchPolicy) -> bool {
    let index = DocumentIndex::new(document, policy);
    chain.entities().all(|e| index.supports(e))
}

/// Entities of `chain` that the document does not support, in chain order.
pub fn unsupported_entities(chain: &EntityChain, document: &str, policy: MatchPolicy) -> Vec<String> {
    let index = DocumentIndex::new(document, policy);
    chain
        .entities()
        .filter(|e| !index.supports(e))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialKeep {
    pub original: String,
    pub retained: String,
}

/// Fate of every input entity under drop-prompt.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DropReport {
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
    pub partially_kept: Vec<PartialKeep>,
}

impl DropReport {
    pub fn entity_count(&self) -> usize {
        self.kept.len() + self.dropped.len() + self.partially_kept.len()
    }
}

/// Rewrites `chain` so that it only mentions what the document supports.
///
/// Supported entities are kept verbatim; otherwise the longest supported token
/// run is kept (latest-ending on ties) and the rest dropped. Groups are never
/// removed, so the planned sentence count is preserved.
pub fn drop_prompt(chain: &EntityChain, document: &str, policy: MatchPolicy) -> (EntityChain, DropReport) {
    let index = DocumentIndex::new(document, policy);
    let mut report = DropReport::default();
    let groups = chain
        .groups
        .iter()
        .map(|group| {
            group
                .iter()
                .filter_map(|entity| {
                    if index.supports(entity) {
                        report.kept.push(entity.clone());
                        return Some(entity.clone());
                    }
                    match index.longest_supported_part(entity) {
                        Some(part) => {
                            report.partially_kept.push(PartialKeep {
                                original: entity.clone(),
                                retained: part.to_string(),
                            });
                            Some(part.to_string())
                        }
                        None => {
                            report.dropped.push(entity.clone());
                            None
                        }
                    }
                })
                .collect()
        })
        .collect();
    (EntityChain::new(groups), report)
}

/// Forced decoder prefix ending at the summary marker.
pub fn make_prompt(chain: &EntityChain) -> Result<String> {
    serialize_prefix(chain)
}

/// The chain of a reference summary, used as an oracle prompt.
pub fn oracle_chain(record: &DatasetRecord, reference: &str, annotator: &Annotator) -> Result<EntityChain> {
    Ok(build_chain(&annotator.annotate(&record.input(reference))?))
}

/// Why a record left the extractive partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    Unsupported(Vec<String>),
    Failed(String),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Unsupported(e) => write!(f, "unsupported entities: {}", e.join(", ")),
            RejectReason::Failed(msg) => write!(f, "error: {msg}"),
        }
    }
}

/// Decides whether one record's summary chain is fully extractive.
pub fn check_record(
    record: &DatasetRecord,
    annotator: &Annotator,
    policy: MatchPolicy,
) -> std::result::Result<(), RejectReason> {
    let fail = |e: crate::Error| RejectReason::Failed(e.to_string());
    let document = record.document().map_err(fail)?;
    let summary = record.summary().map_err(fail)?;
    let annotated = annotator.annotate(&record.input(summary)).map_err(fail)?;
    let missing = unsupported_entities(&build_chain(&annotated), document, policy);
    if missing.is_empty() {
        Ok(())
    } else {
        Err(RejectReason::Unsupported(missing))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterCounts {
    pub total: usize,
    pub kept: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<DatasetRecord>,
    pub rejected: Vec<(DatasetRecord, RejectReason)>,
    pub counts: FilterCounts,
}

/// Partitions records into those with fully extractive summary chains and the rest,
/// preserving input order within each side.
pub fn filter_extractive(
    records: impl IntoIterator<Item = DatasetRecord>,
    annotator: &Annotator,
    policy: MatchPolicy,
) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for record in records {
        out.counts.total += 1;
        match check_record(&record, annotator, policy) {
            Ok(()) => {
                out.counts.kept += 1;
                out.kept.push(record);
            }
            Err(reason) => {
                out.counts.rejected += 1;
                out.rejected.push((record, reason));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const WALSALL_DOC: &str = "Walsall have completed the signing of defender Leahy from Falkirk. The 24-year-old full-back joins the League One club after his contract with the Scottish Championship side expired. Leahy made more than 150 appearances for Falkirk.";

    fn p() -> MatchPolicy {
        MatchPolicy::default()
    }

    fn chain(groups: &[&[&str]]) -> EntityChain {
        EntityChain::new(
            groups
                .iter()
                .map(|g| g.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    #[test]
    fn support_examples() {
        assert!(entity_supported("Walsall", WALSALL_DOC, p()));
        assert!(!entity_supported("Liam Leahy", WALSALL_DOC, p()));
        assert!(!entity_supported("x", "", p()));
        assert!(entity_supported("scottish championship", WALSALL_DOC, p()));
        assert!(!entity_supported("art", "a party", p()));
        assert!(!entity_supported("two", WALSALL_DOC, p()));
        assert!(!entity_supported("--", WALSALL_DOC, p()));
    }

    #[test]
    fn policy_flags() {
        let strict = MatchPolicy {
            case_fold: false,
            whitespace_collapse: false,
        };
        assert!(!entity_supported("walsall", WALSALL_DOC, strict));
        assert!(entity_supported("Scottish Championship", WALSALL_DOC, strict));
        assert!(!entity_supported("Scottish  Championship", WALSALL_DOC, strict));
        assert!(entity_supported("Scottish  Championship", WALSALL_DOC, p()));
        assert!(entity_supported("full back", WALSALL_DOC, p()));
        assert!(!entity_supported("full back", WALSALL_DOC, strict));
    }

    #[test]
    fn extractive_chains() {
        assert!(is_extractive_chain(&EntityChain::empty(), "anything", p()));
        assert!(is_extractive_chain(&EntityChain::default(), "", p()));
        assert!(is_extractive_chain(&chain(&[&["Walsall", "Falkirk", "Leahy"]]), WALSALL_DOC, p()));
        assert!(!is_extractive_chain(
            &chain(&[&["Walsall", "Falkirk", "Liam Leahy", "two"]]),
            WALSALL_DOC,
            p()
        ));
    }

    #[test]
    fn drop_prompt_walsall() {
        let (dropped, report) = drop_prompt(&chain(&[&["Walsall", "Falkirk", "Liam Leahy", "two"]]), WALSALL_DOC, p());
        assert_eq!(dropped, chain(&[&["Walsall", "Falkirk", "Leahy"]]));
        assert_eq!(report.kept, ["Walsall", "Falkirk"]);
        assert_eq!(report.dropped, ["two"]);
        assert_eq!(
            report.partially_kept,
            [PartialKeep {
                original: "Liam Leahy".into(),
                retained: "Leahy".into()
            }]
        );
    }

    #[test]
    fn drop_prompt_identity_and_total_drop() {
        let c = chain(&[&["Walsall"], &["Falkirk", "Leahy"]]);
        let (same, report) = drop_prompt(&c, WALSALL_DOC, p());
        assert_eq!(same, c);
        assert!(report.dropped.is_empty() && report.partially_kept.is_empty());

        let (none, report) = drop_prompt(&chain(&[&["Paris"], &["Rome", "Oslo"]]), WALSALL_DOC, p());
        assert_eq!(none, chain(&[&[], &[]]));
        assert_eq!(report.dropped.len(), 3);
    }

    #[test]
    fn partial_keep_tie_prefers_latest_end() {
        let doc = "Luke met Paddy. Later Leahy arrived.";
        let (c, report) = drop_prompt(&chain(&[&["Luke Leahy"]]), doc, p());
        assert_eq!(c, chain(&[&["Leahy"]]));
        assert_eq!(report.partially_kept[0].retained, "Leahy");
        // longer runs beat later ones
        let (c, _) = drop_prompt(&chain(&[&["Bank of Scotland plc"]]), "the bank of scotland said", p());
        assert_eq!(c, chain(&[&["Bank of Scotland"]]));
    }

    #[test]
    fn prompts() {
        assert_eq!(make_prompt(&chain(&[&["BP", "Browne"]])).unwrap(), "[ENTITYCHAIN] BP | Browne [SUMMARY]");
        assert_eq!(make_prompt(&EntityChain::empty()).unwrap(), "[ENTITYCHAIN] [SUMMARY]");
        assert_eq!(
            make_prompt(&chain(&[&["Brent Crude", "Unions"]])).unwrap(),
            "[ENTITYCHAIN] Brent Crude | Unions [SUMMARY]"
        );
        assert!(make_prompt(&chain(&[&["a|b"]])).is_err());
    }

    #[test]
    fn oracle_chains() {
        let ann = Annotator::heuristic();
        let rec = DatasetRecord::new("x");
        let gold = "Walsall have signed defender Luke Leahy on a two-year contract from Scottish Championship side Falkirk.";
        assert_eq!(
            oracle_chain(&rec, gold, &ann).unwrap(),
            chain(&[&["Walsall", "Luke Leahy", "two", "Scottish Championship", "Falkirk"]])
        );
        assert_eq!(oracle_chain(&rec, "nothing to see here.", &ann).unwrap(), EntityChain::empty());
    }

    #[test]
    fn filter_partitions_in_order() {
        let mk = |id: &str, summary: &str| DatasetRecord {
            id: id.into(),
            document: Some(WALSALL_DOC.into()),
            summary: Some(summary.into()),
            ..Default::default()
        };
        let records = vec![
            mk("a", "the club signed a defender."),
            mk("b", "Walsall have signed defender Luke Leahy on a two-year contract from Scottish Championship side Falkirk."),
            mk("c", "Walsall signed Leahy from Falkirk."),
            DatasetRecord::new("d"),
        ];
        let out = filter_extractive(records, &Annotator::heuristic(), p());
        assert_eq!(
            out.counts,
            FilterCounts {
                total: 4,
                kept: 2,
                rejected: 2
            }
        );
        let kept: Vec<_> = out.kept.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(kept, ["a", "c"]);
        assert_eq!(out.rejected[0].0.id, "b");
        assert_eq!(
            out.rejected[0].1,
            RejectReason::Unsupported(vec!["Luke Leahy".into(), "two".into()])
        );
        assert!(matches!(out.rejected[1].1, RejectReason::Failed(_)));
    }
}
