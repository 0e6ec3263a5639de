//! Entity chains and the augmented target format.
//!
//! Summary level: `[ENTITYCHAIN] A | B ||| C [SUMMARY] summary text`
//!
//! Sentence level: `[ENTITYCHAIN] A | B [SUMMARY] first sentence [ENTITYCHAIN] C [SUMMARY] second sentence`
//!
//! Tokens are joined by single spaces. An entity-free chain leaves nothing
//! between the markers (`[ENTITYCHAIN] [SUMMARY] text`); an entity-free group
//! inside a longer chain leaves nothing between its group separators. The
//! parser accepts markers in any casing and never fails: malformed model
//! output is recovered on a best-effort basis and flagged.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::annotate::AnnotatedText;
use crate::error::{Error, Result};

pub const CHAIN_MARKER: &str = "[ENTITYCHAIN]";
pub const SUMMARY_MARKER: &str = "[SUMMARY]";
pub const ENTITY_SEPARATOR: &str = "|";
pub const GROUP_SEPARATOR: &str = "|||";

static MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\[(entitychain|summary)\]").expect("marker pattern"));

fn contains_marker(s: &str) -> bool {
    MARKER.is_match(s)
}

/// Ordered, sentence-grouped entity strings: the content plan.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityChain {
    pub groups: Vec<Vec<String>>,
}

impl EntityChain {
    pub fn new(groups: Vec<Vec<String>>) -> Self {
        EntityChain { groups }
    }

    /// One entity-free group.
    pub fn empty() -> Self {
        EntityChain {
            groups: vec![Vec::new()],
        }
    }

    /// A chain with a single sentence group.
    pub fn single<S: Into<String>>(entities: impl IntoIterator<Item = S>) -> Self {
        EntityChain {
            groups: vec![entities.into_iter().map(Into::into).collect()],
        }
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().flatten().map(String::as_str)
    }

    pub fn entity_count(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn has_entities(&self) -> bool {
        self.groups.iter().any(|g| !g.is_empty())
    }

    /// Rejects entities that could not survive serialization.
    pub fn validate(&self) -> Result<()> {
        self.entities().try_for_each(validate_entity)
    }

    /// The body between the markers, e.g. `A | B ||| C`.
    fn body(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (i, group) in self.groups.iter().enumerate() {
            if i > 0 {
                parts.push(GROUP_SEPARATOR.to_string());
            }
            if !group.is_empty() {
                parts.push(group.join(" | "));
            }
        }
        parts.join(" ")
    }
}

impl fmt::Display for EntityChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.body())
    }
}

fn validate_entity(entity: &str) -> Result<()> {
    let bad = entity.is_empty()
        || entity.trim() != entity
        || entity.contains(ENTITY_SEPARATOR)
        || contains_marker(entity);
    if bad {
        Err(Error::InvalidEntity(entity.to_string()))
    } else {
        Ok(())
    }
}

fn validate_summary(summary: &str) -> Result<()> {
    if contains_marker(summary) {
        Err(Error::InvalidSummary)
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanLevel {
    #[default]
    Summary,
    Sentence,
}

impl std::str::FromStr for PlanLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "summary" => Ok(PlanLevel::Summary),
            "sentence" => Ok(PlanLevel::Sentence),
            other => Err(format!("unknown level {other:?} (expected summary|sentence)")),
        }
    }
}

/// A chain plus the summary it plans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedTarget {
    pub chain: EntityChain,
    pub summary: String,
    pub level: PlanLevel,
}

impl AugmentedTarget {
    pub fn new(chain: EntityChain, summary: impl Into<String>) -> Self {
        AugmentedTarget {
            chain,
            summary: summary.into(),
            level: PlanLevel::Summary,
        }
    }

    /// Summary-level target for an annotated summary.
    pub fn from_annotated(summary: &AnnotatedText) -> Self {
        AugmentedTarget::new(build_chain(summary), summary.text.trim())
    }
}

/// Per-sentence (group, sentence) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SentenceLevelTarget {
    pub pairs: Vec<(Vec<String>, String)>,
}

impl SentenceLevelTarget {
    pub fn from_annotated(summary: &AnnotatedText) -> Self {
        let chain = build_chain(summary);
        let pairs = chain
            .groups
            .into_iter()
            .enumerate()
            .map(|(i, group)| (group, summary.sentence_str(i).to_string()))
            .collect();
        SentenceLevelTarget { pairs }
    }

    /// Checks that every group's entities occur in its paired sentence.
    pub fn is_grounded(&self) -> bool {
        self.pairs
            .iter()
            .all(|(group, sentence)| group.iter().all(|e| sentence.contains(e.as_str())))
    }

    pub fn to_augmented(&self) -> AugmentedTarget {
        let summary: Vec<&str> = self
            .pairs
            .iter()
            .map(|(_, s)| s.trim())
            .filter(|s| !s.is_empty())
            .collect();
        AugmentedTarget {
            chain: EntityChain::new(self.pairs.iter().map(|(g, _)| g.clone()).collect()),
            summary: summary.join(" "),
            level: PlanLevel::Sentence,
        }
    }
}

/// One group per sentence, entities in order of appearance, surface forms verbatim.
pub fn build_chain(summary: &AnnotatedText) -> EntityChain {
    let mut groups = vec![Vec::new(); summary.sentence_count()];
    for span in &summary.spans {
        groups[span.sent].push(span.text.clone());
    }
    EntityChain { groups }
}

fn push_block(out: &mut Vec<String>, chain_body: String, summary: &str) {
    out.push(CHAIN_MARKER.to_string());
    if !chain_body.is_empty() {
        out.push(chain_body);
    }
    out.push(SUMMARY_MARKER.to_string());
    let summary = summary.trim();
    if !summary.is_empty() {
        out.push(summary.to_string());
    }
}

/// `[ENTITYCHAIN] g1 ||| g2 … [SUMMARY] summary`. The summary is trimmed.
pub fn serialize_summary_level(target: &AugmentedTarget) -> Result<String> {
    target.chain.validate()?;
    validate_summary(&target.summary)?;
    let mut out = Vec::new();
    push_block(&mut out, target.chain.body(), &target.summary);
    Ok(out.join(" "))
}

/// `[ENTITYCHAIN] g1 [SUMMARY] s1 [ENTITYCHAIN] g2 [SUMMARY] s2 …`.
pub fn serialize_sentence_level(target: &SentenceLevelTarget) -> Result<String> {
    let mut out = Vec::new();
    for (group, sentence) in &target.pairs {
        group.iter().try_for_each(|e| validate_entity(e))?;
        validate_summary(sentence)?;
        push_block(&mut out, group.join(" | "), sentence);
    }
    if out.is_empty() {
        push_block(&mut out, String::new(), "");
    }
    Ok(out.join(" "))
}

/// The forced decoder prefix for `chain`: `[ENTITYCHAIN] … [SUMMARY]`.
pub fn serialize_prefix(chain: &EntityChain) -> Result<String> {
    chain.validate()?;
    let mut out = Vec::new();
    push_block(&mut out, chain.body(), "");
    Ok(out.join(" "))
}

/// Result of parsing arbitrary text as an augmented target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTarget {
    pub target: AugmentedTarget,
    pub malformed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Marker {
    Chain,
    Summary,
}

/// Splits a chain body into groups; empty entities flag the body as malformed.
fn parse_body(body: &str) -> (Vec<Vec<String>>, bool) {
    let mut malformed = false;
    let groups = body
        .split(GROUP_SEPARATOR)
        .map(|g| {
            if g.trim().is_empty() {
                return Vec::new();
            }
            g.split(ENTITY_SEPARATOR)
                .map(str::trim)
                .filter(|e| {
                    if e.is_empty() {
                        malformed = true;
                    }
                    !e.is_empty()
                })
                .map(str::to_string)
                .collect()
        })
        .collect();
    (groups, malformed)
}

struct Blocks<'a> {
    blocks: Vec<(&'a str, &'a str)>,
    malformed: bool,
}

/// Pairs each summary marker with the chain body preceding it. `None` when
/// there is no summary marker at all.
fn split_blocks(text: &str) -> Option<Blocks<'_>> {
    let markers: Vec<(Marker, usize, usize)> = MARKER
        .captures_iter(text)
        .map(|c| {
            let m = c.get(0).unwrap();
            let kind = if c[1].eq_ignore_ascii_case("summary") {
                Marker::Summary
            } else {
                Marker::Chain
            };
            (kind, m.start(), m.end())
        })
        .collect();
    if !markers.iter().any(|(k, _, _)| *k == Marker::Summary) {
        return None;
    }

    let mut malformed = false;
    let preamble = &text[..markers[0].1];
    let mut pending: Option<&str> = None;
    if markers[0].0 == Marker::Summary {
        // no chain marker before the summary: the preamble is the chain body
        pending = Some(preamble);
        malformed = true;
    } else if !preamble.trim().is_empty() {
        malformed = true;
    }

    let mut blocks = Vec::new();
    for (i, &(kind, _, end)) in markers.iter().enumerate() {
        let next = markers.get(i + 1).map_or(text.len(), |m| m.1);
        let content = &text[end..next];
        match kind {
            Marker::Chain => {
                if let Some(orphan) = pending.replace(content) {
                    blocks.push((orphan, ""));
                    malformed = true;
                }
            }
            Marker::Summary => {
                let body = pending.take().unwrap_or_else(|| {
                    malformed = true;
                    ""
                });
                blocks.push((body, content));
            }
        }
    }
    if let Some(orphan) = pending {
        blocks.push((orphan, ""));
        malformed = true;
    }
    Some(Blocks { blocks, malformed })
}

fn without_markers(text: &str) -> String {
    MARKER.replace_all(text, "").trim().to_string()
}

/// Parses model output or a serialized target. Never fails.
///
/// Without a summary marker the whole text (minus any chain marker) is the
/// summary and the chain is empty. Without a chain marker, everything before
/// the summary marker is read as the chain body. Both cases set `malformed`.
pub fn parse_augmented(text: &str) -> ParsedTarget {
    let Some(Blocks { blocks, mut malformed }) = split_blocks(text) else {
        return ParsedTarget {
            target: AugmentedTarget::new(EntityChain::empty(), without_markers(text)),
            malformed: true,
        };
    };

    if let [(body, summary)] = blocks[..] {
        let (groups, bad_body) = parse_body(body);
        return ParsedTarget {
            target: AugmentedTarget::new(EntityChain::new(groups), summary.trim()),
            malformed: malformed || bad_body,
        };
    }

    let mut groups = Vec::with_capacity(blocks.len());
    let mut sentences = Vec::with_capacity(blocks.len());
    for (body, summary) in blocks {
        let (parsed, bad_body) = parse_body(body);
        malformed |= bad_body || parsed.len() > 1;
        groups.push(parsed.into_iter().flatten().collect());
        let summary = summary.trim();
        if !summary.is_empty() {
            sentences.push(summary);
        }
    }
    ParsedTarget {
        target: AugmentedTarget {
            chain: EntityChain::new(groups),
            summary: sentences.join(" "),
            level: PlanLevel::Sentence,
        },
        malformed,
    }
}

/// Parses a sentence-level string into its (group, sentence) pairs.
pub fn parse_sentence_level(text: &str) -> (SentenceLevelTarget, bool) {
    let Some(Blocks { blocks, mut malformed }) = split_blocks(text) else {
        let pair = (Vec::new(), without_markers(text));
        return (SentenceLevelTarget { pairs: vec![pair] }, true);
    };
    let pairs = blocks
        .into_iter()
        .map(|(body, sentence)| {
            let (parsed, bad_body) = parse_body(body);
            malformed |= bad_body || parsed.len() > 1;
            (parsed.into_iter().flatten().collect(), sentence.trim().to_string())
        })
        .collect();
    (SentenceLevelTarget { pairs }, malformed)
}

/// The summary part of `text`, with any chain removed.
pub fn strip_chain(text: &str) -> String {
    parse_augmented(text).target.summary
}
