//! Entity annotation: sentence segmentation plus named, date and number spans.
//!
//! All offsets exposed here are character offsets (Unicode scalar values),
//! end exclusive. When raw detectors overlap, the survivor is chosen by kind
//! precedence (named, then date, then number), then by length, then leftmost.

mod named;
mod patterns;
mod segment;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use named::{ExternalRecognizer, HeuristicRecognizer, NamedEntityRecognizer, PassThrough};
pub use segment::segment_sentences;

use crate::error::{Error, Result};
use crate::text::CharMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Named,
    Date,
    Number,
}

impl EntityKind {
    pub const ALL: [EntityKind; 3] = [EntityKind::Named, EntityKind::Date, EntityKind::Number];

    fn precedence(self) -> u8 {
        match self {
            EntityKind::Named => 0,
            EntityKind::Date => 1,
            EntityKind::Number => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Named => "named",
            EntityKind::Date => "date",
            EntityKind::Number => "number",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "named" | "ne" => Ok(EntityKind::Named),
            "date" | "d" => Ok(EntityKind::Date),
            "number" | "num" => Ok(EntityKind::Number),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// Set of enabled entity kinds. Serializes as a list in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<EntityKind>", from = "Vec<EntityKind>")]
pub struct KindSet(u8);

impl KindSet {
    pub const ALL: KindSet = KindSet(0b111);

    pub fn empty() -> Self {
        KindSet(0)
    }

    fn bit(kind: EntityKind) -> u8 {
        1 << kind.precedence()
    }

    pub fn with(mut self, kind: EntityKind) -> Self {
        self.0 |= Self::bit(kind);
        self
    }

    pub fn contains(self, kind: EntityKind) -> bool {
        self.0 & Self::bit(kind) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = EntityKind> {
        EntityKind::ALL.into_iter().filter(move |k| self.contains(*k))
    }
}

impl Default for KindSet {
    fn default() -> Self {
        KindSet::ALL
    }
}

impl FromIterator<EntityKind> for KindSet {
    fn from_iter<I: IntoIterator<Item = EntityKind>>(iter: I) -> Self {
        iter.into_iter().fold(KindSet::empty(), KindSet::with)
    }
}

impl From<Vec<EntityKind>> for KindSet {
    fn from(kinds: Vec<EntityKind>) -> Self {
        kinds.into_iter().collect()
    }
}

impl From<KindSet> for Vec<EntityKind> {
    fn from(set: KindSet) -> Self {
        set.iter().collect()
    }
}

impl FromStr for KindSet {
    type Err = Error;

    /// Parses a comma-separated list such as `named,date,number`.
    fn from_str(s: &str) -> Result<Self> {
        let set = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(EntityKind::from_str)
            .collect::<Result<KindSet>>()?;
        if set.is_empty() {
            return Err(Error::NoKinds);
        }
        Ok(set)
    }
}

impl fmt::Display for KindSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(EntityKind::as_str).collect();
        f.write_str(&names.join(","))
    }
}

/// A span as supplied from outside (record field or side file).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanRecord {
    pub text: String,
    pub kind: EntityKind,
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sent: Option<usize>,
}

impl SpanRecord {
    pub fn new(text: impl Into<String>, kind: EntityKind, start: usize, end: usize) -> Self {
        SpanRecord {
            text: text.into(),
            kind,
            start,
            end,
            sent: None,
        }
    }
}

/// One detected entity occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub text: String,
    pub kind: EntityKind,
    pub start: usize,
    pub end: usize,
    pub sent: usize,
}

impl From<&EntitySpan> for SpanRecord {
    fn from(s: &EntitySpan) -> Self {
        SpanRecord {
            text: s.text.clone(),
            kind: s.kind,
            start: s.start,
            end: s.end,
            sent: Some(s.sent),
        }
    }
}

/// A text with its sentence segmentation and non-overlapping entity spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedText {
    pub text: String,
    pub sentences: Vec<(usize, usize)>,
    pub spans: Vec<EntitySpan>,
    byte_sentences: Vec<Range<usize>>,
}

impl AnnotatedText {
    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn sentence_str(&self, index: usize) -> &str {
        &self.text[self.byte_sentences[index].clone()]
    }

    pub(crate) fn sentence_byte_range(&self, index: usize) -> Range<usize> {
        self.byte_sentences[index].clone()
    }

    /// Spans belonging to sentence `index`, in order.
    pub fn sentence_spans(&self, index: usize) -> impl Iterator<Item = &EntitySpan> {
        self.spans.iter().filter(move |s| s.sent == index)
    }
}

/// Everything a recognizer may consult for one text.
#[derive(Debug, Clone, Copy)]
pub struct TextInput<'a> {
    pub id: Option<&'a str>,
    pub text: &'a str,
    pub entities: Option<&'a [SpanRecord]>,
}

impl<'a> TextInput<'a> {
    pub fn new(text: &'a str) -> Self {
        TextInput {
            id: None,
            text,
            entities: None,
        }
    }

    pub fn with_id(mut self, id: &'a str) -> Self {
        self.id = Some(id);
        self
    }

    pub fn with_entities(mut self, entities: &'a [SpanRecord]) -> Self {
        self.entities = Some(entities);
        self
    }
}

/// Byte-offset span produced by a detector before resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub kind: EntityKind,
    pub start: usize,
    pub end: usize,
}

/// Greedy overlap resolution: kind precedence, then longer (in chars), then
/// leftmost. Output is sorted by start.
pub(crate) fn resolve_overlaps(text: &str, mut raw: Vec<Candidate>) -> Vec<Candidate> {
    let char_len = |c: &Candidate| text[c.start..c.end].chars().count();
    raw.sort_by(|a, b| {
        a.kind
            .precedence()
            .cmp(&b.kind.precedence())
            .then(char_len(b).cmp(&char_len(a)))
            .then(a.start.cmp(&b.start))
    });
    let mut kept: Vec<Candidate> = Vec::with_capacity(raw.len());
    for cand in raw {
        if cand.start >= cand.end {
            continue;
        }
        if kept.iter().all(|k| cand.end <= k.start || k.end <= cand.start) {
            kept.push(cand);
        }
    }
    kept.sort_by_key(|c| c.start);
    kept
}

fn containing_sentence(sentences: &[Range<usize>], c: &Candidate) -> Option<usize> {
    let i = sentences.partition_point(|r| r.end <= c.start);
    let r = sentences.get(i)?;
    (r.start <= c.start && c.end <= r.end).then_some(i)
}

fn finish(text: &str, sentences: &[Range<usize>], candidates: Vec<Candidate>) -> Vec<EntitySpan> {
    let map = CharMap::new(text);
    candidates
        .into_iter()
        .filter_map(|c| {
            let sent = containing_sentence(sentences, &c)?;
            Some(EntitySpan {
                text: text[c.start..c.end].to_string(),
                kind: c.kind,
                start: map.to_char(c.start),
                end: map.to_char(c.end),
                sent,
            })
        })
        .collect()
}

/// Date spans in `text`.
pub fn detect_dates(text: &str) -> Vec<EntitySpan> {
    let sentences = segment::sentence_byte_ranges(text);
    let within: Vec<Candidate> = patterns::date_candidates(text)
        .into_iter()
        .filter(|c| containing_sentence(&sentences, c).is_some())
        .collect();
    finish(text, &sentences, within)
}

/// Number spans in `text`, excluding anything claimed by a date.
pub fn detect_numbers(text: &str) -> Vec<EntitySpan> {
    let sentences = segment::sentence_byte_ranges(text);
    let mut raw = patterns::date_candidates(text);
    raw.extend(patterns::number_candidates(text));
    raw.retain(|c| containing_sentence(&sentences, c).is_some());
    let numbers = resolve_overlaps(text, raw)
        .into_iter()
        .filter(|c| c.kind == EntityKind::Number)
        .collect();
    finish(text, &sentences, numbers)
}

/// Named spans for `input` according to `recognizer`.
pub fn recognize_named(
    input: &TextInput<'_>,
    recognizer: &dyn NamedEntityRecognizer,
) -> Result<Vec<EntitySpan>> {
    let sentences = segment::sentence_byte_ranges(input.text);
    let mut raw = recognizer.recognize(input)?;
    raw.retain(|c| c.kind == EntityKind::Named && containing_sentence(&sentences, c).is_some());
    Ok(finish(input.text, &sentences, resolve_overlaps(input.text, raw)))
}

/// Combines segmentation, the enabled detectors and overlap resolution.
#[derive(Clone)]
pub struct Annotator {
    kinds: KindSet,
    recognizer: Arc<dyn NamedEntityRecognizer>,
}

impl fmt::Debug for Annotator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Annotator")
            .field("kinds", &self.kinds)
            .field("recognizer", &self.recognizer.name())
            .finish()
    }
}

impl Annotator {
    pub fn new(kinds: KindSet, recognizer: impl NamedEntityRecognizer + 'static) -> Result<Self> {
        Self::from_arc(kinds, Arc::new(recognizer))
    }

    pub fn from_arc(kinds: KindSet, recognizer: Arc<dyn NamedEntityRecognizer>) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::NoKinds);
        }
        Ok(Annotator { kinds, recognizer })
    }

    /// All kinds, heuristic recognizer, no gazetteer.
    pub fn heuristic() -> Self {
        Annotator {
            kinds: KindSet::ALL,
            recognizer: Arc::new(HeuristicRecognizer::new()),
        }
    }

    pub fn kinds(&self) -> KindSet {
        self.kinds
    }

    pub fn recognizer_name(&self) -> &'static str {
        self.recognizer.name()
    }

    pub fn annotate_text(&self, text: &str) -> Result<AnnotatedText> {
        self.annotate(&TextInput::new(text))
    }

    pub fn annotate(&self, input: &TextInput<'_>) -> Result<AnnotatedText> {
        let text = input.text;
        let sentences = segment::sentence_byte_ranges(text);

        let mut raw = Vec::new();
        let complete = self.recognizer.is_complete();
        if complete || self.kinds.contains(EntityKind::Named) {
            raw = self.recognizer.recognize(input)?;
        }
        if !complete {
            if self.kinds.contains(EntityKind::Date) {
                raw.extend(patterns::date_candidates(text));
            }
            if self.kinds.contains(EntityKind::Number) {
                raw.extend(patterns::number_candidates(text));
            }
        }
        raw.retain(|c| self.kinds.contains(c.kind));

        let mut within = Vec::with_capacity(raw.len());
        for c in raw {
            if containing_sentence(&sentences, &c).is_some() {
                within.push(c);
            } else if complete {
                let map = CharMap::new(text);
                return Err(Error::InvalidSpan {
                    start: map.to_char(c.start),
                    end: map.to_char(c.end),
                    reason: "span crosses a sentence boundary".to_string(),
                });
            }
        }

        let spans = finish(text, &sentences, resolve_overlaps(text, within));
        let map = CharMap::new(text);
        Ok(AnnotatedText {
            text: text.to_string(),
            sentences: sentences
                .iter()
                .map(|r| (map.to_char(r.start), map.to_char(r.end)))
                .collect(),
            spans,
            byte_sentences: sentences,
        })
    }
}
