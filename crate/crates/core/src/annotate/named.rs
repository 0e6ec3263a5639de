//! Named-entity recognizers.
//!
//! Three implementations sit behind [`NamedEntityRecognizer`]:
//! [`PassThrough`] replays spans supplied with the record, [`HeuristicRecognizer`]
//! finds capitalized runs, and [`ExternalRecognizer`] replays spans from a side
//! file produced by any external tagger.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;

use super::{resolve_overlaps, Candidate, EntityKind, SpanRecord, TextInput};
use crate::error::{Error, Result};
use crate::text::CharMap;

/// Source of entity spans for one text.
pub trait NamedEntityRecognizer: Send + Sync {
    /// Spans for `input`, as byte ranges. May include non-named kinds when the
    /// recognizer replays pre-computed annotations.
    fn recognize(&self, input: &TextInput<'_>) -> Result<Vec<Candidate>>;

    /// When true, the returned spans are the complete annotation and the
    /// date/number grammars are not run.
    fn is_complete(&self) -> bool {
        false
    }

    /// Stable name recorded in run metadata.
    fn name(&self) -> &'static str;
}

/// Validates char-offset span records against `text` and converts them to byte candidates.
pub(crate) fn candidates_from_records(text: &str, spans: &[SpanRecord]) -> Result<Vec<Candidate>> {
    let map = CharMap::new(text);
    spans
        .iter()
        .map(|s| {
            let invalid = |reason: &str| Error::InvalidSpan {
                start: s.start,
                end: s.end,
                reason: reason.to_string(),
            };
            if s.start >= s.end {
                return Err(invalid("empty or reversed range"));
            }
            let (Some(start), Some(end)) = (map.to_byte(s.start), map.to_byte(s.end)) else {
                return Err(invalid("out of bounds"));
            };
            if text[start..end] != *s.text {
                return Err(invalid(&format!(
                    "text {:?} does not match source {:?}",
                    s.text,
                    &text[start..end]
                )));
            }
            Ok(Candidate {
                kind: s.kind,
                start,
                end,
            })
        })
        .collect()
}

/// Replays the spans carried by the record itself.
#[derive(Debug, Default, Clone, Copy)]
pub struct PassThrough;

impl NamedEntityRecognizer for PassThrough {
    fn recognize(&self, input: &TextInput<'_>) -> Result<Vec<Candidate>> {
        let spans = input.entities.ok_or(Error::MissingAnnotations)?;
        candidates_from_records(input.text, spans)
    }

    fn is_complete(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "passthrough"
    }
}

#[derive(Debug, Deserialize)]
struct SideRecord {
    id: String,
    entities: Vec<SpanRecord>,
}

/// Replays spans from a JSON Lines side file: `{"id": ..., "entities": [{text, kind, start, end}]}`.
///
/// Date and number grammars still run alongside, mirroring a setup where an
/// external tagger supplies names and regular expressions supply the rest.
#[derive(Debug, Default, Clone)]
pub struct ExternalRecognizer {
    spans: HashMap<String, Vec<SpanRecord>>,
}

impl ExternalRecognizer {
    pub fn from_reader(reader: impl BufRead, origin: &str) -> Result<Self> {
        let mut spans = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SideRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if spans.insert(rec.id.clone(), rec.entities).is_some() {
                return Err(Error::DuplicateId {
                    id: rec.id,
                    file: origin.to_string(),
                });
            }
        }
        Ok(ExternalRecognizer { spans })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn insert(&mut self, id: impl Into<String>, spans: Vec<SpanRecord>) {
        self.spans.insert(id.into(), spans);
    }
}

impl NamedEntityRecognizer for ExternalRecognizer {
    fn recognize(&self, input: &TextInput<'_>) -> Result<Vec<Candidate>> {
        let spans = input
            .id
            .and_then(|id| self.spans.get(id))
            .ok_or(Error::MissingAnnotations)?;
        candidates_from_records(input.text, spans)
    }

    fn name(&self) -> &'static str {
        "external"
    }
}

// Lowercase forms. A capitalized run loses any leading tokens from this list.
const STOPWORDS: &[&str] = &[
    "a", "about", "according", "after", "all", "also", "although", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "both", "but", "by", "despite", "did",
    "do", "does", "dr", "during", "each", "every", "for", "former", "from", "had", "has", "have",
    "he", "hello", "her", "here", "hers", "hi", "him", "his", "how", "however", "i", "if", "in",
    "into", "is", "it", "its", "last", "many", "me", "meanwhile", "mine", "more", "most", "mr",
    "mrs", "ms", "much", "my", "next", "no", "nor", "not", "now", "of", "off", "oh", "ok", "on",
    "onto", "or", "our", "out", "over", "please", "prof", "she", "since", "so", "some", "such",
    "than", "thanks", "that", "the", "their", "theirs", "them", "then", "there", "these", "they",
    "this", "those", "though", "to", "today", "tomorrow", "tonight", "until", "up", "us", "was",
    "we", "were", "what", "when", "where", "whether", "which", "while", "who", "whom", "whose",
    "why", "with", "without", "yes", "yesterday", "yet", "you", "your",
];

// Lowercase tokens allowed inside a run, between two capitalized tokens.
const CONNECTORS: &[&str] = &[
    "of", "de", "van", "von", "der", "den", "la", "le", "du", "da", "del", "di", "al", "bin",
];

// A run made only of these is left to the date grammar.
const CALENDAR_WORDS: &[&str] = &[
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December", "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep",
    "Sept", "Oct", "Nov", "Dec", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday",
    "Saturday", "Sunday",
];

static WORD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:\p{Lu}\.){2,}|[\p{L}\p{N}]+(?:['’\-][\p{L}\p{N}]+)*").expect("word pattern")
});

#[derive(Debug, Clone, Copy)]
struct Word<'a> {
    text: &'a str,
    start: usize,
    end: usize,
}

impl Word<'_> {
    fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }
}

/// Deterministic capitalized-span recognizer with an optional gazetteer.
///
/// A candidate is a maximal run of capitalized words separated only by spaces
/// or tabs, possibly bridged by a lowercase connector (`Bank of England`).
/// Leading stopwords are stripped, runs made only of month or weekday names
/// are discarded, and a trailing possessive `'s` is not part of the name.
/// Gazetteer entries match anywhere on word boundaries, case-sensitively,
/// and compete with runs on length.
#[derive(Debug, Default, Clone)]
pub struct HeuristicRecognizer {
    gazetteer: Vec<String>,
}

impl HeuristicRecognizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_gazetteer(entries: impl IntoIterator<Item = String>) -> Self {
        let mut gazetteer: Vec<String> = entries
            .into_iter()
            .map(|e| e.trim().to_string())
            .filter(|e| !e.is_empty())
            .collect();
        gazetteer.sort();
        gazetteer.dedup();
        HeuristicRecognizer { gazetteer }
    }

    /// Loads a gazetteer file: UTF-8, one surface form per line.
    pub fn from_gazetteer_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        Ok(Self::with_gazetteer(content.lines().map(str::to_string)))
    }

    fn words(text: &str) -> Vec<Word<'_>> {
        WORD.find_iter(text)
            .map(|m| {
                let mut w = Word {
                    text: m.as_str(),
                    start: m.start(),
                    end: m.end(),
                };
                for suffix in ["'s", "’s"] {
                    if w.text.len() > suffix.len() && w.text.ends_with(suffix) {
                        w.end -= suffix.len();
                        w.text = &text[w.start..w.end];
                    }
                }
                w
            })
            .collect()
    }

    fn runs(text: &str) -> Vec<Candidate> {
        let words = Self::words(text);
        let joined = |a: &Word, b: &Word| {
            let gap = &text[a.end..b.start];
            !gap.is_empty() && gap.chars().all(|c| c == ' ' || c == '\t')
        };

        let mut out = Vec::new();
        let mut i = 0;
        while i < words.len() {
            if !words[i].is_capitalized() {
                i += 1;
                continue;
            }
            let mut run = vec![i];
            let mut j = i;
            loop {
                let next = j + 1;
                if next < words.len() && words[next].is_capitalized() && joined(&words[j], &words[next]) {
                    run.push(next);
                    j = next;
                    continue;
                }
                // bridge through one lowercase connector
                if next + 1 < words.len()
                    && CONNECTORS.contains(&words[next].text)
                    && words[next + 1].is_capitalized()
                    && joined(&words[j], &words[next])
                    && joined(&words[next], &words[next + 1])
                {
                    run.push(next);
                    run.push(next + 1);
                    j = next + 1;
                    continue;
                }
                break;
            }
            i = j + 1;

            let mut kept: &[usize] = &run;
            while let Some((&first, rest)) = kept.split_first() {
                let lower = words[first].text.to_lowercase();
                if STOPWORDS.contains(&lower.as_str()) || !words[first].is_capitalized() {
                    kept = rest;
                } else {
                    break;
                }
            }
            let (Some(&first), Some(&last)) = (kept.first(), kept.last()) else {
                continue;
            };
            if kept.iter().all(|&k| CALENDAR_WORDS.contains(&words[k].text)) {
                continue;
            }
            out.push(Candidate {
                kind: EntityKind::Named,
                start: words[first].start,
                end: words[last].end,
            });
        }
        out
    }

    fn gazetteer_hits(&self, text: &str) -> Vec<Candidate> {
        let is_word = |c: Option<char>| c.is_some_and(char::is_alphanumeric);
        let mut out = Vec::new();
        for entry in &self.gazetteer {
            for (start, _) in text.match_indices(entry.as_str()) {
                let end = start + entry.len();
                if is_word(text[..start].chars().next_back()) || is_word(text[end..].chars().next()) {
                    continue;
                }
                out.push(Candidate {
                    kind: EntityKind::Named,
                    start,
                    end,
                });
            }
        }
        out
    }
}

impl NamedEntityRecognizer for HeuristicRecognizer {
    fn recognize(&self, input: &TextInput<'_>) -> Result<Vec<Candidate>> {
        let mut raw = Self::runs(input.text);
        raw.extend(self.gazetteer_hits(input.text));
        Ok(resolve_overlaps(input.text, raw))
    }

    fn name(&self) -> &'static str {
        "heuristic"
    }
}
