//! Rule-based sentence segmentation.
//!
//! A sentence ends at a run of `.`, `!` or `?` (plus any closing quotes or
//! brackets glued to it) when the run is followed by whitespace and the next
//! sentence opens with an uppercase letter or digit, optionally behind an
//! opening quote or bracket. A lone `.` after a known abbreviation, a single
//! capital initial, or a dotted acronym (`U.S.`) is not a boundary. A blank
//! line always ends a sentence.

use std::ops::Range;

use crate::text::CharMap;

const ABBREVIATIONS: &[&str] = &[
    "Mr", "Mrs", "Ms", "Dr", "Prof", "St", "Sr", "Jr", "No", "Nos", "Gen", "Gov", "Sen", "Rep",
    "Rev", "Lt", "Col", "Capt", "Sgt", "Mt", "Ft", "vs", "e.g", "i.e", "cf", "approx", "Fig",
    "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep", "Sept", "Oct", "Nov", "Dec",
];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '”' | '’' | ')' | ']' | '»')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '“' | '‘' | '(' | '[' | '«')
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit()
}

/// True when the word ending right before byte `dot` suppresses a boundary.
fn is_abbreviation(text: &str, dot: usize) -> bool {
    let before = &text[..dot];
    let word_start = before
        .rfind(char::is_whitespace)
        .map(|i| i + before[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(0);
    let word = before[word_start..].trim_start_matches(is_opener);
    if word.is_empty() {
        return false;
    }
    if ABBREVIATIONS.contains(&word) {
        return true;
    }
    let mut chars = word.chars();
    let first = chars.next().unwrap();
    // single capital initial: "J. Smith"
    if first.is_uppercase() && chars.as_str().is_empty() {
        return true;
    }
    // dotted acronym: "U.S", "U.K"
    word.contains('.')
        && word
            .split('.')
            .all(|part| part.chars().count() == 1 && part.chars().all(char::is_uppercase))
}

/// Byte ranges of the sentences in `text`.
pub(crate) fn sentence_byte_ranges(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let byte_at = |i: usize| if i < n { chars[i].0 } else { text.len() };

    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < n {
        let (b, c) = chars[i];
        if c.is_whitespace() {
            let mut j = i;
            let mut newlines = 0;
            while j < n && chars[j].1.is_whitespace() {
                if chars[j].1 == '\n' {
                    newlines += 1;
                }
                j += 1;
            }
            if newlines >= 2 {
                if let Some(s) = start.take() {
                    out.push(s..b);
                }
            }
            i = j;
            continue;
        }
        if start.is_none() {
            start = Some(b);
        }
        if !is_terminator(c) {
            i += 1;
            continue;
        }

        let mut j = i + 1;
        while j < n && is_terminator(chars[j].1) {
            j += 1;
        }
        let single_dot = c == '.' && j == i + 1;
        while j < n && is_closer(chars[j].1) {
            j += 1;
        }
        let end = byte_at(j);
        if j < n && chars[j].1.is_whitespace() {
            let mut k = j;
            while k < n && chars[k].1.is_whitespace() {
                k += 1;
            }
            let opens = k < n
                && (opens_sentence(chars[k].1)
                    || (is_opener(chars[k].1) && k + 1 < n && opens_sentence(chars[k + 1].1)));
            if opens && !(single_dot && is_abbreviation(text, b)) {
                if let Some(s) = start.take() {
                    out.push(s..end);
                }
            }
        }
        i = j;
    }
    if let Some(s) = start {
        out.push(s..text.trim_end().len());
    }
    out
}

/// Sentence ranges as `(start, end)` character offsets, end exclusive.
///
/// Ranges are disjoint and ordered; only whitespace lies between or around them.
pub fn segment_sentences(text: &str) -> Vec<(usize, usize)> {
    let map = CharMap::new(text);
    sentence_byte_ranges(text)
        .into_iter()
        .map(|r| (map.to_char(r.start), map.to_char(r.end)))
        .collect()
}
