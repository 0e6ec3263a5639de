//! Regular grammars for dates and numbers.
//!
//! Dates:
//! - day/month/year permutations with month names or abbreviations
//!   (`25 March 2015`, `3rd of May`, `March 25, 2015`, `Sept. 2014`)
//! - ISO `2015-03-25` and slashed `25/03/2015`, `3/25/15`
//! - weekday names
//! - standalone years 1000-2999 not glued to other digits
//!
//! Numbers:
//! - digit numerals with optional thousands separators and decimals
//!   (`1,234.5`, `42`), optionally followed by a magnitude word (`5 million`)
//! - digit ordinals (`3rd`, `21st`)
//! - spelled-out cardinals one..twenty, thirty..ninety and
//!   hundred/thousand/million/billion, joined by spaces, hyphens or `and`
//!   (`twenty-five`, `two hundred`)
//!
//! Month and weekday names are matched case-sensitively (capitalized), since
//! lowercase "may" or "march" are usually not dates. Spelled-out numbers are
//! matched case-insensitively.

use std::sync::LazyLock;

use regex::Regex;

use super::{resolve_overlaps, Candidate, EntityKind};

const MONTH_FULL: &str = r"(?:January|February|March|April|May|June|July|August|September|October|November|December)\b";
const MONTH_ABBR: &str = r"(?:Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sept|Sep|Oct|Nov|Dec)\b";
const DAY: &str = r"(?:[12][0-9]|3[01]|0?[1-9])(?:st|nd|rd|th)?";
const YEAR: &str = r"[12][0-9]{3}";

static DATE_PATTERNS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    // an abbreviation's period belongs to the date only when more date follows
    let month_end = format!("(?:{MONTH_FULL}|{MONTH_ABBR})");
    let month = format!(r"(?:{MONTH_FULL}|{MONTH_ABBR}\.?)");
    [
        format!(r"\b{DAY}\s+(?:of\s+)?(?:{month},?\s+{YEAR}\b|{month_end})"),
        format!(r"\b{month}\s+{DAY}\b(?:,?\s+{YEAR}\b)?"),
        format!(r"\b{month},?\s+{YEAR}\b"),
        format!(r"\b{YEAR}-(?:0[1-9]|1[0-2])-(?:0[1-9]|[12][0-9]|3[01])\b"),
        r"\b[0-9]{1,2}/[0-9]{1,2}/(?:[0-9]{4}|[0-9]{2})\b".to_string(),
        r"\b(?:Monday|Tuesday|Wednesday|Thursday|Friday|Saturday|Sunday)\b".to_string(),
    ]
    .iter()
    .map(|p| Regex::new(p).expect("date pattern"))
    .collect()
});

static YEAR_PATTERN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"\b{YEAR}\b")).expect("year pattern"));

const MAGNITUDE: &str = r"(?:hundred|thousand|million|billion|trillion)";
const CARDINAL: &str = "(?:one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|\
thirteen|fourteen|fifteen|sixteen|seventeen|eighteen|nineteen|twenty|thirty|forty|fifty|\
sixty|seventy|eighty|ninety|hundred|thousand|million|billion)";

static NUMBER_PATTERNS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        format!(r"\b[0-9]{{1,3}}(?:,[0-9]{{3}})+(?:\.[0-9]+)?\b(?:\s+{MAGNITUDE}\b)?"),
        format!(r"\b[0-9]+(?:\.[0-9]+)?\b(?:\s+{MAGNITUDE}\b)?"),
        r"\b[0-9]+(?:st|nd|rd|th)\b".to_string(),
        format!(r"(?i)\b{CARDINAL}(?:(?:-|\s+|\s+and\s+){CARDINAL})*\b"),
    ]
    .iter()
    .map(|p| Regex::new(p).expect("number pattern"))
    .collect()
});

fn collect(patterns: &[Regex], text: &str, kind: EntityKind, out: &mut Vec<Candidate>) {
    for re in patterns {
        out.extend(re.find_iter(text).map(|m| Candidate {
            kind,
            start: m.start(),
            end: m.end(),
        }));
    }
}

/// A bare year is rejected when it is part of a larger numeral such as
/// `1,2015`, `2015.5` or `12/2015`.
fn year_is_standalone(text: &str, start: usize, end: usize) -> bool {
    let before = &text[..start];
    let after = &text[end..];
    let glued_before = {
        let mut it = before.chars().rev();
        match (it.next(), it.next()) {
            (Some('.' | ',' | '/'), Some(d)) => d.is_ascii_digit(),
            _ => false,
        }
    };
    let glued_after = {
        let mut it = after.chars();
        match (it.next(), it.next()) {
            (Some('.' | ',' | '/'), Some(d)) => d.is_ascii_digit(),
            _ => false,
        }
    };
    !glued_before && !glued_after
}

/// Raw date candidates, resolved to non-overlapping spans (longest, then leftmost).
pub(crate) fn date_candidates(text: &str) -> Vec<Candidate> {
    let mut raw = Vec::new();
    collect(&DATE_PATTERNS, text, EntityKind::Date, &mut raw);
    raw.extend(
        YEAR_PATTERN
            .find_iter(text)
            .filter(|m| year_is_standalone(text, m.start(), m.end()))
            .map(|m| Candidate {
                kind: EntityKind::Date,
                start: m.start(),
                end: m.end(),
            }),
    );
    resolve_overlaps(text, raw)
}

/// Raw number candidates, resolved among themselves. Date exclusion is applied
/// by the caller through kind precedence.
pub(crate) fn number_candidates(text: &str) -> Vec<Candidate> {
    let mut raw = Vec::new();
    collect(&NUMBER_PATTERNS, text, EntityKind::Number, &mut raw);
    resolve_overlaps(text, raw)
}
