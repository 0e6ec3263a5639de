//! Offset bookkeeping and the alphanumeric tokenizer shared by matching and ROUGE.

/// Converts between byte offsets and character (Unicode scalar) offsets of one string.
#[derive(Debug, Clone)]
pub struct CharMap {
    // byte offset of every char boundary, including the end; `None` for pure ASCII
    boundaries: Option<Vec<usize>>,
    len: usize,
}

impl CharMap {
    pub fn new(text: &str) -> Self {
        if text.is_ascii() {
            return CharMap {
                boundaries: None,
                len: text.len(),
            };
        }
        let mut boundaries: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
        boundaries.push(text.len());
        CharMap {
            len: boundaries.len() - 1,
            boundaries: Some(boundaries),
        }
    }

    /// Number of characters in the mapped string.
    pub fn char_len(&self) -> usize {
        self.len
    }

    /// Byte offset -> char offset. `byte` must sit on a char boundary.
    pub fn to_char(&self, byte: usize) -> usize {
        match &self.boundaries {
            None => byte,
            Some(b) => b.binary_search(&byte).unwrap_or_else(|i| i),
        }
    }

    /// Char offset -> byte offset, `None` when past the end.
    pub fn to_byte(&self, ch: usize) -> Option<usize> {
        match &self.boundaries {
            None => (ch <= self.len).then_some(ch),
            Some(b) => b.get(ch).copied(),
        }
    }
}

/// A maximal run of alphanumeric characters, with byte offsets into its source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// Splits `text` into maximal alphanumeric runs. Everything else separates tokens.
pub fn word_tokens(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            out.push(Token {
                text: &text[s..i],
                start: s,
                end: i,
            });
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &text[s..],
            start: s,
            end: text.len(),
        });
    }
    out
}

/// Whitespace token count, as used for summary length.
pub fn whitespace_len(text: &str) -> usize {
    text.split_whitespace().count()
}
