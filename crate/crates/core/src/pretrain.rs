//! Gap-sentence pretraining examples with chain-prefixed targets.

use serde::{Deserialize, Serialize};

use crate::annotate::AnnotatedText;
use crate::chain::{build_chain, serialize_summary_level, AugmentedTarget, EntityChain};
use crate::error::{Error, Result};
use crate::eval::rouge::{rouge_n, tokenize};

pub const DEFAULT_N_MAX: usize = 5;
pub const DEFAULT_MASK_TOKEN: &str = "[MASK]";

/// Largest selection allowed for a document: 30% of its sentences, rounded up.
pub fn sentence_cap(sentences: usize) -> usize {
    (3 * sentences).div_ceil(10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSelection {
    /// Sentence indices, increasing.
    pub selected: Vec<usize>,
    pub scores: Vec<f64>,
    pub mask_token: String,
}

/// ROUGE-1 F1 of each sentence against all the other sentences joined.
pub fn score_sentences(document: &AnnotatedText, stem: bool) -> Vec<f64> {
    let tokens: Vec<Vec<String>> = (0..document.sentence_count())
        .map(|i| tokenize(document.sentence_str(i), stem))
        .collect();
    (0..tokens.len())
        .map(|i| {
            let rest: Vec<&String> = tokens
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .flat_map(|(_, t)| t)
                .collect();
            let own: Vec<&String> = tokens[i].iter().collect();
            rouge_n(&own, &rest, 1).f1
        })
        .collect()
}

/// Picks the top `min(n_max, cap)` sentences by score; ties go to the earlier sentence.
pub fn select_gap_sentences(
    document: &AnnotatedText,
    n_max: usize,
    mask_token: &str,
    stem: bool,
) -> Result<GapSelection> {
    if n_max == 0 {
        return Err(Error::InvalidNMax);
    }
    if document.sentence_count() == 0 {
        return Err(Error::EmptyDocument);
    }
    let scores = score_sentences(document, stem);
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(n_max.min(sentence_cap(scores.len())));
    order.sort_unstable();
    Ok(GapSelection {
        selected: order,
        scores,
        mask_token: mask_token.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PretrainExample {
    pub masked_input: String,
    pub target: String,
}

/// Masks the selected sentences and builds the summary-level target over them.
pub fn build_pretrain_example(document: &AnnotatedText, selection: &GapSelection) -> Result<PretrainExample> {
    let full = build_chain(document);
    let mut masked = String::with_capacity(document.text.len());
    let mut cursor = 0;
    for &i in &selection.selected {
        let range = document.sentence_byte_range(i);
        masked.push_str(&document.text[cursor..range.start]);
        masked.push_str(&selection.mask_token);
        cursor = range.end;
    }
    masked.push_str(&document.text[cursor..]);

    let chain = EntityChain::new(selection.selected.iter().map(|&i| full.groups[i].clone()).collect());
    let summary: Vec<&str> = selection.selected.iter().map(|&i| document.sentence_str(i)).collect();
    let target = serialize_summary_level(&AugmentedTarget::new(chain, summary.join(" ")))?;
    Ok(PretrainExample {
        masked_input: masked,
        target,
    })
}
