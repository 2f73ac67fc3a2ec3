//! Tokenized sentences and token-offset edits.
//!
//! Every span in this crate is a half-open range of token offsets. Character
//! offsets never appear.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single whitespace-free token and its position in the owning sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub index: usize,
}

/// An ordered list of tokens.
///
/// Construction always re-splits on whitespace and reindexes, so a token is
/// never empty and never contains whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence from words. Words containing whitespace are split,
    /// empty words are dropped.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tokens = words
            .into_iter()
            .flat_map(|w| {
                w.as_ref()
                    .split_whitespace()
                    .map(str::to_owned)
                    .collect::<Vec<_>>()
            })
            .enumerate()
            .map(|(index, surface)| Token { surface, index })
            .collect();
        Sentence { tokens }
    }

    /// Splits pre-tokenized text on whitespace only.
    pub fn from_tokenized(line: &str) -> Self {
        Self::from_words(line.split_whitespace())
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(|t| t.surface.as_str())
    }

    pub fn words(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    pub fn to_words(&self) -> Vec<String> {
        self.words().map(str::to_owned).collect()
    }

    /// Space-joins the tokens.
    pub fn detokenize(&self) -> String {
        self.words().collect::<Vec<_>>().join(" ")
    }

    /// Replaces the token span `start..end` with the whitespace-split
    /// `replacement`. Panics on an out-of-range span; use [`apply_edits`] for
    /// checked application.
    pub(crate) fn splice(&self, start: usize, end: usize, replacement: &str) -> Sentence {
        let mut words: Vec<&str> = Vec::with_capacity(self.len() + 1);
        words.extend(self.words().take(start));
        words.extend(replacement.split_whitespace());
        words.extend(self.words().skip(end));
        Sentence::from_words(words)
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detokenize())
    }
}

/// Replacement of the token span `start..end`.
///
/// `start == end` is a pure insertion; an empty replacement over a non-empty
/// span is a deletion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: String,
    #[serde(default)]
    pub type_label: String,
}

impl Edit {
    pub fn new(start: usize, end: usize, replacement: impl Into<String>) -> Self {
        Edit {
            start,
            end,
            replacement: replacement.into(),
            type_label: String::new(),
        }
    }

    pub fn with_type(mut self, label: impl Into<String>) -> Self {
        self.type_label = label.into();
        self
    }

    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    pub fn is_deletion(&self) -> bool {
        self.start < self.end && self.replacement.split_whitespace().next().is_none()
    }

    /// Replacement tokens after whitespace normalization.
    pub fn replacement_tokens(&self) -> Vec<&str> {
        self.replacement.split_whitespace().collect()
    }

    /// Net change in sentence length when this edit is applied.
    pub fn token_delta(&self) -> isize {
        self.replacement_tokens().len() as isize - (self.end - self.start) as isize
    }

    /// Span and replacement equality, ignoring the type label and whitespace
    /// differences inside the replacement.
    pub fn same_correction(&self, other: &Edit, ignore_case: bool) -> bool {
        if self.start != other.start || self.end != other.end {
            return false;
        }
        let a = self.replacement_tokens();
        let b = other.replacement_tokens();
        if ignore_case {
            a.len() == b.len()
                && a.iter()
                    .zip(&b)
                    .all(|(x, y)| x.to_lowercase() == y.to_lowercase())
        } else {
            a == b
        }
    }
}

/// One annotator's gold edits for a sentence. An empty list is a "noop"
/// annotation: the annotator asserts the sentence is already correct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub annotator_id: u32,
    pub edits: Vec<Edit>,
}

impl GoldAnnotation {
    pub fn noop(annotator_id: u32) -> Self {
        GoldAnnotation {
            annotator_id,
            edits: Vec::new(),
        }
    }

    pub fn is_noop(&self) -> bool {
        self.edits.is_empty()
    }

    /// True when the edits are sorted and pairwise non-overlapping.
    pub fn is_well_formed(&self) -> bool {
        check_edit_order(&self.edits, usize::MAX).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpanConflict {
    #[error("edit {index} span {start}..{end} is out of range for a sentence of {len} tokens")]
    OutOfRange {
        index: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("edit {index} span {start}..{end} overlaps or precedes the previous edit ending at {prev_end}")]
    Overlap {
        index: usize,
        start: usize,
        end: usize,
        prev_end: usize,
    },
}

fn check_edit_order(edits: &[Edit], len: usize) -> Result<(), SpanConflict> {
    let mut prev_end = 0;
    for (index, e) in edits.iter().enumerate() {
        if e.start > e.end || e.end > len {
            return Err(SpanConflict::OutOfRange {
                index,
                start: e.start,
                end: e.end,
                len,
            });
        }
        if e.start < prev_end {
            return Err(SpanConflict::Overlap {
                index,
                start: e.start,
                end: e.end,
                prev_end,
            });
        }
        prev_end = e.end;
    }
    Ok(())
}

/// Applies sorted, non-overlapping edits to `sentence`, returning a new
/// sentence.
///
/// Several insertions at the same offset land in listed order. Replacements
/// are re-split on whitespace, so a multi-word replacement yields several
/// tokens and an empty one removes the span.
pub fn apply_edits(sentence: &Sentence, edits: &[Edit]) -> Result<Sentence, SpanConflict> {
    check_edit_order(edits, sentence.len())?;
    let mut words: Vec<&str> = sentence.words().collect();
    // Right to left keeps the offsets of earlier edits valid.
    for e in edits.iter().rev() {
        words.splice(e.start..e.end, e.replacement.split_whitespace());
    }
    Ok(Sentence::from_words(words))
}

/// Minimal raw-text tokenizer: whitespace split, then leading and trailing
/// ASCII punctuation peeled off into one-character tokens.
pub fn tokenize(text: &str) -> Sentence {
    let mut out: Vec<&str> = Vec::new();
    for chunk in text.split_whitespace() {
        let bytes = chunk.as_bytes();
        let mut lead = 0;
        while lead < bytes.len() && bytes[lead].is_ascii_punctuation() {
            lead += 1;
        }
        let mut trail = bytes.len();
        while trail > lead && bytes[trail - 1].is_ascii_punctuation() {
            trail -= 1;
        }
        // ASCII bytes are always char boundaries.
        for i in 0..lead {
            out.push(&chunk[i..i + 1]);
        }
        if lead < trail {
            out.push(&chunk[lead..trail]);
        }
        for i in trail.max(lead)..bytes.len() {
            out.push(&chunk[i..i + 1]);
        }
    }
    Sentence::from_words(out)
}
