//! Per-token confusion sets: the alternatives the search will try.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lexicon::{spell_suggest, Lexicon, OovPolicy, UNK};
use crate::text::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ErrorCategory {
    Prep,
    Det,
    Morph,
    Spell,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Prep => "PREP",
            ErrorCategory::Det => "DET",
            ErrorCategory::Morph => "MORPH",
            ErrorCategory::Spell => "SPELL",
        }
    }

    /// Whether the empty alternative is allowed in this category.
    pub fn allows_deletion(self) -> bool {
        matches!(self, ErrorCategory::Prep | ErrorCategory::Det)
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PREP" => Ok(ErrorCategory::Prep),
            "DET" => Ok(ErrorCategory::Det),
            "MORPH" => Ok(ErrorCategory::Morph),
            "SPELL" => Ok(ErrorCategory::Spell),
            _ => Err(format!("unknown error category {s:?}")),
        }
    }
}

/// Alternatives for the single token at `start..end`. An empty string
/// alternative deletes the token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub start: usize,
    pub end: usize,
    pub category: ErrorCategory,
    pub original: String,
    pub alternatives: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConfusionConfig {
    pub oov_policy: OovPolicy,
    pub spell_max_distance: usize,
    pub spell_max_suggestions: usize,
}

impl Default for ConfusionConfig {
    fn default() -> Self {
        ConfusionConfig {
            oov_policy: OovPolicy::Unk,
            spell_max_distance: 2,
            spell_max_suggestions: 10,
        }
    }
}

/// Builds candidate sets for a lexicon and configuration.
#[derive(Debug, Clone, Default)]
pub struct CandidateGenerator {
    lexicon: Lexicon,
    config: ConfusionConfig,
}

impl CandidateGenerator {
    pub fn new(lexicon: Lexicon, config: ConfusionConfig) -> Self {
        CandidateGenerator { lexicon, config }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn config(&self) -> &ConfusionConfig {
        &self.config
    }

    /// One candidate set per qualifying token, in token order.
    ///
    /// Categories are tried in the order PREP, DET, MORPH, SPELL and the
    /// first match wins. Alternatives to a capitalized token are
    /// capitalized. The sentence-initial token is looked up lowercased when
    /// its surface form is unknown. Every proposed word missing from the
    /// vocabulary is handled by the configured [`OovPolicy`].
    pub fn generate(&self, sentence: &Sentence) -> Vec<CandidateSet> {
        sentence
            .words()
            .enumerate()
            .filter_map(|(i, word)| self.candidates_for(i, word))
            .collect()
    }

    fn candidates_for(&self, index: usize, word: &str) -> Option<CandidateSet> {
        let lex = &self.lexicon;
        let fw = &lex.function_words;
        let capitalized = word.chars().next().is_some_and(char::is_uppercase);
        let lowered;
        let lookup = if index == 0 && !lex.vocab.contains(word) {
            lowered = word.to_lowercase();
            lowered.as_str()
        } else {
            word
        };

        let (category, raw) = if fw.is_preposition(word) {
            (ErrorCategory::Prep, closed_class(fw.prepositions(), word))
        } else if fw.is_determiner(word) {
            (ErrorCategory::Det, closed_class(fw.determiners(), word))
        } else if lex.vocab.contains(lookup) {
            let forms = lex
                .inflections
                .related_forms(lookup)
                .into_iter()
                .filter(|f| *f != lookup)
                .map(str::to_owned)
                .collect();
            (ErrorCategory::Morph, forms)
        } else if !lookup.is_empty() && lookup.chars().all(char::is_alphabetic) {
            let suggestions = spell_suggest(
                lookup,
                &lex.vocab,
                self.config.spell_max_distance,
                self.config.spell_max_suggestions,
            );
            (ErrorCategory::Spell, suggestions)
        } else {
            return None;
        };

        let mut alternatives: Vec<String> = Vec::with_capacity(raw.len());
        for alt in raw {
            let alt = if alt.is_empty() {
                if !category.allows_deletion() {
                    continue;
                }
                alt
            } else {
                let alt = if capitalized { capitalize(&alt) } else { alt };
                if alt.split_whitespace().all(|w| lex.vocab.contains(w)) {
                    alt
                } else {
                    match self.config.oov_policy {
                        OovPolicy::Unk => UNK.to_owned(),
                        OovPolicy::Drop => continue,
                    }
                }
            };
            if alt == word || alternatives.contains(&alt) {
                continue;
            }
            alternatives.push(alt);
        }
        if alternatives.is_empty() {
            return None;
        }
        Some(CandidateSet {
            start: index,
            end: index + 1,
            category,
            original: word.to_owned(),
            alternatives,
        })
    }
}

/// Inventory minus the word itself, in file order, with the empty
/// alternative last.
fn closed_class(inventory: &[String], word: &str) -> Vec<String> {
    let lowered = word.to_lowercase();
    inventory
        .iter()
        .filter(|w| **w != lowered)
        .cloned()
        .chain(std::iter::once(String::new()))
        .collect()
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
