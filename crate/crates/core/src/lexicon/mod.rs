//! Raw material for confusion sets: vocabulary, inflections, closed-class
//! word inventories and spelling suggestions.

mod inflections;
mod spell;
mod vocab;

use std::io::{self, BufRead};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use inflections::{InflectionDb, InflectionEntry, PartOfSpeech};
pub use spell::{bounded_distance, spell_suggest};
pub use vocab::Vocabulary;

/// Reserved unknown-word token.
pub const UNK: &str = "[UNK]";

/// The bundled preposition list, one entry per line.
pub const DEFAULT_PREPOSITIONS: &str = include_str!("../../data/prepositions.txt");
/// The bundled determiner list, one entry per line.
pub const DEFAULT_DETERMINERS: &str = include_str!("../../data/determiners.txt");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("{0} inventory is empty")]
    EmptyInventory(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// What to do with a generated word that the vocabulary does not know.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovPolicy {
    /// Replace it by [`UNK`].
    #[default]
    Unk,
    /// Remove it from the candidate list.
    Drop,
}

impl FromStr for OovPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unk" => Ok(OovPolicy::Unk),
            "drop" => Ok(OovPolicy::Drop),
            other => Err(format!(
                "unknown OOV policy {other:?} (expected unk or drop)"
            )),
        }
    }
}

/// Closed-class inventories, lowercase, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionWords {
    prepositions: Vec<String>,
    determiners: Vec<String>,
}

impl FunctionWords {
    pub fn new<P, D, S, T>(prepositions: P, determiners: D) -> Result<Self, LexiconError>
    where
        P: IntoIterator<Item = S>,
        D: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let prepositions = canonical(prepositions);
        let determiners = canonical(determiners);
        if prepositions.is_empty() {
            return Err(LexiconError::EmptyInventory("preposition"));
        }
        if determiners.is_empty() {
            return Err(LexiconError::EmptyInventory("determiner"));
        }
        Ok(FunctionWords {
            prepositions,
            determiners,
        })
    }

    /// Reads two one-word-per-line lists. Blank lines and `#` comments are
    /// ignored. An entry may contain spaces (a multi-word preposition).
    pub fn read<P: BufRead, D: BufRead>(
        prepositions: P,
        determiners: D,
    ) -> Result<Self, LexiconError> {
        Self::new(read_list(prepositions)?, read_list(determiners)?)
    }

    pub fn prepositions(&self) -> &[String] {
        &self.prepositions
    }

    pub fn determiners(&self) -> &[String] {
        &self.determiners
    }

    pub fn is_preposition(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.prepositions.contains(&w)
    }

    pub fn is_determiner(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.determiners.contains(&w)
    }
}

impl Default for FunctionWords {
    fn default() -> Self {
        Self::read(
            DEFAULT_PREPOSITIONS.as_bytes(),
            DEFAULT_DETERMINERS.as_bytes(),
        )
        .expect("bundled inventories are valid")
    }
}

fn canonical<I, S>(words: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out: Vec<String> = Vec::new();
    for w in words {
        let w = w
            .as_ref()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase();
        if !w.is_empty() && !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

fn read_list<R: BufRead>(reader: R) -> Result<Vec<String>, LexiconError> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.to_owned());
    }
    Ok(out)
}

/// Everything candidate generation looks words up in.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pub vocab: Vocabulary,
    pub inflections: InflectionDb,
    pub function_words: FunctionWords,
}
