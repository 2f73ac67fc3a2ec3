//! Thresholded greedy correction.
//!
//! Candidate positions are visited left to right. At each one every
//! alternative is substituted into the current working sentence and scored;
//! the best is kept only if it beats the working sentence's score by more
//! than `tau`. Accepted edits change the working sentence that later
//! positions are scored against.

use std::fmt;
use std::str::FromStr;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confusion::{CandidateGenerator, CandidateSet, ErrorCategory};
use crate::scorer::{ScoreError, Scorer};
use crate::text::{apply_edits, Edit, Sentence};

/// Acceptance margin in nats. Infinity means "never edit".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Tau(f64);

impl Tau {
    pub const OFF: Tau = Tau(f64::INFINITY);

    /// `None` for negative or NaN margins.
    pub fn new(value: f64) -> Option<Tau> {
        (value >= 0.0).then_some(Tau(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_off(self) -> bool {
        self.0.is_infinite()
    }

    /// The strict acceptance rule.
    pub fn accepts(self, candidate: f64, current: f64) -> bool {
        candidate > current + self.0
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_off() {
            f.write_str("off")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Tau {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "off" | "inf" => Ok(Tau::OFF),
            t => {
                let v: f64 = t.parse().map_err(|_| format!("invalid tau {s:?}"))?;
                Tau::new(v).ok_or_else(|| format!("tau must be non-negative, got {s:?}"))
            }
        }
    }
}

impl Serialize for Tau {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_off() {
            serializer.serialize_str("off")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Tau {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => {
                Tau::new(v).ok_or_else(|| serde::de::Error::custom("tau must be non-negative"))
            }
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub tau: Tau,
    pub max_passes: usize,
    /// Score all alternatives at a position through one batch call.
    pub score_batching: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            tau: Tau(4.0),
            max_passes: 1,
            score_batching: true,
        }
    }
}

/// One accepted edit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedEdit {
    /// The edit in the coordinates of the original sentence.
    pub edit: Edit,
    /// The same edit in the coordinates of the working sentence it was
    /// applied to.
    pub working_edit: Edit,
    pub category: ErrorCategory,
    pub score_before: f64,
    pub score_after: f64,
    pub pass: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionResult {
    #[serde(serialize_with = "ser_sentence", deserialize_with = "de_sentence")]
    pub original: Sentence,
    #[serde(serialize_with = "ser_sentence", deserialize_with = "de_sentence")]
    pub corrected: Sentence,
    pub original_score: f64,
    /// Accepted edits in the order they were made.
    pub applied: Vec<AppliedEdit>,
}

fn ser_sentence<S: serde::Serializer>(s: &Sentence, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&s.detokenize())
}

fn de_sentence<'de, D: serde::Deserializer<'de>>(de: D) -> Result<Sentence, D::Error> {
    let s = String::deserialize(de)?;
    Ok(Sentence::from_tokenized(&s))
}

impl CorrectionResult {
    fn unchanged(sentence: &Sentence, score: f64) -> Self {
        CorrectionResult {
            original: sentence.clone(),
            corrected: sentence.clone(),
            original_score: score,
            applied: Vec::new(),
        }
    }

    /// Accepted edits in original coordinates, sorted by position.
    pub fn projected_edits(&self) -> Vec<Edit> {
        let mut edits: Vec<Edit> = self.applied.iter().map(|a| a.edit.clone()).collect();
        edits.sort_by_key(|e| e.start);
        edits
    }

    /// Working sentences from the original through each accepted edit.
    pub fn intermediate_sentences(&self) -> Vec<Sentence> {
        let mut out = vec![self.original.clone()];
        for a in &self.applied {
            let last = out.last().expect("non-empty");
            let next = apply_edits(last, std::slice::from_ref(&a.working_edit))
                .expect("recorded working edits are in range");
            out.push(next);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("candidate set at {start}..{end} is not a single-token span of the sentence")]
    BadCandidate { start: usize, end: usize },
}

impl SearchError {
    pub fn is_unavailable(&self) -> bool {
        matches!(self, SearchError::Score(e) if e.is_unavailable())
    }
}

/// Runs the greedy search over `candidates` (generated from `sentence`).
///
/// A scorer failure aborts the sentence; no partial result is returned.
pub fn correct_sentence<S: Scorer + ?Sized>(
    sentence: &Sentence,
    candidates: &[CandidateSet],
    scorer: &S,
    config: &SearchConfig,
) -> Result<CorrectionResult, SearchError> {
    for c in candidates {
        if c.end != c.start + 1 || c.end > sentence.len() {
            return Err(SearchError::BadCandidate {
                start: c.start,
                end: c.end,
            });
        }
    }
    let original_score = scorer.score(sentence)?;
    if config.tau.is_off() || candidates.is_empty() {
        return Ok(CorrectionResult::unchanged(sentence, original_score));
    }

    let mut order: Vec<&CandidateSet> = candidates.iter().collect();
    order.sort_by_key(|c| c.start);

    // Current offset of every original token in the working sentence.
    let mut offsets: Vec<usize> = (0..sentence.len()).collect();
    let mut touched = vec![false; sentence.len()];

    let mut working = sentence.clone();
    let mut working_score = original_score;
    let mut result = CorrectionResult::unchanged(sentence, original_score);

    for pass in 1..=config.max_passes.max(1) {
        let mut accepted_this_pass = false;
        for cand in &order {
            let i = cand.start;
            let at = offsets[i];
            if touched[i] || working.word(at) != sentence.word(i) {
                continue;
            }
            let mut options: Vec<(&str, Sentence)> = Vec::with_capacity(cand.alternatives.len());
            for alt in &cand.alternatives {
                let variant = working.splice(at, at + 1, alt);
                if variant.is_empty() {
                    continue;
                }
                options.push((alt.as_str(), variant));
            }
            if options.is_empty() {
                continue;
            }
            let scores = if config.score_batching {
                let variants: Vec<Sentence> = options.iter().map(|(_, s)| s.clone()).collect();
                scorer.score_batch(&variants)?
            } else {
                options
                    .iter()
                    .map(|(_, s)| scorer.score(s))
                    .collect::<Result<Vec<_>, _>>()?
            };
            // Earliest alternative wins ties.
            let mut best = 0;
            for (k, &sc) in scores.iter().enumerate().skip(1) {
                if sc > scores[best] {
                    best = k;
                }
            }
            if !config.tau.accepts(scores[best], working_score) {
                continue;
            }
            let (alt, variant) = options.swap_remove(best);
            let new_len = alt.split_whitespace().count();
            debug!(
                "pass {pass}: {:?} -> {:?} at {i} ({} -> {})",
                cand.original, alt, working_score, scores[best]
            );
            result.applied.push(AppliedEdit {
                edit: Edit::new(i, i + 1, alt).with_type(cand.category.as_str()),
                working_edit: Edit::new(at, at + 1, alt).with_type(cand.category.as_str()),
                category: cand.category,
                score_before: working_score,
                score_after: scores[best],
                pass,
            });
            let delta = new_len as isize - 1;
            for off in offsets.iter_mut().skip(i + 1) {
                *off = (*off as isize + delta) as usize;
            }
            touched[i] = true;
            working = variant;
            working_score = scores[best];
            accepted_this_pass = true;
        }
        if !accepted_this_pass {
            break;
        }
    }
    result.corrected = working;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("scorer became unavailable at sentence {index}: {source}")]
pub struct CorpusAborted {
    pub index: usize,
    #[source]
    pub source: ScoreError,
}

/// Per-sentence outcomes of a corpus run, in input order.
#[derive(Debug, Clone)]
pub struct CorpusCorrection {
    pub results: Vec<Result<CorrectionResult, SearchError>>,
}

impl CorpusCorrection {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.is_err()).count()
    }

    pub fn edit_count(&self) -> usize {
        self.results
            .iter()
            .filter_map(|r| r.as_ref().ok())
            .map(|r| r.applied.len())
            .sum()
    }

    /// Corrected sentences; a failed sentence passes through unchanged.
    pub fn corrected<'a>(&'a self, sources: &'a [Sentence]) -> Vec<&'a Sentence> {
        self.results
            .iter()
            .zip(sources)
            .map(|(r, s)| r.as_ref().map(|c| &c.corrected).unwrap_or(s))
            .collect()
    }
}

/// Corrects every sentence. `jobs` > 1 spreads sentences over a thread
/// pool; output order always matches input order.
///
/// Sentence-level failures are collected. If the scorer becomes
/// unavailable the whole run is aborted.
pub fn correct_corpus<S: Scorer + ?Sized>(
    sentences: &[Sentence],
    generator: &CandidateGenerator,
    scorer: &S,
    config: &SearchConfig,
    jobs: usize,
) -> Result<CorpusCorrection, CorpusAborted> {
    let run = |s: &Sentence| {
        if s.is_empty() {
            return scorer
                .score(s)
                .map(|sc| CorrectionResult::unchanged(s, sc))
                .map_err(SearchError::from);
        }
        let cands = generator.generate(s);
        correct_sentence(s, &cands, scorer, config)
    };
    let results: Vec<_> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("building the worker pool");
        pool.install(|| sentences.par_iter().map(run).collect())
    } else {
        sentences.iter().map(run).collect()
    };
    if let Some((index, err)) = results.iter().enumerate().find_map(|(i, r)| {
        r.as_ref()
            .err()
            .filter(|e| e.is_unavailable())
            .map(|e| (i, e))
    }) {
        let SearchError::Score(source) = err.clone() else {
            unreachable!("only score errors are unavailability")
        };
        return Err(CorpusAborted { index, source });
    }
    Ok(CorpusCorrection { results })
}
