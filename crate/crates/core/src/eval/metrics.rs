//! Precision, recall and F-score over a corpus with several annotators.

use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lattice::{extract_lattice, DEFAULT_MAX_UNCHANGED_WORDS};
use super::maxmatch::maxmatch_select;
use crate::text::{Edit, GoldAnnotation, Sentence};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl EvalCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        EvalCounts { tp, fp, fn_ }
    }

    /// 1.0 when nothing was proposed.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 1.0 when there was nothing to find.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f_beta(&self, beta: f64) -> f64 {
        f_beta(self.precision(), self.recall(), beta)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl Add for EvalCounts {
    type Output = EvalCounts;

    fn add(self, rhs: EvalCounts) -> EvalCounts {
        EvalCounts {
            tp: self.tp + rhs.tp,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
        }
    }
}

impl AddAssign for EvalCounts {
    fn add_assign(&mut self, rhs: EvalCounts) {
        *self = *self + rhs;
    }
}

/// `(1 + b^2) P R / (b^2 P + R)`, or 0 when both are 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / den
    }
}

/// Counts `selected` against one annotator. Each gold edit can be matched
/// once.
pub fn score_selection(selected: &[Edit], gold: &GoldAnnotation, ignore_case: bool) -> EvalCounts {
    let mut used = vec![false; gold.edits.len()];
    let mut tp = 0;
    for e in selected {
        let hit = gold
            .edits
            .iter()
            .enumerate()
            .find(|(k, g)| !used[*k] && g.same_correction(e, ignore_case));
        if let Some((k, _)) = hit {
            used[k] = true;
            tp += 1;
        }
    }
    EvalCounts {
        tp,
        fp: selected.len() as u64 - tp,
        fn_: gold.edits.len() as u64 - tp,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub beta: f64,
    pub max_unchanged_words: usize,
    pub ignore_case: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            beta: 0.5,
            max_unchanged_words: DEFAULT_MAX_UNCHANGED_WORDS,
            ignore_case: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{sources} source sentences but {hypotheses} hypotheses")]
    HypothesisCount { sources: usize, hypotheses: usize },
    #[error("{sources} source sentences but {golds} gold entries")]
    GoldCount { sources: usize, golds: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceReport {
    pub index: usize,
    pub annotator_id: u32,
    pub selected: Vec<Edit>,
    pub gold: Vec<Edit>,
    pub counts: EvalCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub beta: f64,
    pub counts: EvalCounts,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub sentences: Vec<SentenceReport>,
}

struct Candidate {
    annotator_id: u32,
    selected: Vec<Edit>,
    gold: Vec<Edit>,
    counts: EvalCounts,
}

/// Scores `hypotheses` against the gold annotations of `sources`.
///
/// Sentences are visited in order. For each, the selection made against
/// every annotator is counted, and the annotator giving the best corpus
/// F-score together with the totals so far is kept (lowest id on ties). A
/// sentence without annotators is scored against an implicit noop
/// annotator 0.
pub fn evaluate_corpus(
    sources: &[Sentence],
    hypotheses: &[Sentence],
    golds: &[Vec<GoldAnnotation>],
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    if hypotheses.len() != sources.len() {
        return Err(EvalError::HypothesisCount {
            sources: sources.len(),
            hypotheses: hypotheses.len(),
        });
    }
    if golds.len() != sources.len() {
        return Err(EvalError::GoldCount {
            sources: sources.len(),
            golds: golds.len(),
        });
    }

    let per_sentence: Vec<Vec<Candidate>> = (0..sources.len())
        .into_par_iter()
        .map(|i| {
            let lattice = extract_lattice(&sources[i], &hypotheses[i], config.max_unchanged_words);
            let implicit = [GoldAnnotation::noop(0)];
            let mut annotators: Vec<&GoldAnnotation> = if golds[i].is_empty() {
                implicit.iter().collect()
            } else {
                golds[i].iter().collect()
            };
            annotators.sort_by_key(|g| g.annotator_id);
            annotators
                .into_iter()
                .map(|g| {
                    let selected = maxmatch_select(&lattice, g, config.ignore_case);
                    let counts = score_selection(&selected, g, config.ignore_case);
                    Candidate {
                        annotator_id: g.annotator_id,
                        selected,
                        gold: g.edits.clone(),
                        counts,
                    }
                })
                .collect()
        })
        .collect();

    let mut total = EvalCounts::default();
    let mut sentences = Vec::with_capacity(sources.len());
    for (index, candidates) in per_sentence.into_iter().enumerate() {
        let mut best: Option<(f64, Candidate)> = None;
        for c in candidates {
            let f = (total + c.counts).f_beta(config.beta);
            if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
                best = Some((f, c));
            }
        }
        let (_, chosen) = best.expect("at least one annotator per sentence");
        total += chosen.counts;
        sentences.push(SentenceReport {
            index,
            annotator_id: chosen.annotator_id,
            selected: chosen.selected,
            gold: chosen.gold,
            counts: chosen.counts,
        });
    }
    Ok(EvalReport {
        beta: config.beta,
        counts: total,
        precision: total.precision(),
        recall: total.recall(),
        f_score: total.f_beta(config.beta),
        sentences,
    })
}
