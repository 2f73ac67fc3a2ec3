//! Threshold selection on a development set.

use serde::Serialize;
use thiserror::Error;

use super::metrics::{evaluate_corpus, EvalConfig, EvalCounts, EvalError};
use crate::confusion::CandidateGenerator;
use crate::scorer::Scorer;
use crate::search::{correct_corpus, CorpusAborted, SearchConfig, Tau};
use crate::text::{GoldAnnotation, Sentence};

pub const DEFAULT_TAUS: [f64; 5] = [0.0, 2.0, 4.0, 6.0, 8.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau: Tau,
    pub counts: EvalCounts,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    /// Edits applied by the search at this threshold.
    pub edits: usize,
    /// Sentences passed through because scoring failed.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Highest F-score; ties go to the larger threshold.
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows.iter().reduce(|best, row| {
            let better = row.f_score > best.f_score
                || (row.f_score == best.f_score && row.tau.value() > best.tau.value());
            if better {
                row
            } else {
                best
            }
        })
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("tau {tau}: {source}")]
    Aborted {
        tau: Tau,
        #[source]
        source: CorpusAborted,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Corrects and evaluates the development corpus once per threshold.
#[allow(clippy::too_many_arguments)]
pub fn sweep_tau<S: Scorer + ?Sized>(
    sources: &[Sentence],
    golds: &[Vec<GoldAnnotation>],
    generator: &CandidateGenerator,
    scorer: &S,
    search: &SearchConfig,
    taus: &[Tau],
    eval: &EvalConfig,
    jobs: usize,
) -> Result<SweepTable, SweepError> {
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let config = SearchConfig { tau, ..*search };
        let run = correct_corpus(sources, generator, scorer, &config, jobs)
            .map_err(|source| SweepError::Aborted { tau, source })?;
        let hypotheses: Vec<Sentence> = run.corrected(sources).into_iter().cloned().collect();
        let report = evaluate_corpus(sources, &hypotheses, golds, eval)?;
        rows.push(SweepRow {
            tau,
            counts: report.counts,
            precision: report.precision,
            recall: report.recall,
            f_score: report.f_score,
            edits: run.edit_count(),
            failures: run.failures(),
        });
    }
    Ok(SweepTable { rows })
}
