//! MaxMatch evaluation: lattice extraction, edit selection, corpus scores
//! and threshold sweeps.

pub mod lattice;
pub mod maxmatch;
pub mod metrics;
pub mod sweep;

pub use lattice::{extract_lattice, EditLattice, DEFAULT_MAX_UNCHANGED_WORDS};
pub use maxmatch::maxmatch_select;
pub use metrics::{
    evaluate_corpus, f_beta, score_selection, EvalConfig, EvalCounts, EvalError, EvalReport,
    SentenceReport,
};
pub use sweep::{sweep_tau, SweepError, SweepRow, SweepTable, DEFAULT_TAUS};
