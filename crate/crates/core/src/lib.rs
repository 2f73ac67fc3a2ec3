//! Unsupervised grammatical error correction by language-model rescoring,
//! with MaxMatch (M2) evaluation.
//!
//! The pipeline: [`confusion`] proposes alternatives for each token,
//! [`search`] greedily accepts those that a [`scorer::Scorer`] prefers by
//! more than a margin, and [`eval`] measures the result against gold
//! annotations read by [`m2`].

pub mod confusion;
pub mod eval;
pub mod lexicon;
pub mod m2;
pub mod scorer;
pub mod search;
pub mod synthetic;
pub mod text;

pub use confusion::{CandidateGenerator, CandidateSet, ConfusionConfig, ErrorCategory};
pub use scorer::{ScoreError, Scorer};
pub use search::{correct_corpus, correct_sentence, SearchConfig, Tau};
pub use text::{apply_edits, tokenize, Edit, GoldAnnotation, Sentence};
