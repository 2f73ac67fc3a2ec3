//! Sentence log-probability scorers.
//!
//! A [`Scorer`] maps a tokenized sentence to a natural-log probability. Two
//! backends exist: the built-in [`NGramModel`] and [`ExternalScorer`], which
//! talks to a separate process over newline-delimited JSON.

mod external;
mod ngram;
pub mod protocol;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::text::Sentence;

pub use external::{ExternalScorer, DEFAULT_TIMEOUT};
pub use ngram::{ModelError, NGramConfig, NGramModel, Smoothing, BOS, EOS, MAX_ORDER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    /// The backend cannot answer: spawn failure, closed pipe, timeout.
    #[error("scorer unavailable: {0}")]
    Unavailable(String),
    /// The backend answered with an error for this request.
    #[error("scorer error: {0}")]
    Remote(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("batch element {index}: {source}")]
    InBatch {
        index: usize,
        #[source]
        source: Box<ScoreError>,
    },
}

impl ScoreError {
    /// True when the backend itself is gone, as opposed to a failure tied to
    /// one sentence.
    pub fn is_unavailable(&self) -> bool {
        match self {
            ScoreError::Unavailable(_) => true,
            ScoreError::InBatch { source, .. } => source.is_unavailable(),
            _ => false,
        }
    }

    pub fn at_index(self, index: usize) -> ScoreError {
        ScoreError::InBatch {
            index,
            source: Box::new(self),
        }
    }
}

/// Sentence to natural-log probability.
///
/// Implementations must be deterministic: the same sentence always yields a
/// bit-identical value.
pub trait Scorer: Send + Sync {
    fn score(&self, sentence: &Sentence) -> Result<f64, ScoreError>;

    /// Scores several sentences; equivalent to mapping [`Scorer::score`].
    /// The first failure is reported with its index.
    fn score_batch(&self, sentences: &[Sentence]) -> Result<Vec<f64>, ScoreError> {
        sentences
            .iter()
            .enumerate()
            .map(|(i, s)| self.score(s).map_err(|e| e.at_index(i)))
            .collect()
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score(&self, sentence: &Sentence) -> Result<f64, ScoreError> {
        (**self).score(sentence)
    }

    fn score_batch(&self, sentences: &[Sentence]) -> Result<Vec<f64>, ScoreError> {
        (**self).score_batch(sentences)
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn score(&self, sentence: &Sentence) -> Result<f64, ScoreError> {
        (**self).score(sentence)
    }

    fn score_batch(&self, sentences: &[Sentence]) -> Result<Vec<f64>, ScoreError> {
        (**self).score_batch(sentences)
    }
}

impl<S: Scorer + ?Sized> Scorer for Arc<S> {
    fn score(&self, sentence: &Sentence) -> Result<f64, ScoreError> {
        (**self).score(sentence)
    }

    fn score_batch(&self, sentences: &[Sentence]) -> Result<Vec<f64>, ScoreError> {
        (**self).score_batch(sentences)
    }
}

/// Backend selector: `ngram:<model-path>`, `external:cmd:<argv...>` or
/// `external:tcp:<host>:<port>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerSpec {
    NGram(PathBuf),
    Command(Vec<String>),
    Tcp(String),
}

impl FromStr for ScorerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("ngram:") {
            if path.is_empty() {
                return Err("ngram scorer needs a model path".into());
            }
            Ok(ScorerSpec::NGram(PathBuf::from(path)))
        } else if let Some(cmd) = s.strip_prefix("external:cmd:") {
            let argv: Vec<String> = cmd.split_whitespace().map(str::to_owned).collect();
            if argv.is_empty() {
                return Err("external command is empty".into());
            }
            Ok(ScorerSpec::Command(argv))
        } else if let Some(addr) = s.strip_prefix("external:tcp:") {
            match addr.rsplit_once(':') {
                Some((host, port)) if !host.is_empty() && port.parse::<u16>().is_ok() => {
                    Ok(ScorerSpec::Tcp(addr.to_owned()))
                }
                _ => Err(format!("expected external:tcp:<host>:<port>, got {s:?}")),
            }
        } else {
            Err(format!(
                "unknown scorer spec {s:?} (expected ngram:<path>, external:cmd:<argv> or external:tcp:<host>:<port>)"
            ))
        }
    }
}

impl fmt::Display for ScorerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerSpec::NGram(p) => write!(f, "ngram:{}", p.display()),
            ScorerSpec::Command(argv) => write!(f, "external:cmd:{}", argv.join(" ")),
            ScorerSpec::Tcp(addr) => write!(f, "external:tcp:{addr}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum OpenError {
    #[error("cannot load language model: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Backend(#[from] ScoreError),
}

impl ScorerSpec {
    /// Loads the model or starts the external backend (health ping
    /// included).
    pub fn open(&self, timeout: Duration) -> Result<Box<dyn Scorer>, OpenError> {
        Ok(match self {
            ScorerSpec::NGram(path) => Box::new(NGramModel::load(path)?),
            ScorerSpec::Command(argv) => Box::new(ExternalScorer::spawn(argv, timeout)?),
            ScorerSpec::Tcp(addr) => Box::new(ExternalScorer::connect(addr, timeout)?),
        })
    }
}
