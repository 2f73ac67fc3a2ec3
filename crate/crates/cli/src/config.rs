//! Effective run configuration: built-in defaults, overlaid by a TOML file,
//! overlaid by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lmgec::confusion::ConfusionConfig;
use lmgec::eval::{EvalConfig, DEFAULT_TAUS};
use lmgec::search::{SearchConfig, Tau};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resources {
    pub vocab: Option<PathBuf>,
    pub inflections: Option<PathBuf>,
    pub prepositions: Option<PathBuf>,
    pub determiners: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerSection {
    /// `ngram:<path>`, `external:cmd:<argv...>` or `external:tcp:<host>:<port>`.
    pub spec: Option<String>,
    pub timeout_secs: f64,
}

impl Default for ScorerSection {
    fn default() -> Self {
        ScorerSection {
            spec: None,
            timeout_secs: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub taus: Vec<Tau>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            taus: DEFAULT_TAUS
                .iter()
                .map(|&t| Tau::new(t).expect("non-negative"))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Worker threads for sentence-level parallel correction.
    pub jobs: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { jobs: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub resources: Resources,
    pub scorer: ScorerSection,
    pub confusion: ConfusionConfig,
    pub search: SearchConfig,
    pub eval: EvalConfig,
    pub sweep: SweepSection,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scorer.timeout_secs > 0.0 && self.scorer.timeout_secs.is_finite()) {
            bail!("scorer.timeout_secs must be a positive number");
        }
        if self.search.max_passes == 0 {
            bail!("search.max_passes must be at least 1");
        }
        if !(self.eval.beta > 0.0 && self.eval.beta.is_finite()) {
            bail!("eval.beta must be a positive number");
        }
        if self.sweep.taus.is_empty() {
            bail!("sweep.taus must not be empty");
        }
        if self.run.jobs == 0 {
            bail!("run.jobs must be at least 1");
        }
        Ok(())
    }

    pub fn timeout(&self) -> std::time::Duration {
        std::time::Duration::from_secs_f64(self.scorer.timeout_secs)
    }
}

/// Fails unless every path can be opened for reading.
pub fn check_readable<'a>(paths: impl IntoIterator<Item = (&'a str, &'a Path)>) -> Result<()> {
    for (what, path) in paths {
        fs::File::open(path).with_context(|| format!("cannot open {what} {}", path.display()))?;
    }
    Ok(())
}
