use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use lmgec::lexicon::OovPolicy;
use lmgec::Tau;

use crate::config::RunConfig;

/// Grammatical error correction by language-model rescoring.
#[derive(Debug, Parser)]
#[command(name = "lmgec", version)]
pub struct Cli {
    /// TOML configuration file. Command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub config_dump: bool,

    /// Log more on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count the tokens of a corpus into a vocabulary file.
    BuildVocab {
        /// Tokenized corpus, one sentence per line.
        #[arg(long)]
        corpus: PathBuf,
        /// Keep words seen at least this often.
        #[arg(long, default_value_t = 1)]
        min_count: u64,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an n-gram language model.
    TrainLm {
        /// Tokenized corpus, one sentence per line.
        #[arg(long)]
        corpus: PathBuf,
        /// Binary model output.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Words seen fewer times are mapped to [UNK].
        #[arg(long, default_value_t = 1)]
        min_count: u64,
        /// Kneser-Ney absolute discount.
        #[arg(long, default_value_t = 0.75)]
        discount: f64,
        /// Unsmoothed maximum likelihood estimates instead of Kneser-Ney.
        #[arg(long)]
        mle: bool,
        /// Also write a readable dump of the model ("-" for stdout).
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
    },
    /// Correct a tokenized text or the sources of an M2 file.
    Correct {
        /// Input file ("-" for stdin).
        #[arg(long, default_value = "-")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
        format: InputFormat,
        /// Corrected sentences, line-aligned with the input (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
        /// JSON lines describing every applied edit.
        #[arg(long, value_name = "PATH")]
        edit_log: Option<PathBuf>,
        #[command(flatten)]
        resources: ResourceArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Score hypotheses against gold M2 annotations.
    Evaluate {
        /// Corrected sentences, one per line.
        #[arg(long)]
        hyp: PathBuf,
        /// Gold annotations in M2 format.
        #[arg(long)]
        gold: PathBuf,
        /// Per-sentence selections and counts as JSON lines.
        #[arg(long, value_name = "PATH")]
        per_sentence: Option<PathBuf>,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Correct and evaluate a development set for each threshold.
    SweepTau {
        /// Development set in M2 format.
        #[arg(long)]
        dev: PathBuf,
        /// Comma-separated thresholds ("off" disables editing).
        #[arg(long, value_delimiter = ',')]
        taus: Vec<Tau>,
        #[command(flatten)]
        resources: ResourceArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Print the log-probability of each input sentence.
    Score {
        /// Tokenized sentences ("-" for stdin).
        #[arg(long, default_value = "-")]
        input: PathBuf,
        #[command(flatten)]
        scorer: ScorerArgs,
    },
    /// Serve an n-gram model over the scorer protocol.
    ServeNgram {
        /// Binary model file.
        #[arg(long)]
        model: PathBuf,
        /// Listen on this address instead of stdio.
        #[arg(long, value_name = "HOST:PORT")]
        tcp: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// M2 if the file name ends in .m2, text otherwise.
    Auto,
    Text,
    M2,
}

#[derive(Debug, Args)]
pub struct ResourceArgs {
    /// Vocabulary file (`<word> <count>` lines).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Inflection database in AGID format.
    #[arg(long)]
    pub inflections: Option<PathBuf>,
    /// Preposition list replacing the bundled one.
    #[arg(long)]
    pub prepositions: Option<PathBuf>,
    /// Determiner list replacing the bundled one.
    #[arg(long)]
    pub determiners: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScorerArgs {
    /// ngram:<model>, external:cmd:<argv...> or external:tcp:<host>:<port>.
    #[arg(long, value_name = "SPEC")]
    pub scorer: Option<String>,
    /// Seconds to wait for an external scorer response.
    #[arg(long, value_name = "SECS")]
    pub timeout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Acceptance margin in nats, or "off".
    #[arg(long)]
    pub tau: Option<Tau>,
    #[arg(long)]
    pub max_passes: Option<usize>,
    /// Score alternatives one request at a time.
    #[arg(long)]
    pub no_batching: bool,
    #[arg(long, value_parser = parse_oov)]
    pub oov_policy: Option<OovPolicy>,
    #[arg(long)]
    pub spell_max_distance: Option<usize>,
    #[arg(long)]
    pub spell_max_suggestions: Option<usize>,
    /// Worker threads for sentence-level parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    /// Longest run of unchanged words a merged edit may span.
    #[arg(long)]
    pub max_unchanged_words: Option<usize>,
    /// Compare corrections case-insensitively.
    #[arg(long)]
    pub ignore_case: bool,
}

fn parse_oov(s: &str) -> Result<OovPolicy, String> {
    s.parse()
}

impl ResourceArgs {
    pub fn apply(&self, config: &mut RunConfig) {
        let r = &mut config.resources;
        set(&mut r.vocab, &self.vocab);
        set(&mut r.inflections, &self.inflections);
        set(&mut r.prepositions, &self.prepositions);
        set(&mut r.determiners, &self.determiners);
    }
}

impl ScorerArgs {
    pub fn apply(&self, config: &mut RunConfig) {
        set(&mut config.scorer.spec, &self.scorer);
        if let Some(t) = self.timeout {
            config.scorer.timeout_secs = t;
        }
    }
}

impl SearchArgs {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(t) = self.tau {
            config.search.tau = t;
        }
        if let Some(n) = self.max_passes {
            config.search.max_passes = n;
        }
        if self.no_batching {
            config.search.score_batching = false;
        }
        if let Some(p) = self.oov_policy {
            config.confusion.oov_policy = p;
        }
        if let Some(d) = self.spell_max_distance {
            config.confusion.spell_max_distance = d;
        }
        if let Some(n) = self.spell_max_suggestions {
            config.confusion.spell_max_suggestions = n;
        }
        if let Some(j) = self.jobs {
            config.run.jobs = j;
        }
    }
}

impl EvalArgs {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(b) = self.beta {
            config.eval.beta = b;
        }
        if let Some(m) = self.max_unchanged_words {
            config.eval.max_unchanged_words = m;
        }
        if self.ignore_case {
            config.eval.ignore_case = true;
        }
    }
}

fn set<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

impl Command {
    /// Overlays this command's flags on `config`.
    pub fn apply(&self, config: &mut RunConfig) {
        match self {
            Command::Correct {
                resources,
                scorer,
                search,
                ..
            } => {
                resources.apply(config);
                scorer.apply(config);
                search.apply(config);
            }
            Command::Evaluate { eval, .. } => eval.apply(config),
            Command::SweepTau {
                taus,
                resources,
                scorer,
                search,
                eval,
                ..
            } => {
                if !taus.is_empty() {
                    config.sweep.taus.clone_from(taus);
                }
                resources.apply(config);
                scorer.apply(config);
                search.apply(config);
                eval.apply(config);
            }
            Command::Score { scorer, .. } => scorer.apply(config),
            Command::BuildVocab { .. } | Command::TrainLm { .. } | Command::ServeNgram { .. } => {}
        }
    }
}
