use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread;

use anyhow::{bail, Context, Result};
use lmgec::eval::{evaluate_corpus, sweep_tau, EvalCounts, SweepRow};
use lmgec::lexicon::{
    FunctionWords, InflectionDb, Lexicon, Vocabulary, DEFAULT_DETERMINERS, DEFAULT_PREPOSITIONS,
};
use lmgec::m2::parse_m2;
use lmgec::scorer::protocol::serve;
use lmgec::scorer::{NGramConfig, NGramModel, Scorer, ScorerSpec, Smoothing};
use lmgec::search::correct_corpus;
use lmgec::{CandidateGenerator, GoldAnnotation, Sentence};
use log::{info, warn};
use serde_json::json;

use crate::cli::InputFormat;
use crate::config::{check_readable, RunConfig};

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if is_stdio(path) {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) if !is_stdio(p) => {
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        _ => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let mut text = String::new();
    open_input(path)?
        .read_to_string(&mut text)
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// The sources and gold annotations of an M2 file.
fn read_m2(path: &Path) -> Result<(Vec<Sentence>, Vec<Vec<GoldAnnotation>>)> {
    let entries =
        parse_m2(open_input(path)?).with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(entries
        .into_iter()
        .map(|e| (e.source, e.annotations))
        .unzip())
}

fn input_paths(config: &RunConfig) -> Vec<(&'static str, &Path)> {
    let r = &config.resources;
    let mut paths: Vec<(&'static str, &Path)> = Vec::new();
    for (what, p) in [
        ("vocabulary", &r.vocab),
        ("inflection database", &r.inflections),
        ("preposition list", &r.prepositions),
        ("determiner list", &r.determiners),
    ] {
        if let Some(p) = p {
            paths.push((what, p));
        }
    }
    paths
}

/// Checks every configured path and the scorer spec before any work starts.
fn preflight<'a>(config: &'a RunConfig, inputs: &[(&'static str, &'a Path)]) -> Result<ScorerSpec> {
    let Some(spec) = &config.scorer.spec else {
        bail!("no scorer configured (use --scorer or [scorer] spec)");
    };
    let spec: ScorerSpec = spec.parse().map_err(anyhow::Error::msg)?;
    let mut paths = input_paths(config);
    paths.extend(inputs.iter().filter(|(_, p)| !is_stdio(p)));
    if let ScorerSpec::NGram(model) = &spec {
        paths.push(("language model", model));
    }
    check_readable(paths)?;
    Ok(spec)
}

fn load_generator(config: &RunConfig) -> Result<CandidateGenerator> {
    let r = &config.resources;
    let Some(vocab_path) = &r.vocab else {
        bail!("no vocabulary configured (use --vocab or [resources] vocab)");
    };
    let vocab = Vocabulary::read(open_input(vocab_path)?)
        .with_context(|| format!("invalid vocabulary {}", vocab_path.display()))?;
    if vocab.is_empty() {
        warn!("vocabulary {} is empty", vocab_path.display());
    }
    let inflections = match &r.inflections {
        Some(p) => InflectionDb::read(open_input(p)?)
            .with_context(|| format!("invalid inflection database {}", p.display()))?,
        None => {
            warn!("no inflection database configured; morphological alternatives are disabled");
            InflectionDb::new()
        }
    };
    let preps: Box<dyn BufRead> = match &r.prepositions {
        Some(p) => open_input(p)?,
        None => Box::new(DEFAULT_PREPOSITIONS.as_bytes()),
    };
    let dets: Box<dyn BufRead> = match &r.determiners {
        Some(p) => open_input(p)?,
        None => Box::new(DEFAULT_DETERMINERS.as_bytes()),
    };
    let function_words = FunctionWords::read(preps, dets).context("invalid word inventory")?;
    let lexicon = Lexicon {
        vocab,
        inflections,
        function_words,
    };
    Ok(CandidateGenerator::new(lexicon, config.confusion))
}

fn open_scorer(spec: &ScorerSpec, config: &RunConfig) -> Result<Box<dyn Scorer>> {
    info!("opening scorer {spec}");
    spec.open(config.timeout())
        .with_context(|| format!("cannot start scorer {spec}"))
}

pub fn build_vocab(corpus: &Path, min_count: u64, out: Option<&Path>) -> Result<()> {
    let lines = read_lines(corpus)?;
    let vocab = Vocabulary::build(lines.iter().flat_map(|l| l.split_whitespace()), min_count);
    if vocab.is_empty() {
        warn!("{} produced an empty vocabulary", corpus.display());
    }
    info!("{} words", vocab.len());
    let mut w = open_output(out)?;
    vocab.write(&mut w)?;
    w.flush()?;
    Ok(())
}

pub struct TrainOptions {
    pub order: usize,
    pub min_count: u64,
    pub discount: f64,
    pub mle: bool,
}

pub fn train_lm(corpus: &Path, out: &Path, opts: &TrainOptions, dump: Option<&Path>) -> Result<()> {
    let sentences: Vec<Vec<String>> = read_lines(corpus)?
        .iter()
        .map(|l| l.split_whitespace().map(str::to_owned).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect();
    let smoothing = if opts.mle {
        Smoothing::Mle
    } else {
        Smoothing::KneserNey {
            discount: opts.discount,
        }
    };
    let config = NGramConfig {
        order: opts.order,
        min_count: opts.min_count,
        smoothing,
    };
    let model = NGramModel::train(&sentences, config)
        .with_context(|| format!("cannot train on {}", corpus.display()))?;
    info!(
        "trained order-{} model on {} sentences, {} word types",
        model.order(),
        sentences.len(),
        model.vocabulary().len()
    );
    model
        .save(out)
        .with_context(|| format!("cannot write {}", out.display()))?;
    if let Some(d) = dump {
        let mut w = open_output(Some(d))?;
        model.write_text(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

pub struct CorrectPaths<'a> {
    pub input: &'a Path,
    pub format: InputFormat,
    pub output: Option<&'a Path>,
    pub edit_log: Option<&'a Path>,
}

fn is_m2(path: &Path, format: InputFormat) -> bool {
    match format {
        InputFormat::M2 => true,
        InputFormat::Text => false,
        InputFormat::Auto => path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("m2")),
    }
}

pub fn correct(config: &RunConfig, paths: &CorrectPaths) -> Result<()> {
    let spec = preflight(config, &[("input", paths.input)])?;
    let generator = load_generator(config)?;
    // Unchanged text lines are echoed verbatim.
    let (sources, originals): (Vec<Sentence>, Vec<String>) = if is_m2(paths.input, paths.format) {
        read_m2(paths.input)?
            .0
            .into_iter()
            .map(|s| {
                let text = s.detokenize();
                (s, text)
            })
            .unzip()
    } else {
        read_lines(paths.input)?
            .into_iter()
            .map(|l| (Sentence::from_tokenized(&l), l))
            .unzip()
    };
    let scorer = open_scorer(&spec, config)?;
    let run = correct_corpus(
        &sources,
        &generator,
        &*scorer,
        &config.search,
        config.run.jobs,
    )?;

    let mut out = open_output(paths.output)?;
    for (result, original) in run.results.iter().zip(&originals) {
        match result {
            Ok(r) if !r.applied.is_empty() => writeln!(out, "{}", r.corrected)?,
            _ => writeln!(out, "{original}")?,
        }
    }
    out.flush()?;

    if let Some(log_path) = paths.edit_log {
        let mut log = open_output(Some(log_path))?;
        for (index, result) in run.results.iter().enumerate() {
            let record = match result {
                Ok(r) => json!({
                    "index": index,
                    "source": r.original.detokenize(),
                    "corrected": r.corrected.detokenize(),
                    "source_score": r.original_score,
                    "edits": r.applied,
                }),
                Err(e) => json!({ "index": index, "error": e.to_string() }),
            };
            serde_json::to_writer(&mut log, &record)?;
            log.write_all(b"\n")?;
        }
        log.flush()?;
    }

    for (index, result) in run.results.iter().enumerate() {
        if let Err(e) = result {
            warn!("sentence {}: passed through unchanged: {e}", index + 1);
        }
    }
    if run.failures() > 0 {
        warn!(
            "{} of {} sentences passed through after errors",
            run.failures(),
            sources.len()
        );
    }
    info!(
        "{} sentences, {} edits applied",
        sources.len(),
        run.edit_count()
    );
    Ok(())
}

fn f_label(beta: f64) -> String {
    format!("F{beta}")
}

fn metrics_row(counts: &EvalCounts, beta: f64) -> String {
    format!(
        "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
        counts.tp,
        counts.fp,
        counts.fn_,
        counts.precision(),
        counts.recall(),
        counts.f_beta(beta)
    )
}

pub fn evaluate(
    config: &RunConfig,
    hyp: &Path,
    gold: &Path,
    per_sentence: Option<&Path>,
) -> Result<()> {
    check_readable(
        [("hypothesis file", hyp), ("gold file", gold)]
            .into_iter()
            .filter(|(_, p)| !is_stdio(p)),
    )?;
    let (sources, golds) = read_m2(gold)?;
    let hyps: Vec<Sentence> = read_lines(hyp)?
        .iter()
        .map(|l| Sentence::from_tokenized(l))
        .collect();
    let report = evaluate_corpus(&sources, &hyps, &golds, &config.eval)?;

    let mut out = open_output(None)?;
    writeln!(out, "tp\tfp\tfn\tP\tR\t{}", f_label(config.eval.beta))?;
    writeln!(out, "{}", metrics_row(&report.counts, config.eval.beta))?;
    out.flush()?;

    if let Some(path) = per_sentence {
        let mut w = open_output(Some(path))?;
        for s in &report.sentences {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    eprintln!(
        "{} sentences: P={:.4} R={:.4} {}={:.4}",
        sources.len(),
        report.precision,
        report.recall,
        f_label(config.eval.beta),
        report.f_score
    );
    Ok(())
}

pub fn sweep(config: &RunConfig, dev: &Path) -> Result<()> {
    let spec = preflight(config, &[("development set", dev)])?;
    let generator = load_generator(config)?;
    let (sources, golds) = read_m2(dev)?;
    let scorer = open_scorer(&spec, config)?;
    let table = sweep_tau(
        &sources,
        &golds,
        &generator,
        &*scorer,
        &config.search,
        &config.sweep.taus,
        &config.eval,
        config.run.jobs,
    )?;
    let best = table.best().expect("at least one threshold").clone();

    let beta = config.eval.beta;
    let row = |r: &SweepRow| {
        format!(
            "{}\t{}\t{}\t{}",
            r.tau,
            metrics_row(&r.counts, beta),
            r.edits,
            r.failures
        )
    };
    let mut out = open_output(None)?;
    writeln!(
        out,
        "tau\ttp\tfp\tfn\tP\tR\t{}\tedits\tfailures",
        f_label(beta)
    )?;
    // The selected row goes last.
    let best_index = table
        .rows
        .iter()
        .position(|r| *r == best)
        .expect("best is a row");
    for (i, r) in table.rows.iter().enumerate() {
        if i != best_index {
            writeln!(out, "{}", row(r))?;
        }
    }
    writeln!(out, "{}", row(&best))?;
    out.flush()?;
    for r in &table.rows {
        if r.failures > 0 {
            warn!(
                "tau {}: {} sentences passed through after errors",
                r.tau, r.failures
            );
        }
    }
    eprintln!(
        "best tau {} ({}={:.4})",
        best.tau,
        f_label(beta),
        best.f_score
    );
    Ok(())
}

pub fn score(config: &RunConfig, input: &Path) -> Result<()> {
    let spec = preflight(config, &[("input", input)])?;
    let sentences: Vec<Sentence> = read_lines(input)?
        .iter()
        .map(|l| Sentence::from_tokenized(l))
        .collect();
    let scorer = open_scorer(&spec, config)?;
    let scores = scorer.score_batch(&sentences)?;
    let mut out = open_output(None)?;
    for (s, lp) in sentences.iter().zip(scores) {
        writeln!(out, "{lp}\t{s}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn serve_ngram(model: &Path, tcp: Option<&str>) -> Result<()> {
    check_readable([("language model", model)])?;
    let model: PathBuf = model.to_owned();
    let scorer = Arc::new(
        ScorerSpec::NGram(model.clone())
            .open(lmgec::scorer::DEFAULT_TIMEOUT)
            .with_context(|| format!("cannot load {}", model.display()))?,
    );
    let Some(addr) = tcp else {
        let stdin = io::stdin();
        serve(&**scorer, stdin.lock(), io::stdout())?;
        return Ok(());
    };
    let listener = TcpListener::bind(addr).with_context(|| format!("cannot listen on {addr}"))?;
    eprintln!("listening on {}", listener.local_addr()?);
    for conn in listener.incoming() {
        let conn = match conn {
            Ok(c) => c,
            Err(e) => {
                warn!("accept failed: {e}");
                continue;
            }
        };
        let scorer = Arc::clone(&scorer);
        thread::spawn(move || {
            let peer = conn.peer_addr().map(|a| a.to_string()).unwrap_or_default();
            let result = conn
                .try_clone()
                .and_then(|reader| serve(&**scorer, BufReader::new(reader), conn));
            match result {
                Ok(()) => info!("{peer}: connection closed"),
                Err(e) => warn!("{peer}: {e}"),
            }
        });
    }
    Ok(())
}

pub fn write_config_dump(config: &RunConfig) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(config.to_toml().as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Fails early when an output file could not be created.
pub fn check_writable_dir(path: Option<&Path>) -> Result<()> {
    let Some(path) = path.filter(|p| !is_stdio(p)) else {
        return Ok(());
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        if !parent.is_dir() {
            bail!("output directory {} does not exist", parent.display());
        }
    }
    Ok(())
}
