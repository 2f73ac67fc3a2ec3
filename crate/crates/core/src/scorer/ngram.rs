//! Interpolated Kneser–Ney n-gram language model.
//!
//! Sentences are padded with `order - 1` begin markers and one end marker.
//! The model stores raw k-gram counts for every k up to its order; the
//! smoothed tables are rebuilt from them on construction and load.
//!
//! Binary layout (little endian):
//!
//! ```text
//! "LMGC" u16:version u8:order u8:smoothing f64:discount
//! u32:vocab_len { u32:byte_len utf8 }*
//! for k in 1..=order: u64:entries { u32 * k ids, u64:count }*
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{ScoreError, Scorer};
use crate::lexicon::UNK;
use crate::text::Sentence;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const MAX_ORDER: usize = 5;

const UNK_ID: u32 = 0;
const BOS_ID: u32 = 1;
const EOS_ID: u32 = 2;
const RESERVED: [&str; 3] = [UNK, BOS, EOS];

const MAGIC: &[u8; 4] = b"LMGC";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// Interpolated Kneser–Ney with a fixed absolute discount.
    KneserNey { discount: f64 },
    /// Unsmoothed relative frequencies at the highest order. Unseen events
    /// get probability zero; for inspection only.
    Mle,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::KneserNey { discount: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NGramConfig {
    pub order: usize,
    pub min_count: u64,
    pub smoothing: Smoothing,
}

impl Default for NGramConfig {
    fn default() -> Self {
        NGramConfig {
            order: 3,
            min_count: 1,
            smoothing: Smoothing::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("order must be between 1 and {MAX_ORDER}, got {0}")]
    BadOrder(usize),
    #[error("discount must lie in (0, 1), got {0}")]
    BadDiscount(f64),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_err(msg: impl Into<String>) -> ModelError {
    ModelError::Format(msg.into())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct ContextStats {
    /// Sum of (adjusted) counts of all continuations.
    total: u64,
    /// Number of distinct continuations.
    types: u64,
}

type CountTable = HashMap<Vec<u32>, u64>;

#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    smoothing: Smoothing,
    words: Vec<String>,
    ids: HashMap<String, u32>,
    /// `raw[k - 1]` holds k-gram window counts.
    raw: Vec<CountTable>,
    /// Counts used for estimation: raw at the top order and for n-grams
    /// starting with `<s>`, continuation counts otherwise.
    adjusted: Vec<CountTable>,
    contexts: Vec<HashMap<Vec<u32>, ContextStats>>,
    raw_contexts: Vec<HashMap<Vec<u32>, ContextStats>>,
    /// Number of predictable words (everything but `<s>`).
    predictable: usize,
}

impl NGramModel {
    /// Trains on tokenized sentences. Words seen fewer than
    /// `config.min_count` times are mapped to `[UNK]`.
    pub fn train<I, S>(sentences: I, config: NGramConfig) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        validate(config.order, config.smoothing)?;
        let sentences: Vec<S> = sentences.into_iter().collect();
        if sentences.is_empty() {
            return Err(ModelError::EmptyCorpus);
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for s in &sentences {
            for w in s.as_ref() {
                *freq.entry(w.as_str()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<&str> = freq
            .iter()
            .filter(|(w, &c)| c >= config.min_count.max(1) && !RESERVED.contains(w))
            .map(|(w, _)| *w)
            .collect();
        kept.sort_unstable();
        let words: Vec<String> = RESERVED
            .iter()
            .copied()
            .chain(kept)
            .map(str::to_owned)
            .collect();

        let mut model = NGramModel::empty(config.order, config.smoothing, words);
        let pad = config.order - 1;
        for s in &sentences {
            let mut seq = vec![BOS_ID; pad];
            seq.extend(s.as_ref().iter().map(|w| model.id(w)));
            seq.push(EOS_ID);
            for k in 1..=config.order {
                for window in seq.windows(k) {
                    if window[k - 1] == BOS_ID {
                        continue;
                    }
                    *model.raw[k - 1].entry(window.to_vec()).or_insert(0) += 1;
                }
            }
        }
        model.rebuild();
        Ok(model)
    }

    fn empty(order: usize, smoothing: Smoothing, words: Vec<String>) -> Self {
        let ids = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let predictable = words.len() - 1;
        NGramModel {
            order,
            smoothing,
            words,
            ids,
            raw: vec![HashMap::new(); order],
            adjusted: Vec::new(),
            contexts: Vec::new(),
            raw_contexts: Vec::new(),
            predictable,
        }
    }

    fn rebuild(&mut self) {
        let n = self.order;
        let mut adjusted: Vec<CountTable> = vec![HashMap::new(); n];
        for k in 1..=n {
            if k == n {
                adjusted[k - 1] = self.raw[k - 1].clone();
                continue;
            }
            for (gram, &c) in &self.raw[k - 1] {
                if gram[0] == BOS_ID {
                    adjusted[k - 1].insert(gram.clone(), c);
                }
            }
            for gram in self.raw[k].keys() {
                let suffix = &gram[1..];
                if suffix[0] != BOS_ID {
                    *adjusted[k - 1].entry(suffix.to_vec()).or_insert(0) += 1;
                }
            }
        }
        self.contexts = context_stats(&adjusted);
        self.raw_contexts = context_stats(&self.raw);
        self.adjusted = adjusted;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    /// Every vocabulary entry, reserved tokens first.
    pub fn vocabulary(&self) -> &[String] {
        &self.words
    }

    /// Words the model can predict (everything except `<s>`).
    pub fn predictable_words(&self) -> impl Iterator<Item = &str> + '_ {
        self.words
            .iter()
            .enumerate()
            .filter(|(i, _)| *i as u32 != BOS_ID)
            .map(|(_, w)| w.as_str())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ids.contains_key(word)
    }

    /// Raw count of a k-gram given as words. `None` for unknown words.
    pub fn count(&self, gram: &[&str]) -> Option<u64> {
        if gram.is_empty() || gram.len() > self.order {
            return None;
        }
        let ids: Option<Vec<u32>> = gram.iter().map(|w| self.ids.get(*w).copied()).collect();
        Some(self.raw[gram.len() - 1].get(&ids?).copied().unwrap_or(0))
    }

    fn id(&self, word: &str) -> u32 {
        self.ids.get(word).copied().unwrap_or(UNK_ID)
    }

    /// P(word | context). Only the last `order - 1` context words are used;
    /// unknown words are treated as `[UNK]`.
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let ctx: Vec<u32> = context.iter().map(|w| self.id(w)).collect();
        let keep = ctx.len().min(self.order - 1);
        self.prob_ids(&ctx[ctx.len() - keep..], self.id(word))
    }

    fn prob_ids(&self, context: &[u32], word: u32) -> f64 {
        match self.smoothing {
            Smoothing::KneserNey { discount } => self.kn(context, word, discount),
            Smoothing::Mle => self.mle(context, word),
        }
    }

    fn mle(&self, context: &[u32], word: u32) -> f64 {
        let k = context.len() + 1;
        let Some(stats) = self.raw_contexts[k - 1].get(context) else {
            return 0.0;
        };
        let mut gram = context.to_vec();
        gram.push(word);
        self.raw[k - 1].get(&gram).copied().unwrap_or(0) as f64 / stats.total as f64
    }

    fn kn(&self, context: &[u32], word: u32, discount: f64) -> f64 {
        let k = context.len() + 1;
        let lower = if k == 1 {
            1.0 / self.predictable as f64
        } else {
            self.kn(&context[1..], word, discount)
        };
        let stats = match self.contexts[k - 1].get(context) {
            Some(s) if s.total > 0 => *s,
            _ => return lower,
        };
        let mut gram = Vec::with_capacity(k);
        gram.extend_from_slice(context);
        gram.push(word);
        let count = self.adjusted[k - 1].get(&gram).copied().unwrap_or(0) as f64;
        ((count - discount).max(0.0) + discount * stats.types as f64 * lower) / stats.total as f64
    }

    /// Sum of ln P over the words, optionally followed by the end marker.
    pub fn log_prob_words<S: AsRef<str>>(&self, words: &[S], include_end: bool) -> f64 {
        let pad = self.order - 1;
        let mut seq: Vec<u32> = vec![BOS_ID; pad];
        seq.extend(words.iter().map(|w| self.id(w.as_ref())));
        if include_end {
            seq.push(EOS_ID);
        }
        (pad..seq.len())
            .map(|i| self.prob_ids(&seq[i - pad..i], seq[i]).ln())
            .sum()
    }

    /// Natural-log probability of the sentence, end marker included.
    pub fn log_prob(&self, sentence: &Sentence) -> f64 {
        let words: Vec<&str> = sentence.words().collect();
        self.log_prob_words(&words, true)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_binary(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_binary(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    /// Deterministic binary encoding: count tables are written in sorted
    /// key order.
    pub fn write_binary<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&[self.order as u8])?;
        let (tag, discount) = match self.smoothing {
            Smoothing::KneserNey { discount } => (0u8, discount),
            Smoothing::Mle => (1u8, 0.0),
        };
        out.write_all(&[tag])?;
        out.write_all(&discount.to_le_bytes())?;
        out.write_all(&(self.words.len() as u32).to_le_bytes())?;
        for w in &self.words {
            out.write_all(&(w.len() as u32).to_le_bytes())?;
            out.write_all(w.as_bytes())?;
        }
        for table in &self.raw {
            let mut entries: Vec<_> = table.iter().collect();
            entries.sort_unstable();
            out.write_all(&(entries.len() as u64).to_le_bytes())?;
            for (gram, count) in entries {
                for id in gram {
                    out.write_all(&id.to_le_bytes())?;
                }
                out.write_all(&count.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Decodes the binary format, validating every field.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(format_err("bad magic"));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != VERSION {
            return Err(format_err(format!("unsupported version {version}")));
        }
        let order = r.array::<1>()?[0] as usize;
        let tag = r.array::<1>()?[0];
        let discount = f64::from_le_bytes(r.array()?);
        let smoothing = match tag {
            0 => Smoothing::KneserNey { discount },
            1 => Smoothing::Mle,
            t => return Err(format_err(format!("unknown smoothing tag {t}"))),
        };
        validate(order, smoothing).map_err(|e| format_err(e.to_string()))?;

        let vocab_len = u32::from_le_bytes(r.array()?) as usize;
        // Each word takes at least its 4-byte length prefix.
        if vocab_len < RESERVED.len() || vocab_len > r.remaining() / 4 {
            return Err(format_err(format!(
                "implausible vocabulary size {vocab_len}"
            )));
        }
        let mut words = Vec::with_capacity(vocab_len);
        for _ in 0..vocab_len {
            let len = u32::from_le_bytes(r.array()?) as usize;
            let raw = r.take(len)?;
            let w = std::str::from_utf8(raw)
                .map_err(|_| format_err("vocabulary entry is not UTF-8"))?;
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(format_err(format!("invalid vocabulary entry {w:?}")));
            }
            words.push(w.to_owned());
        }
        if words[..RESERVED.len()] != RESERVED {
            return Err(format_err("reserved tokens missing"));
        }
        let mut model = NGramModel::empty(order, smoothing, words);
        if model.ids.len() != vocab_len {
            return Err(format_err("duplicate vocabulary entry"));
        }
        for k in 1..=order {
            let entries = u64::from_le_bytes(r.array()?);
            let entry_size = 4 * k as u64 + 8;
            if entries > r.remaining() as u64 / entry_size {
                return Err(format_err(format!("{k}-gram table overruns the file")));
            }
            let table = &mut model.raw[k - 1];
            // Context totals are sums of these counts and must not overflow.
            let mut table_total: u64 = 0;
            for _ in 0..entries {
                let mut gram = Vec::with_capacity(k);
                for _ in 0..k {
                    let id = u32::from_le_bytes(r.array()?);
                    if id as usize >= vocab_len {
                        return Err(format_err(format!("word id {id} out of range")));
                    }
                    gram.push(id);
                }
                if gram[k - 1] == BOS_ID {
                    return Err(format_err("n-gram ends with <s>"));
                }
                let count = u64::from_le_bytes(r.array()?);
                if count == 0 {
                    return Err(format_err("zero count"));
                }
                table_total = table_total
                    .checked_add(count)
                    .filter(|t| *t <= u64::MAX / 2)
                    .ok_or_else(|| format_err(format!("{k}-gram counts overflow")))?;
                if table.insert(gram, count).is_some() {
                    return Err(format_err(format!("duplicate {k}-gram")));
                }
            }
        }
        if r.remaining() != 0 {
            return Err(format_err("trailing bytes"));
        }
        model.rebuild();
        Ok(model)
    }

    /// Human-readable dump of the raw counts, sorted.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "\\order {}", self.order)?;
        match self.smoothing {
            Smoothing::KneserNey { discount } => {
                writeln!(out, "\\smoothing kneser-ney {discount}")?
            }
            Smoothing::Mle => writeln!(out, "\\smoothing mle")?,
        }
        writeln!(out, "\\vocabulary {}", self.words.len())?;
        for w in &self.words {
            writeln!(out, "{w}")?;
        }
        for (k, table) in self.raw.iter().enumerate() {
            let mut rows: Vec<(String, u64)> = table
                .iter()
                .map(|(g, &c)| {
                    let text: Vec<&str> =
                        g.iter().map(|&i| self.words[i as usize].as_str()).collect();
                    (text.join(" "), c)
                })
                .collect();
            rows.sort();
            writeln!(out, "\\{}-grams {}", k + 1, rows.len())?;
            for (g, c) in rows {
                writeln!(out, "{g}\t{c}")?;
            }
        }
        Ok(())
    }
}

impl Scorer for NGramModel {
    fn score(&self, sentence: &Sentence) -> Result<f64, ScoreError> {
        Ok(self.log_prob(sentence))
    }
}

fn context_stats(tables: &[CountTable]) -> Vec<HashMap<Vec<u32>, ContextStats>> {
    tables
        .iter()
        .enumerate()
        .map(|(i, table)| {
            let mut stats: HashMap<Vec<u32>, ContextStats> = HashMap::new();
            for (gram, &c) in table {
                let s = stats.entry(gram[..i].to_vec()).or_default();
                s.total += c;
                s.types += 1;
            }
            stats
        })
        .collect()
}

fn validate(order: usize, smoothing: Smoothing) -> Result<(), ModelError> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(ModelError::BadOrder(order));
    }
    if let Smoothing::KneserNey { discount } = smoothing {
        if !(discount > 0.0 && discount < 1.0) {
            return Err(ModelError::BadDiscount(discount));
        }
    }
    Ok(())
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if n > self.remaining() {
            return Err(format_err("unexpected end of file"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], ModelError> {
        Ok(self.take(N)?.try_into().expect("slice has length N"))
    }
}
