use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use super::LexiconError;

/// Word frequencies gathered from a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    counts: HashMap<String, u64>,
    case_sensitive: bool,
}

impl Vocabulary {
    pub fn new(case_sensitive: bool) -> Self {
        Vocabulary {
            counts: HashMap::new(),
            case_sensitive,
        }
    }

    /// Builds a case-sensitive vocabulary from word/count pairs. Zero counts
    /// are skipped.
    pub fn from_counts<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut v = Vocabulary::new(true);
        for (w, c) in pairs {
            v.add(w.into(), c);
        }
        v
    }

    /// Counts tokens and keeps those seen at least `min_count` times.
    /// `min_count` of 0 is treated as 1.
    pub fn build<I, S>(tokens: I, min_count: u64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for t in tokens {
            *counts.entry(t.as_ref().to_owned()).or_insert(0) += 1;
        }
        counts.retain(|_, c| *c >= min_count.max(1));
        Vocabulary {
            counts,
            case_sensitive: true,
        }
    }

    fn key<'a>(&self, word: &'a str) -> std::borrow::Cow<'a, str> {
        if self.case_sensitive {
            word.into()
        } else {
            word.to_lowercase().into()
        }
    }

    pub fn add(&mut self, word: String, count: u64) {
        if count == 0 {
            return;
        }
        let key = self.key(&word).into_owned();
        *self.counts.entry(key).or_insert(0) += count;
    }

    /// Returns a copy whose membership test ignores case. Counts of words
    /// that collide after lowercasing are summed.
    pub fn case_insensitive(&self) -> Self {
        let mut v = Vocabulary::new(false);
        for (w, &c) in &self.counts {
            v.add(w.clone(), c);
        }
        v
    }

    pub fn is_case_sensitive(&self) -> bool {
        self.case_sensitive
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(self.key(word).as_ref())
    }

    pub fn frequency(&self, word: &str) -> u64 {
        self.counts
            .get(self.key(word).as_ref())
            .copied()
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }

    /// Entries ordered by count descending, then word.
    pub fn sorted(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    /// Reads `<word> <count>` lines. Blank lines are ignored.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, LexiconError> {
        let mut v = Vocabulary::new(true);
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (word, count) = match (parts.next(), parts.next(), parts.next()) {
                (Some(w), Some(c), None) => (w, c),
                _ => {
                    return Err(LexiconError::Malformed {
                        line: i + 1,
                        message: "expected '<word> <count>'".into(),
                    })
                }
            };
            let count: u64 = count.parse().map_err(|_| LexiconError::Malformed {
                line: i + 1,
                message: format!("invalid count {count:?}"),
            })?;
            if count == 0 {
                return Err(LexiconError::Malformed {
                    line: i + 1,
                    message: "count must be at least 1".into(),
                });
            }
            v.add(word.to_owned(), count);
        }
        Ok(v)
    }

    /// Writes `<word> <count>` lines in [`Vocabulary::sorted`] order.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (w, c) in self.sorted() {
            writeln!(out, "{w} {c}")?;
        }
        Ok(())
    }
}
