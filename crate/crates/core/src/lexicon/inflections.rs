use std::collections::HashMap;
use std::io::BufRead;

use log::warn;

use super::{LexiconError, OovPolicy, Vocabulary, UNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartOfSpeech {
    Verb,
    Noun,
    Adjective,
}

impl PartOfSpeech {
    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "V" => Some(PartOfSpeech::Verb),
            "N" => Some(PartOfSpeech::Noun),
            "A" => Some(PartOfSpeech::Adjective),
            _ => None,
        }
    }
}

/// A lemma, its part of speech, and every form registered for it (lemma
/// first, then file order, deduplicated).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InflectionEntry {
    pub lemma: String,
    pub pos: PartOfSpeech,
    pub forms: Vec<String>,
}

/// Lemma/POS entries with a reverse index from every form to the entries
/// containing it.
#[derive(Debug, Clone, Default)]
pub struct InflectionDb {
    entries: Vec<InflectionEntry>,
    by_key: HashMap<(String, PartOfSpeech), usize>,
    by_form: HashMap<String, Vec<usize>>,
    skipped_lines: usize,
}

impl InflectionDb {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads AGID-style lines (`<lemma> <POS>: <form>, <alt> | <alt>, ...`).
    ///
    /// Quality markers (`?`, `~`, `!`, `<`), `{...}` annotations and bare
    /// variant numbers are stripped. Lines that cannot be parsed, or whose
    /// POS is not one of V/N/A, are skipped and counted.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, LexiconError> {
        let mut db = InflectionDb::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match parse_line(&line) {
                Some((lemma, pos, forms)) => db.insert(lemma, pos, forms),
                None => db.skipped_lines += 1,
            }
        }
        if db.skipped_lines > 0 {
            warn!(
                "inflection database: skipped {} malformed lines",
                db.skipped_lines
            );
        }
        Ok(db)
    }

    pub fn parse_str(text: &str) -> Self {
        Self::read(text.as_bytes()).expect("reading from memory cannot fail")
    }

    /// Registers forms under `lemma`/`pos`, merging with an existing entry.
    pub fn insert<I, S>(&mut self, lemma: &str, pos: PartOfSpeech, forms: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let key = (lemma.to_owned(), pos);
        let idx = match self.by_key.get(&key) {
            Some(&i) => i,
            None => {
                self.entries.push(InflectionEntry {
                    lemma: lemma.to_owned(),
                    pos,
                    forms: Vec::new(),
                });
                let i = self.entries.len() - 1;
                self.by_key.insert(key, i);
                i
            }
        };
        let new_forms = std::iter::once(lemma.to_owned())
            .chain(forms.into_iter().map(|f| f.as_ref().to_owned()));
        for form in new_forms {
            if self.entries[idx].forms.contains(&form) {
                continue;
            }
            self.entries[idx].forms.push(form.clone());
            let slots = self.by_form.entry(form).or_default();
            if !slots.contains(&idx) {
                slots.push(idx);
            }
        }
    }

    pub fn entries(&self) -> &[InflectionEntry] {
        &self.entries
    }

    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries whose form list contains `word`.
    pub fn entries_containing(&self, word: &str) -> impl Iterator<Item = &InflectionEntry> + '_ {
        self.by_form
            .get(word)
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i])
    }

    /// Every form sharing an entry with `word`, including `word` itself when
    /// it is known. Entry order, then form order.
    pub fn related_forms(&self, word: &str) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for entry in self.entries_containing(word) {
            for f in &entry.forms {
                if !out.contains(&f.as_str()) {
                    out.push(f);
                }
            }
        }
        out
    }

    /// Alternative forms of `word` for candidate generation.
    ///
    /// `word` itself is excluded. Forms missing from `vocab` become the
    /// literal `[UNK]` token under [`OovPolicy::Unk`] (at most once, at the
    /// first such form's position) or are removed under
    /// [`OovPolicy::Drop`].
    pub fn forms_of(&self, word: &str, vocab: &Vocabulary, policy: OovPolicy) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for form in self.related_forms(word) {
            if form == word {
                continue;
            }
            let candidate = if vocab.contains(form) {
                form
            } else {
                match policy {
                    OovPolicy::Unk => UNK,
                    OovPolicy::Drop => continue,
                }
            };
            if !out.iter().any(|o| o == candidate) {
                out.push(candidate.to_owned());
            }
        }
        out
    }
}

fn parse_line(line: &str) -> Option<(&str, PartOfSpeech, Vec<String>)> {
    let (head, body) = line.split_once(':')?;
    let mut head_parts = head.split_whitespace();
    let lemma = head_parts.next()?;
    let tag = head_parts.next()?;
    if head_parts.next().is_some() {
        return None;
    }
    let pos = PartOfSpeech::from_tag(tag.trim_end_matches(['?', '~', '!', '<']))?;
    let lemma_clean = clean_form(lemma)?;
    if lemma_clean != lemma {
        return None;
    }
    let mut forms = Vec::new();
    for slot in body.split(',') {
        for alt in slot.split('|') {
            if alt.trim().is_empty() {
                continue;
            }
            if let Some(form) = clean_form(alt) {
                forms.push(form);
            }
        }
    }
    if forms.is_empty() {
        return None;
    }
    Some((lemma, pos, forms))
}

/// Strips AGID annotations from one alternative and returns the bare word,
/// or `None` if what remains is not a single token.
fn clean_form(raw: &str) -> Option<String> {
    let mut cleaned = String::with_capacity(raw.len());
    let mut depth = 0usize;
    for ch in raw.chars() {
        match ch {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            '?' | '~' | '!' | '<' if depth == 0 => {}
            _ if depth == 0 => cleaned.push(ch),
            _ => {}
        }
    }
    let mut words = cleaned
        .split_whitespace()
        .filter(|w| !w.chars().all(|c| c.is_ascii_digit()));
    let word = words.next()?;
    if words.next().is_some() {
        return None;
    }
    Some(word.to_owned())
}
