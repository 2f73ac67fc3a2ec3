//! Seeded synthetic data: a small English-like grammar, a matching
//! inflection table and a corrupter that injects preposition, determiner and
//! word-form errors with gold annotations.
//!
//! Used for tests, benchmarks and the bundled example data. The same seed
//! always yields the same text.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lexicon::{FunctionWords, InflectionDb, Lexicon, Vocabulary};
use crate::m2::M2Entry;
use crate::text::{Edit, GoldAnnotation, Sentence};

struct Noun {
    singular: &'static str,
    plural: &'static str,
}

const fn n(singular: &'static str, plural: &'static str) -> Noun {
    Noun { singular, plural }
}

const NOUNS: &[Noun] = &[
    n("dog", "dogs"),
    n("cat", "cats"),
    n("teacher", "teachers"),
    n("student", "students"),
    n("child", "children"),
    n("city", "cities"),
    n("book", "books"),
    n("apple", "apples"),
    n("idea", "ideas"),
    n("friend", "friends"),
    n("house", "houses"),
    n("garden", "gardens"),
    n("river", "rivers"),
    n("car", "cars"),
    n("letter", "letters"),
    n("window", "windows"),
    n("doctor", "doctors"),
    n("engineer", "engineers"),
    n("artist", "artists"),
    n("owl", "owls"),
];

struct Verb {
    base: &'static str,
    third: &'static str,
    past: &'static str,
    participle: &'static str,
    gerund: &'static str,
}

const fn v(
    base: &'static str,
    third: &'static str,
    past: &'static str,
    participle: &'static str,
    gerund: &'static str,
) -> Verb {
    Verb {
        base,
        third,
        past,
        participle,
        gerund,
    }
}

/// Intransitive verbs and the preposition each one governs.
const PREP_VERBS: &[(Verb, &str)] = &[
    (
        v("listen", "listens", "listened", "listened", "listening"),
        "to",
    ),
    (v("look", "looks", "looked", "looked", "looking"), "at"),
    (
        v("depend", "depends", "depended", "depended", "depending"),
        "on",
    ),
    (v("wait", "waits", "waited", "waited", "waiting"), "for"),
    (v("talk", "talks", "talked", "talked", "talking"), "about"),
    (
        v("belong", "belongs", "belonged", "belonged", "belonging"),
        "to",
    ),
    (v("agree", "agrees", "agreed", "agreed", "agreeing"), "with"),
    (
        v("arrive", "arrives", "arrived", "arrived", "arriving"),
        "at",
    ),
    (v("hear", "hears", "heard", "heard", "hearing"), "about"),
    (v("care", "cares", "cared", "cared", "caring"), "for"),
];

const TRANSITIVE: &[Verb] = &[
    v("see", "sees", "saw", "seen", "seeing"),
    v("know", "knows", "knew", "known", "knowing"),
    v("find", "finds", "found", "found", "finding"),
    v("need", "needs", "needed", "needed", "needing"),
    v("want", "wants", "wanted", "wanted", "wanting"),
    v("take", "takes", "took", "taken", "taking"),
    v("write", "writes", "wrote", "written", "writing"),
    v("build", "builds", "built", "built", "building"),
    v("visit", "visits", "visited", "visited", "visiting"),
    v("carry", "carries", "carried", "carried", "carrying"),
];

/// Adjectives with comparative and superlative forms.
const ADJECTIVES: &[(&str, &str, &str)] = &[
    ("big", "bigger", "biggest"),
    ("small", "smaller", "smallest"),
    ("old", "older", "oldest"),
    ("new", "newer", "newest"),
    ("happy", "happier", "happiest"),
    ("quiet", "quieter", "quietest"),
    ("heavy", "heavier", "heaviest"),
    ("young", "younger", "youngest"),
];

const PLACE_PREPS: &[&str] = &["in", "near", "under", "behind"];
const PLACES: &[&str] = &["garden", "house", "city", "river", "window"];
const TIMES: &[&str] = &["yesterday", "today", "again", "often"];

/// Every preposition the grammar uses, i.e. the corrupter's confusion set.
pub const PREPOSITIONS: &[&str] = &[
    "to", "at", "on", "for", "about", "with", "in", "near", "under", "behind", "of", "from", "by",
];
const SINGULAR_DETS: &[&str] = &["the", "a", "this", "every"];
const PLURAL_DETS: &[&str] = &["the", "these", "some", "many"];
/// Every determiner the grammar uses.
pub const DETERMINERS: &[&str] = &["the", "a", "an", "this", "every", "these", "some", "many"];

fn starts_with_vowel(word: &str) -> bool {
    matches!(
        word.as_bytes().first(),
        Some(b'a' | b'e' | b'i' | b'o' | b'u')
    )
}

/// Deterministic sentence generator.
pub struct Grammar {
    rng: ChaCha8Rng,
}

#[derive(Clone, Copy)]
enum Number {
    Singular,
    Plural,
}

impl Grammar {
    pub fn new(seed: u64) -> Self {
        Grammar {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(&mut self.rng).expect("non-empty list")
    }

    fn noun_phrase(&mut self, out: &mut Vec<&'static str>, number: Number, allow_adj: bool) {
        let noun = &NOUNS[self.rng.gen_range(0..NOUNS.len())];
        let adj = (allow_adj && self.rng.gen_bool(0.3)).then(|| self.pick(ADJECTIVES).0);
        let head = match number {
            Number::Singular => noun.singular,
            Number::Plural => noun.plural,
        };
        let next = adj.unwrap_or(head);
        let det = match number {
            Number::Singular => match self.pick(SINGULAR_DETS) {
                "a" if starts_with_vowel(next) => "an",
                d => d,
            },
            Number::Plural => self.pick(PLURAL_DETS),
        };
        out.push(det);
        out.extend(adj);
        out.push(head);
    }

    fn subject(&mut self, out: &mut Vec<&'static str>) -> Number {
        let number = if self.rng.gen_bool(0.5) {
            Number::Singular
        } else {
            Number::Plural
        };
        if self.rng.gen_bool(0.2) {
            out.push(match number {
                Number::Singular => self.pick(&["he", "she"]),
                Number::Plural => self.pick(&["they", "we"]),
            });
        } else {
            self.noun_phrase(out, number, true);
        }
        number
    }

    fn object(&mut self, out: &mut Vec<&'static str>) {
        let number = if self.rng.gen_bool(0.6) {
            Number::Singular
        } else {
            Number::Plural
        };
        self.noun_phrase(out, number, true);
    }

    fn place(&mut self, out: &mut Vec<&'static str>) {
        out.push(self.pick(PLACE_PREPS));
        out.push("the");
        out.push(self.pick(PLACES));
    }

    /// One sentence, first word capitalized, ending in ".".
    pub fn sentence(&mut self) -> Sentence {
        let mut w: Vec<&'static str> = Vec::with_capacity(14);
        let number = self.subject(&mut w);
        match self.rng.gen_range(0..6) {
            0 | 1 => {
                let (verb, prep) = &PREP_VERBS[self.rng.gen_range(0..PREP_VERBS.len())];
                w.push(self.tensed(verb, number));
                w.push(prep);
                self.object(&mut w);
            }
            2 | 3 => {
                let verb = &TRANSITIVE[self.rng.gen_range(0..TRANSITIVE.len())];
                w.push(self.tensed(verb, number));
                self.object(&mut w);
            }
            4 => {
                let past = self.rng.gen_bool(0.3);
                w.push(match (number, past) {
                    (Number::Singular, false) => "is",
                    (Number::Plural, false) => "are",
                    (Number::Singular, true) => "was",
                    (Number::Plural, true) => "were",
                });
                let (adj, comparative, _) = self.pick(ADJECTIVES);
                if self.rng.gen_bool(0.3) {
                    w.push(comparative);
                    w.push("now");
                } else {
                    w.push(adj);
                }
            }
            _ => {
                let verb = &TRANSITIVE[self.rng.gen_range(0..TRANSITIVE.len())];
                w.push(match number {
                    Number::Singular => "has",
                    Number::Plural => "have",
                });
                w.push(verb.participle);
                self.object(&mut w);
            }
        }
        if self.rng.gen_bool(0.4) {
            self.place(&mut w);
        }
        if self.rng.gen_bool(0.2) {
            w.push(self.pick(TIMES));
        }
        w.push(".");
        let mut words: Vec<String> = w.into_iter().map(str::to_owned).collect();
        words[0] = capitalize(&words[0]);
        Sentence::from_words(words)
    }

    fn tensed(&mut self, verb: &Verb, number: Number) -> &'static str {
        if self.rng.gen_bool(0.3) {
            return verb.past;
        }
        match number {
            Number::Singular => verb.third,
            Number::Plural => verb.base,
        }
    }

    /// Sentences until at least `min_tokens` tokens have been produced.
    pub fn corpus(&mut self, min_tokens: usize) -> Vec<Sentence> {
        let mut out = Vec::new();
        let mut total = 0;
        while total < min_tokens {
            let s = self.sentence();
            total += s.len();
            out.push(s);
        }
        out
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Inflection table covering every inflected word of the grammar, in the
/// `lemma POS: form | form` line format.
pub fn inflection_table() -> String {
    let mut out = String::new();
    for noun in NOUNS {
        let _ = writeln!(out, "{} N: {}", noun.singular, noun.plural);
    }
    for verb in PREP_VERBS.iter().map(|(v, _)| v).chain(TRANSITIVE) {
        let mut forms = vec![verb.past];
        if verb.participle != verb.past {
            forms.push(verb.participle);
        }
        forms.push(verb.gerund);
        forms.push(verb.third);
        let _ = writeln!(out, "{} V: {}", verb.base, forms.join(" | "));
    }
    out.push_str("be V: was, were | been | being | am, is, are\n");
    out.push_str("have V: had | having | has\n");
    for (adj, comparative, superlative) in ADJECTIVES {
        let _ = writeln!(out, "{adj} A: {comparative} | {superlative}");
    }
    out
}

pub fn inflections() -> InflectionDb {
    InflectionDb::parse_str(&inflection_table())
}

/// Vocabulary of `corpus`, the grammar's inflection table and the bundled
/// function-word inventories.
pub fn lexicon(corpus: &[Sentence]) -> Lexicon {
    Lexicon {
        vocab: Vocabulary::build(corpus.iter().flat_map(|s| s.words()), 1),
        inflections: inflections(),
        function_words: FunctionWords::default(),
    }
}

/// A clean sentence, its corrupted copy and the gold edits that restore it
/// (in corrupted coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedSentence {
    pub clean: Sentence,
    pub corrupted: Sentence,
    pub edits: Vec<Edit>,
}

impl CorruptedSentence {
    pub fn to_m2(&self) -> M2Entry {
        M2Entry {
            source: self.corrupted.clone(),
            annotations: vec![GoldAnnotation {
                annotator_id: 0,
                edits: self.edits.clone(),
            }],
        }
    }
}

/// Substitutes tokens by confusable alternatives.
pub struct Corrupter {
    rng: ChaCha8Rng,
    inflections: InflectionDb,
    /// Per-token corruption probability for eligible tokens.
    pub rate: f64,
}

impl Corrupter {
    pub fn new(seed: u64, rate: f64) -> Self {
        Corrupter {
            rng: ChaCha8Rng::seed_from_u64(seed),
            inflections: inflections(),
            rate,
        }
    }

    fn alternatives(&self, word: &str) -> Option<(&'static str, Vec<String>)> {
        let lower = word.to_lowercase();
        let others = |set: &[&str]| -> Vec<String> {
            set.iter()
                .filter(|w| **w != lower)
                .map(|w| w.to_string())
                .collect()
        };
        if PREPOSITIONS.contains(&lower.as_str()) {
            return Some(("PREP", others(PREPOSITIONS)));
        }
        if DETERMINERS.contains(&lower.as_str()) {
            return Some(("DET", others(DETERMINERS)));
        }
        let forms: Vec<String> = self
            .inflections
            .related_forms(&lower)
            .into_iter()
            .filter(|f| *f != lower)
            .map(str::to_owned)
            .collect();
        (!forms.is_empty()).then_some(("MORPH", forms))
    }

    pub fn corrupt(&mut self, clean: &Sentence) -> CorruptedSentence {
        let mut words = clean.to_words();
        let mut edits = Vec::new();
        for (i, word) in clean.words().enumerate() {
            let Some((label, alts)) = self.alternatives(word) else {
                continue;
            };
            if !self.rng.gen_bool(self.rate) {
                continue;
            }
            let mut wrong = alts.choose(&mut self.rng).expect("non-empty").clone();
            if word.chars().next().is_some_and(char::is_uppercase) {
                wrong = capitalize(&wrong);
            }
            words[i] = wrong;
            edits.push(Edit::new(i, i + 1, word).with_type(label));
        }
        CorruptedSentence {
            clean: clean.clone(),
            corrupted: Sentence::from_words(words),
            edits,
        }
    }
}
