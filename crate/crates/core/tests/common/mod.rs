//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use lmgec::eval::{EditLattice, EvalCounts};
use lmgec::scorer::{ScoreError, Scorer};
use lmgec::search::Tau;
use lmgec::{apply_edits, CandidateSet, Edit, GoldAnnotation, Sentence};
use rand::Rng;

/// Exhaustive MaxMatch: every subset of arcs that applies cleanly and
/// reproduces the hypothesis, ranked by gold matches (desc), size (asc),
/// then the lexicographically smallest sequence of end offsets.
pub fn maxmatch_brute_force(
    source: &Sentence,
    hypothesis: &Sentence,
    lattice: &EditLattice,
    gold: &GoldAnnotation,
) -> Vec<Edit> {
    let mut arcs: Vec<Edit> = lattice.arcs.iter().map(|a| a.edit.clone()).collect();
    arcs.sort_by_key(|e| (e.start, e.end));
    let mut best: Option<(usize, usize, Vec<usize>, Vec<Edit>)> = None;
    let mut chosen: Vec<Edit> = Vec::new();
    subsets(&arcs, 0, &mut chosen, &mut |subset| {
        if apply_edits(source, subset).ok().as_ref() != Some(hypothesis) {
            return;
        }
        let matches = subset
            .iter()
            .filter(|e| gold.edits.iter().any(|g| g.same_correction(e, false)))
            .count();
        let ends: Vec<usize> = subset.iter().map(|e| e.end).collect();
        let better = match &best {
            None => true,
            Some((m, n, e, _)) => {
                (
                    matches,
                    std::cmp::Reverse(subset.len()),
                    std::cmp::Reverse(&ends),
                ) > (*m, std::cmp::Reverse(*n), std::cmp::Reverse(e))
            }
        };
        if better {
            best = Some((matches, subset.len(), ends, subset.to_vec()));
        }
    });
    best.map(|b| b.3).unwrap_or_default()
}

/// Visits every subset of `arcs` (kept in order) whose spans do not overlap.
fn subsets(arcs: &[Edit], from: usize, chosen: &mut Vec<Edit>, visit: &mut dyn FnMut(&[Edit])) {
    visit(chosen);
    for k in from..arcs.len() {
        let fits = chosen.last().is_none_or(|prev| arcs[k].start >= prev.end);
        if fits {
            chosen.push(arcs[k].clone());
            subsets(arcs, k + 1, chosen, visit);
            chosen.pop();
        }
    }
}

/// Counts by direct set comparison.
pub fn counts_oracle(selected: &[Edit], gold: &GoldAnnotation) -> EvalCounts {
    let tp = selected
        .iter()
        .filter(|e| gold.edits.iter().any(|g| g.same_correction(e, false)))
        .count() as u64;
    EvalCounts::new(tp, selected.len() as u64 - tp, gold.edits.len() as u64 - tp)
}

/// Random tokenized sentence over a tiny alphabet so that alignments have
/// plenty of ties.
pub fn random_sentence<R: Rng>(rng: &mut R, max_len: usize, alphabet: &[&str]) -> Sentence {
    let len = rng.gen_range(1..=max_len);
    Sentence::from_words((0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]))
}

/// A random hypothesis derived from `source` by a few edit operations.
pub fn perturb<R: Rng>(
    rng: &mut R,
    source: &Sentence,
    max_len: usize,
    alphabet: &[&str],
) -> Sentence {
    let mut words: Vec<&str> = source.words().collect();
    for _ in 0..rng.gen_range(0..=3) {
        let pick = alphabet[rng.gen_range(0..alphabet.len())];
        match rng.gen_range(0..3) {
            0 if !words.is_empty() => {
                let i = rng.gen_range(0..words.len());
                words[i] = pick;
            }
            1 if words.len() > 1 => {
                words.remove(rng.gen_range(0..words.len()));
            }
            _ if words.len() < max_len => {
                let i = rng.gen_range(0..=words.len());
                words.insert(i, pick);
            }
            _ => {}
        }
    }
    Sentence::from_words(words)
}

/// Random gold edits over `source`: a mix of arcs taken from the lattice
/// and unrelated edits.
pub fn random_gold<R: Rng>(
    rng: &mut R,
    source: &Sentence,
    lattice: &EditLattice,
    alphabet: &[&str],
) -> GoldAnnotation {
    let mut edits: Vec<Edit> = Vec::new();
    for arc in &lattice.arcs {
        if rng.gen_bool(0.4) {
            edits.push(arc.edit.clone());
        }
    }
    if rng.gen_bool(0.5) && !source.is_empty() {
        let start = rng.gen_range(0..source.len());
        let end = rng.gen_range(start..=source.len());
        edits.push(Edit::new(
            start,
            end,
            alphabet[rng.gen_range(0..alphabet.len())],
        ));
    }
    edits.sort_by_key(|e| (e.start, e.end));
    GoldAnnotation {
        annotator_id: 0,
        edits,
    }
}

/// Exhaustive single-position search: the best alternative (earliest on
/// ties) if it clears the margin, otherwise the input.
pub fn single_candidate_oracle<S: Scorer>(
    sentence: &Sentence,
    cand: &CandidateSet,
    scorer: &S,
    tau: Tau,
) -> Sentence {
    let base = scorer.score(sentence).unwrap();
    let mut best: Option<(f64, Sentence)> = None;
    for alt in &cand.alternatives {
        let edited =
            apply_edits(sentence, &[Edit::new(cand.start, cand.end, alt.clone())]).unwrap();
        if edited.is_empty() {
            continue;
        }
        let sc = scorer.score(&edited).unwrap();
        if best.as_ref().is_none_or(|(b, _)| sc > *b) {
            best = Some((sc, edited));
        }
    }
    match best {
        Some((sc, edited)) if sc > base + tau.value() => edited,
        _ => sentence.clone(),
    }
}

/// Deterministic pseudo-random scores keyed by sentence text.
pub struct HashScorer {
    pub salt: u64,
}

impl Scorer for HashScorer {
    fn score(&self, sentence: &Sentence) -> Result<f64, ScoreError> {
        // FNV-1a over the text, mapped to a value in [-40, 0).
        let mut h: u64 = 0xcbf29ce484222325 ^ self.salt;
        for b in sentence.to_string().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
        Ok(-((h % 40_000) as f64) / 1000.0 - 0.001)
    }
}
