//! Edit-distance spelling suggestions over a [`Vocabulary`].

use super::Vocabulary;

/// Optimal-string-alignment distance (Damerau–Levenshtein restricted to
/// non-overlapping adjacent transpositions), computed over chars.
///
/// Returns `None` as soon as the distance is known to exceed `max`.
pub fn bounded_distance(a: &str, b: &str, max: usize) -> Option<usize> {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.len().abs_diff(b.len()) > max {
        return None;
    }
    let width = b.len() + 1;
    // Three rolling rows: i-2, i-1, i.
    let mut prev2 = vec![0usize; width];
    let mut prev: Vec<usize> = (0..width).collect();
    let mut cur = vec![0usize; width];
    for i in 1..=a.len() {
        cur[0] = i;
        let mut row_min = cur[0];
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut d = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                d = d.min(prev2[j - 2] + 1);
            }
            cur[j] = d;
            row_min = row_min.min(d);
        }
        if row_min > max {
            return None;
        }
        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[b.len()];
    (d <= max).then_some(d)
}

/// Suggests vocabulary words within `max_distance` of `word`.
///
/// Ordered by distance, then corpus frequency (descending), then
/// lexicographically; truncated to `max_suggestions`. A word that is already
/// in the vocabulary gets no suggestions.
pub fn spell_suggest(
    word: &str,
    vocab: &Vocabulary,
    max_distance: usize,
    max_suggestions: usize,
) -> Vec<String> {
    if vocab.contains(word) || max_suggestions == 0 {
        return Vec::new();
    }
    let mut hits: Vec<(usize, u64, &str)> = vocab
        .iter()
        .filter_map(|(w, freq)| bounded_distance(word, w, max_distance).map(|d| (d, freq, w)))
        .collect();
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(b.2)));
    hits.truncate(max_suggestions);
    hits.into_iter().map(|(_, _, w)| w.to_owned()).collect()
}
