//! Edit lattice between a source sentence and a hypothesis.
//!
//! A token-level Levenshtein alignment yields atomic edits (maximal runs of
//! non-matching operations). Runs of consecutive atomic edits separated by
//! at most `max_unchanged_words` matched tokens are added as merged arcs,
//! absorbing the matched tokens.

use crate::text::{Edit, Sentence};

pub const DEFAULT_MAX_UNCHANGED_WORDS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// An arc spans atomic edits `first..=last` and rewrites a source span into
/// a hypothesis span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub first: usize,
    pub last: usize,
    pub edit: Edit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditLattice {
    /// Number of atomic edits; nodes are the boundaries `0..=atomic_count`.
    pub atomic_count: usize,
    /// Atomic arcs first (in order), then merged arcs by (first, last).
    pub arcs: Vec<Arc>,
}

impl EditLattice {
    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn atomic(&self) -> &[Arc] {
        &self.arcs[..self.atomic_count]
    }

    /// The arc covering exactly atomic edits `first..=last`, if any.
    pub fn arc(&self, first: usize, last: usize) -> Option<&Arc> {
        self.arcs
            .iter()
            .find(|a| a.first == first && a.last == last)
    }
}

/// Token alignment with ties resolved as match, substitute, delete, insert
/// (checked in that order while tracing back from the end).
fn align(source: &[&str], hypothesis: &[&str]) -> Vec<Op> {
    let (n, m) = (source.len(), hypothesis.len());
    let mut cost = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in cost.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in cost[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = cost[i - 1][j - 1] + usize::from(source[i - 1] != hypothesis[j - 1]);
            cost[i][j] = diag.min(cost[i - 1][j] + 1).min(cost[i][j - 1] + 1);
        }
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i][j];
        if i > 0 && j > 0 && source[i - 1] == hypothesis[j - 1] && cost[i - 1][j - 1] == here {
            ops.push(Op::Match);
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && cost[i - 1][j - 1] + 1 == here {
            ops.push(Op::Substitute);
            i -= 1;
            j -= 1;
        } else if i > 0 && cost[i - 1][j] + 1 == here {
            ops.push(Op::Delete);
            i -= 1;
        } else {
            ops.push(Op::Insert);
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Source/hypothesis boundaries of one atomic edit.
#[derive(Debug, Clone, Copy)]
struct Span {
    src: (usize, usize),
    hyp: (usize, usize),
}

pub fn extract_lattice(
    source: &Sentence,
    hypothesis: &Sentence,
    max_unchanged_words: usize,
) -> EditLattice {
    let src: Vec<&str> = source.words().collect();
    let hyp: Vec<&str> = hypothesis.words().collect();
    let ops = align(&src, &hyp);

    let mut spans: Vec<Span> = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    let mut open: Option<Span> = None;
    for op in ops {
        if op == Op::Match {
            if let Some(s) = open.take() {
                spans.push(s);
            }
            i += 1;
            j += 1;
            continue;
        }
        let s = open.get_or_insert(Span {
            src: (i, i),
            hyp: (j, j),
        });
        match op {
            Op::Substitute => {
                i += 1;
                j += 1;
            }
            Op::Delete => i += 1,
            Op::Insert => j += 1,
            Op::Match => unreachable!(),
        }
        s.src.1 = i;
        s.hyp.1 = j;
    }
    if let Some(s) = open.take() {
        spans.push(s);
    }

    let make = |first: usize, last: usize| {
        let (a, b) = (spans[first], spans[last]);
        Arc {
            first,
            last,
            edit: Edit::new(a.src.0, b.src.1, hyp[a.hyp.0..b.hyp.1].join(" ")),
        }
    };
    let mut arcs: Vec<Arc> = (0..spans.len()).map(|k| make(k, k)).collect();
    for first in 0..spans.len() {
        for last in first + 1..spans.len() {
            let gap = spans[last].src.0 - spans[last - 1].src.1;
            if gap > max_unchanged_words {
                break;
            }
            arcs.push(make(first, last));
        }
    }
    EditLattice {
        atomic_count: spans.len(),
        arcs,
    }
}
