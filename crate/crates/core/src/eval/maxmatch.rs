//! Selection of the hypothesis edit set that best agrees with a gold
//! annotation.
//!
//! A selection is a path through the lattice: a sequence of arcs that covers
//! every atomic edit exactly once, in order. Among all paths we want the most
//! arcs equal to a gold edit, then the fewest arcs, then the path whose arc
//! boundaries come earliest (lexicographically smallest sequence of end
//! points).

use super::lattice::EditLattice;
use crate::text::{Edit, GoldAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Best {
    matches: usize,
    arcs: usize,
    /// Index into `lattice.arcs` of the first arc on the best suffix path.
    next: usize,
}

impl Best {
    fn better_than(&self, other: &Best) -> bool {
        (self.matches, std::cmp::Reverse(self.arcs))
            > (other.matches, std::cmp::Reverse(other.arcs))
    }
}

fn is_gold(edit: &Edit, gold: &GoldAnnotation, ignore_case: bool) -> bool {
    gold.edits
        .iter()
        .any(|g| g.same_correction(edit, ignore_case))
}

/// Returns the selected edits in source order. An empty lattice yields an
/// empty selection.
pub fn maxmatch_select(
    lattice: &EditLattice,
    gold: &GoldAnnotation,
    ignore_case: bool,
) -> Vec<Edit> {
    let n = lattice.atomic_count;
    if n == 0 {
        return Vec::new();
    }
    let gold_hit: Vec<bool> = lattice
        .arcs
        .iter()
        .map(|a| is_gold(&a.edit, gold, ignore_case))
        .collect();
    let mut by_first: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (idx, arc) in lattice.arcs.iter().enumerate() {
        by_first[arc.first].push(idx);
    }
    for list in &mut by_first {
        list.sort_by_key(|&idx| lattice.arcs[idx].last);
    }

    // best[k]: optimal path covering atomic edits k..n.
    let mut best: Vec<Option<Best>> = vec![None; n + 1];
    best[n] = Some(Best {
        matches: 0,
        arcs: 0,
        next: usize::MAX,
    });
    for k in (0..n).rev() {
        let mut chosen: Option<Best> = None;
        // Arcs are visited by increasing end, so only a strict improvement
        // replaces the current choice.
        for &idx in &by_first[k] {
            let arc = &lattice.arcs[idx];
            let Some(rest) = best[arc.last + 1] else {
                continue;
            };
            let candidate = Best {
                matches: rest.matches + usize::from(gold_hit[idx]),
                arcs: rest.arcs + 1,
                next: idx,
            };
            if chosen.is_none_or(|c| candidate.better_than(&c)) {
                chosen = Some(candidate);
            }
        }
        best[k] = chosen;
    }

    let mut out = Vec::new();
    let mut k = 0;
    while k < n {
        let step = best[k].expect("atomic arcs guarantee a path");
        let arc = &lattice.arcs[step.next];
        out.push(arc.edit.clone());
        k = arc.last + 1;
    }
    out
}
