//! Sequential label alignment across snapshots.
//!
//! Per-snapshot inference returns labels up to a permutation. Row `t` is
//! relabeled by the permutation that maximizes agreement with the already
//! aligned row `t − 1`.

use alloc::vec::Vec;

use crate::error::Result;
use crate::overlap::{best_relabeling, relabel};

/// Aligned rows and, per row, the permutation applied to the raw labels
/// (`aligned[t][i] = perms[t][raw[t][i]]`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub rows: Vec<Vec<usize>>,
    pub permutations: Vec<Vec<usize>>,
}

pub fn align_labels(raw: &[Vec<usize>], k: usize) -> Result<Alignment> {
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(raw.len());
    let mut permutations = Vec::with_capacity(raw.len());
    for (t, row) in raw.iter().enumerate() {
        let perm = if t == 0 {
            (0..k).collect()
        } else {
            best_relabeling(row, &rows[t - 1], k)?.0
        };
        rows.push(relabel(row, &perm));
        permutations.push(perm);
    }
    Ok(Alignment { rows, permutations })
}
