//! Empirical label and link transition frequencies.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::TemporalNetwork;

/// Frequencies over all counted transitions `t − 1 → t`.
///
/// `m(a, b, prev, now)` is the fraction of ordered node pairs `(i, j)`, `i ≠ j`,
/// with labels `(a, b)` at time `t`, link state `prev` at `t − 1` and `now` at
/// `t`; it is symmetric in `(a, b)` and sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCounts {
    k: usize,
    m: Vec<f64>,
    /// `f_same[a]`: fraction of `(i, t)` with `y^t_i = y^{t−1}_i = a`.
    pub f_same: Vec<f64>,
    /// Fraction of `(i, t)` with `y^t_i ≠ y^{t−1}_i`.
    pub f_diff: f64,
    /// Number of transitions that entered the counts.
    pub transitions: usize,
}

#[inline]
fn idx(k: usize, a: usize, b: usize, prev: usize, now: usize) -> usize {
    ((a * k + b) * 2 + prev) * 2 + now
}

impl TransitionCounts {
    /// Builds counts from raw frequencies laid out as `[a][b][prev][now]`.
    pub fn from_parts(k: usize, m: Vec<f64>, f_same: Vec<f64>, f_diff: f64, transitions: usize) -> Result<Self> {
        if m.len() != 4 * k * k || f_same.len() != k {
            return Err(Error::InvalidParameter("transition table has the wrong shape".into()));
        }
        Ok(Self { k, m, f_same, f_diff, transitions })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn m(&self, a: usize, b: usize, prev: bool, now: bool) -> f64 {
        self.m[idx(self.k, a, b, prev as usize, now as usize)]
    }

    pub fn total_mass(&self) -> f64 {
        self.m.iter().sum()
    }

    pub fn f_same_total(&self) -> f64 {
        self.f_same.iter().sum()
    }
}

/// Counts over every transition `1..=T`.
pub fn transition_counts(network: &TemporalNetwork, aligned: &[Vec<usize>], k: usize) -> Result<TransitionCounts> {
    transition_counts_masked(network, aligned, k, None)
}

/// Counts over the transitions whose endpoints are both marked valid.
///
/// Link pairs are counted sparsely: pairs linked at `t − 1` or `t` explicitly,
/// the `0 → 0` pairs as the complement of the per-class pair totals.
pub fn transition_counts_masked(
    network: &TemporalNetwork,
    aligned: &[Vec<usize>],
    k: usize,
    valid: Option<&[bool]>,
) -> Result<TransitionCounts> {
    let t_max = network.n_steps();
    if t_max == 0 {
        return Err(Error::NoTransitions);
    }
    if aligned.len() != network.n_snapshots() {
        return Err(Error::InvalidAssignment(alloc::format!(
            "{} assignment rows for {} snapshots",
            aligned.len(),
            network.n_snapshots()
        )));
    }
    let n = network.n_nodes();
    if aligned.iter().any(|r| r.len() != n || r.iter().any(|&g| g >= k)) {
        return Err(Error::InvalidAssignment("assignment rows do not match N or k".into()));
    }

    let mut pair_counts = vec![0u64; 4 * k * k];
    let mut same = vec![0u64; k];
    let mut diff = 0u64;
    let mut transitions = 0usize;

    for t in 1..=t_max {
        if let Some(v) = valid {
            if !(v[t] && v[t - 1]) {
                continue;
            }
        }
        transitions += 1;
        let (prev_row, row) = (&aligned[t - 1], &aligned[t]);
        for (&g0, &g1) in prev_row.iter().zip(row) {
            if g0 == g1 {
                same[g1] += 1;
            } else {
                diff += 1;
            }
        }

        let mut sizes = vec![0u64; k];
        for &g in row {
            sizes[g] += 1;
        }
        let mut linked = vec![0u64; 4 * k * k];
        let before = network.snapshot(t - 1).edges();
        let after = network.snapshot(t).edges();
        let (mut x, mut y) = (0, 0);
        while x < before.len() || y < after.len() {
            let (e, prev, now) = match (before.get(x), after.get(y)) {
                (Some(p), Some(q)) if p == q => {
                    x += 1;
                    y += 1;
                    (*p, 1, 1)
                }
                (Some(p), Some(q)) if p < q => {
                    x += 1;
                    (*p, 1, 0)
                }
                (Some(p), None) => {
                    x += 1;
                    (*p, 1, 0)
                }
                (_, Some(q)) => {
                    y += 1;
                    (*q, 0, 1)
                }
                (None, None) => unreachable!(),
            };
            let (a, b) = (row[e.0 as usize], row[e.1 as usize]);
            linked[idx(k, a, b, prev, now)] += 1;
            linked[idx(k, b, a, prev, now)] += 1;
        }
        for a in 0..k {
            for b in 0..k {
                let ordered_total = if a == b { sizes[a] * sizes[a].saturating_sub(1) } else { sizes[a] * sizes[b] };
                let seen: u64 = (0..4).map(|s| linked[(a * k + b) * 4 + s]).sum();
                linked[idx(k, a, b, 0, 0)] = ordered_total - seen;
            }
        }
        for (acc, v) in pair_counts.iter_mut().zip(&linked) {
            *acc += v;
        }
    }

    if transitions == 0 {
        return Err(Error::NoTransitions);
    }
    let pair_norm = transitions as f64 * n as f64 * (n as f64 - 1.0);
    let node_norm = transitions as f64 * n as f64;
    Ok(TransitionCounts {
        k,
        m: pair_counts.iter().map(|&c| c as f64 / pair_norm).collect(),
        f_same: same.iter().map(|&c| c as f64 / node_norm).collect(),
        f_diff: diff as f64 / node_norm,
        transitions,
    })
}
