//! Sampling from the persistent dynamic SBM.
//!
//! Link resampling never visits all `N (N − 1) / 2` pairs. Pairs that were
//! linked at `t − 1` toss the copy coin explicitly; every previously absent
//! pair is linked with probability `(1 − xi) p_ab`, so the number of new links
//! per label-pair class is drawn from a binomial and placed uniformly among the
//! absent pairs of that class.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Result};
use crate::graph::{Edge, Snapshot, TemporalNetwork};
use crate::labels::AssignmentSequence;
use crate::params::{AffinityMatrix, ModelParams, Prior};
use crate::rng::substream;

/// A sampled temporal network with its planted labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOutput {
    pub network: TemporalNetwork,
    pub planted: AssignmentSequence,
    pub params: ModelParams,
    pub seed: u64,
}

const LABEL_LANE: u64 = 0;
const LINK_LANE: u64 = 1;

fn draw_label<R: Rng + ?Sized>(prior: &Prior, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (r, &q) in prior.weights().iter().enumerate() {
        if q > 0.0 {
            acc += q;
            last = r;
            if u < acc {
                return r;
            }
        }
    }
    last
}

/// Labels at `t = 0` (i.i.d. from the prior) and the static SBM snapshot on them.
pub fn sample_initial<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<(Vec<usize>, Snapshot)> {
    params.validate()?;
    let labels: Vec<usize> = (0..params.n_nodes).map(|_| draw_label(&params.prior, rng)).collect();
    let affinity = params.affinity()?;
    let snapshot = sample_links(None, &labels, 0.0, &affinity, rng);
    Ok((labels, snapshot))
}

/// One label transition: each node keeps its label with probability `eta`,
/// otherwise redraws it from the prior (possibly the same group).
pub fn step_communities<R: Rng + ?Sized>(prev: &[usize], eta: f64, prior: &Prior, rng: &mut R) -> Vec<usize> {
    prev.iter()
        .map(|&g| {
            if rng.random::<f64>() < eta {
                g
            } else {
                draw_label(prior, rng)
            }
        })
        .collect()
}

/// One link transition: each pair copies its previous state with probability
/// `xi`, otherwise draws a fresh link with probability `p_{g_i g_j}`.
pub fn step_links<R: Rng + ?Sized>(
    prev: &Snapshot,
    labels: &[usize],
    xi: f64,
    affinity: &AffinityMatrix,
    rng: &mut R,
) -> Result<Snapshot> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(invalid!("xi must lie in [0, 1], got {xi}"));
    }
    if let Some(&(_, j)) = prev.edges().last().filter(|&&(_, j)| j as usize >= labels.len()) {
        return Err(invalid!("previous snapshot references node {j} beyond N = {}", labels.len()));
    }
    if labels.iter().any(|&g| g >= affinity.k()) {
        return Err(invalid!("label outside the affinity matrix"));
    }
    Ok(sample_links(Some(prev), labels, xi, affinity, rng))
}

fn class_index(a: usize, b: usize, k: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * k + b
}

fn sample_links<R: Rng + ?Sized>(
    prev: Option<&Snapshot>,
    labels: &[usize],
    xi: f64,
    affinity: &AffinityMatrix,
    rng: &mut R,
) -> Snapshot {
    let k = affinity.k();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (i, &g) in labels.iter().enumerate() {
        members[g].push(i as u32);
    }

    let mut out: Vec<Edge> = Vec::new();
    let mut prev_in_class = vec![0u64; k * k];
    if let Some(prev) = prev {
        for &(i, j) in prev.edges() {
            let (a, b) = (labels[i as usize], labels[j as usize]);
            prev_in_class[class_index(a, b, k)] += 1;
            let copy = rng.random::<f64>() < xi;
            if copy || rng.random::<f64>() < affinity.get(a, b) {
                out.push((i, j));
            }
        }
    }

    let fresh = 1.0 - xi;
    for a in 0..k {
        for b in a..k {
            let p = fresh * affinity.get(a, b);
            let (na, nb) = (members[a].len() as u64, members[b].len() as u64);
            let total = if a == b { na * na.saturating_sub(1) / 2 } else { na * nb };
            let absent = total - prev_in_class[a * k + b];
            if absent == 0 || p <= 0.0 {
                continue;
            }
            let count = if p >= 1.0 {
                absent
            } else {
                Binomial::new(absent, p).expect("valid binomial").sample(rng)
            };
            if count == 0 {
                continue;
            }
            place_fresh(&members[a], &members[b], a == b, prev, count, total, rng, &mut out);
        }
    }
    out.sort_unstable();
    Snapshot::from_sorted(out)
}

#[allow(clippy::too_many_arguments)]
fn place_fresh<R: Rng + ?Sized>(
    left: &[u32],
    right: &[u32],
    same: bool,
    prev: Option<&Snapshot>,
    count: u64,
    total: u64,
    rng: &mut R,
    out: &mut Vec<Edge>,
) {
    let occupied = |e: &Edge| prev.is_some_and(|s| s.edges().binary_search(e).is_ok());
    let pair = |u: u32, v: u32| if u < v { (u, v) } else { (v, u) };

    // Small or crowded classes: enumerate the absent pairs and pick a subset.
    if total <= 4 * count + 1024 {
        let mut candidates = Vec::new();
        for (x, &u) in left.iter().enumerate() {
            let start = if same { x + 1 } else { 0 };
            for &v in &right[start..] {
                let e = pair(u, v);
                if !occupied(&e) {
                    candidates.push(e);
                }
            }
        }
        let chosen = rand::seq::index::sample(rng, candidates.len(), count as usize);
        out.extend(chosen.iter().map(|c| candidates[c]));
        return;
    }

    let mut placed: BTreeSet<Edge> = BTreeSet::new();
    while (placed.len() as u64) < count {
        let e = if same {
            let x = rng.random_range(0..left.len());
            let mut y = rng.random_range(0..left.len() - 1);
            if y >= x {
                y += 1;
            }
            pair(left[x], left[y])
        } else {
            pair(left[rng.random_range(0..left.len())], right[rng.random_range(0..right.len())])
        };
        if !occupied(&e) {
            placed.insert(e);
        }
    }
    out.extend(placed);
}

/// Samples labels and links for `t = 0..=T`. Time step `t` draws from its own
/// ChaCha streams keyed by `seed`, so the output depends only on `(params, seed)`.
pub fn generate(params: &ModelParams, seed: u64) -> Result<GeneratorOutput> {
    params.validate()?;
    let affinity = params.affinity()?;
    let n = params.n_nodes;

    let mut label_rng = substream(seed, 0, LABEL_LANE);
    let labels: Vec<usize> = (0..n).map(|_| draw_label(&params.prior, &mut label_rng)).collect();
    let mut link_rng = substream(seed, 0, LINK_LANE);
    let first = sample_links(None, &labels, 0.0, &affinity, &mut link_rng);

    let mut rows = Vec::with_capacity(params.n_steps + 1);
    let mut snapshots = Vec::with_capacity(params.n_steps + 1);
    rows.push(labels);
    snapshots.push(first);
    for t in 1..=params.n_steps {
        let mut label_rng = substream(seed, t as u64, LABEL_LANE);
        let mut link_rng = substream(seed, t as u64, LINK_LANE);
        let labels = step_communities(&rows[t - 1], params.community_persistence, &params.prior, &mut label_rng);
        let snap = sample_links(Some(&snapshots[t - 1]), &labels, params.link_persistence, &affinity, &mut link_rng);
        rows.push(labels);
        snapshots.push(snap);
    }

    Ok(GeneratorOutput {
        network: TemporalNetwork::new(n, snapshots)?,
        planted: AssignmentSequence::new(params.k, rows)?,
        params: params.clone(),
        seed,
    })
}
