//! EM learning of the affinity matrix with BP as the E-step.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::Adjacency;
use crate::labels::{map_assignments, Marginals};
use crate::params::{AffinityMatrix, Prior};
use crate::rng::{derive_seed, seeded};

use super::bp::{self, BpConfig, BpResult};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmConfig {
    pub bp: BpConfig,
    pub max_rounds: usize,
    /// Stop once the largest change of `c_ab = N p_ab` falls below this.
    pub tol: f64,
    /// Restarts allowed after a degenerate E-step (an empty inferred group).
    pub max_restarts: usize,
    /// Independent random starts; the lowest free energy wins.
    pub n_starts: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            bp: BpConfig::default(),
            max_rounds: 50,
            tol: 1e-6,
            max_restarts: 5,
            n_starts: 1,
        }
    }
}

/// Starting affinity for EM.
#[derive(Debug, Clone, PartialEq)]
pub enum InitAffinity {
    Given(AffinityMatrix),
    /// Planted partition at the empirical mean degree with an assortativity
    /// drawn uniformly from `[0.3, 0.9)`.
    Random,
}

#[derive(Debug, Clone)]
pub struct EmResult {
    pub affinity_hat: AffinityMatrix,
    /// Assortativity of the planted-partition projection of `affinity_hat`.
    pub a_hat: f64,
    pub marginals: Marginals,
    pub assignments: Vec<usize>,
    pub em_iterations: usize,
    pub converged: bool,
    pub free_energy: f64,
}

/// Fits the affinity matrix of a static SBM on one snapshot.
pub fn em_fit(
    adjacency: &Adjacency,
    prior: &Prior,
    init: &InitAffinity,
    config: &EmConfig,
) -> Result<EmResult> {
    let k = prior.k();
    if k < 2 {
        return Err(invalid!("k must be at least 2"));
    }
    if adjacency.n_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    if let InitAffinity::Given(p) = init {
        if p.k() != k {
            return Err(invalid!("initial affinity has k = {} but the prior has {k}", p.k()));
        }
    }
    let mut best: Option<EmResult> = None;
    for start in 0..config.n_starts.max(1) {
        let start_seed = derive_seed(config.bp.seed, start as u64);
        let fit = fit_with_restarts(adjacency, prior, init, config, start_seed)?;
        let better = match &best {
            None => true,
            Some(b) => (fit.converged && !b.converged) || (fit.converged == b.converged && fit.free_energy < b.free_energy),
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one start"))
}

fn fit_with_restarts(
    adjacency: &Adjacency,
    prior: &Prior,
    init: &InitAffinity,
    config: &EmConfig,
    seed: u64,
) -> Result<EmResult> {
    let mut last = None;
    for attempt in 0..=config.max_restarts {
        let attempt_seed = derive_seed(seed, 0x1000 + attempt as u64);
        // Restarts always use a fresh random start.
        let start = if attempt == 0 { init.clone() } else { InitAffinity::Random };
        match fit_once(adjacency, prior, &start, config, attempt_seed)? {
            Outcome::Done(result) => return Ok(result),
            Outcome::Degenerate(result) => last = Some(result),
        }
    }
    let mut result = last.expect("at least one attempt");
    result.converged = false;
    Ok(result)
}

enum Outcome {
    Done(EmResult),
    Degenerate(EmResult),
}

fn random_affinity(adjacency: &Adjacency, k: usize, seed: u64) -> Result<AffinityMatrix> {
    let mut rng = seeded(seed);
    let a: f64 = 0.3 + 0.6 * rng.random::<f64>();
    let n = adjacency.n_nodes() as f64;
    let cbar = 2.0 * adjacency.n_edges() as f64 / n;
    let pbar = cbar / n;
    let p_in = (pbar * (1.0 + a * (k as f64 - 1.0))).min(1.0);
    let p_out = pbar * (1.0 - a);
    AffinityMatrix::planted(k, p_in, p_out)
}

fn fit_once(
    adjacency: &Adjacency,
    prior: &Prior,
    init: &InitAffinity,
    config: &EmConfig,
    seed: u64,
) -> Result<Outcome> {
    let k = prior.k();
    let mut affinity = match init {
        InitAffinity::Given(p) => p.clone(),
        InitAffinity::Random => random_affinity(adjacency, k, seed)?,
    };
    let bp_config = BpConfig {
        seed,
        ..config.bp.clone()
    };
    let n = adjacency.n_nodes() as f64;
    let mut warm = None;
    let mut rounds = 0;
    let mut converged = false;
    let mut result: BpResult;
    loop {
        rounds += 1;
        result = bp::run(adjacency, &affinity, prior, &bp_config, warm.take())?;
        let mass = result.marginals.group_mass();
        if mass.iter().any(|&m| m < 1.0) {
            let out = finish(affinity, result, rounds, false)?;
            return Ok(Outcome::Degenerate(out));
        }
        let updated = m_step(adjacency, &affinity, &result)?;
        let change = updated
            .entries()
            .iter()
            .zip(affinity.entries())
            .map(|(a, b)| (a - b).abs() * n)
            .fold(0.0, f64::max);
        affinity = updated;
        if change < config.tol {
            converged = result.converged;
            break;
        }
        if rounds >= config.max_rounds {
            break;
        }
        if affinity.entries().iter().all(|&p| p <= 0.0) {
            break;
        }
        warm = Some(result.messages);
    }
    Ok(Outcome::Done(finish(affinity, result, rounds, converged)?))
}

fn finish(affinity: AffinityMatrix, bp: BpResult, rounds: usize, converged: bool) -> Result<EmResult> {
    let a_hat = affinity.assortativity().unwrap_or(0.0);
    Ok(EmResult {
        assignments: map_assignments(&bp.marginals),
        affinity_hat: affinity,
        a_hat,
        marginals: bp.marginals,
        em_iterations: rounds,
        converged,
        free_energy: bp.free_energy,
    })
}

/// `p_ab = ⟨Σ A_ij δ(g_i,a) δ(g_j,b)⟩ / ⟨Σ δ(g_i,a) δ(g_j,b)⟩` over ordered
/// pairs. The numerator uses the Bethe pair marginals on edges,
/// `b_ab ∝ c_ab ψ^{i→j}_a ψ^{j→i}_b`; the denominator uses one-point marginals.
pub(crate) fn m_step(adjacency: &Adjacency, affinity: &AffinityMatrix, bp: &BpResult) -> Result<AffinityMatrix> {
    let k = affinity.k();
    let mut numer = vec![0.0; k * k];
    let mut pair = vec![0.0; k * k];
    for i in 0..adjacency.n_nodes() {
        for e in adjacency.slots(i) {
            let j = adjacency.target(e);
            if j < i {
                continue;
            }
            let out = bp.messages.get(e);
            let back = bp.messages.get(adjacency.reverse(e));
            let mut z = 0.0;
            for a in 0..k {
                for b in 0..k {
                    let v = affinity.get(a, b) * out[a] * back[b];
                    pair[a * k + b] = v;
                    z += v;
                }
            }
            if z <= 0.0 {
                continue;
            }
            for a in 0..k {
                for b in 0..k {
                    numer[a * k + b] += (pair[a * k + b] + pair[b * k + a]) / z;
                }
            }
        }
    }
    let mass = bp.marginals.group_mass();
    let mut self_pairs = vec![0.0; k * k];
    for row in bp.marginals.rows() {
        for a in 0..k {
            for b in 0..k {
                self_pairs[a * k + b] += row[a] * row[b];
            }
        }
    }
    let mut entries = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            let denom = mass[a] * mass[b] - self_pairs[a * k + b];
            entries[a * k + b] = if denom > 0.0 { (numer[a * k + b] / denom).clamp(0.0, 1.0) } else { 0.0 };
        }
    }
    // exact symmetry against rounding
    for a in 0..k {
        for b in a + 1..k {
            let v = 0.5 * (entries[a * k + b] + entries[b * k + a]);
            entries[a * k + b] = v;
            entries[b * k + a] = v;
        }
    }
    AffinityMatrix::new(k, entries)
}
