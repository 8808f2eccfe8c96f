//! The lagged snapshot dynamic pipeline.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::TemporalNetwork;
use crate::labels::AssignmentSequence;
use crate::params::{affinity_from_assortativity, AffinityMatrix, Prior};
use crate::rng::derive_seed;
use crate::sbm::{em_fit, EmConfig, InitAffinity};
use crate::theory::{lag_factor, optimal_lag, Horizon};

use super::align::{align_labels, Alignment};
use super::counts::{transition_counts_masked, TransitionCounts};
use super::estimate::{estimate_eta, estimate_xi, Clamp};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LsdConfig {
    /// Per-snapshot EM settings; `em.bp.seed` is the base seed and snapshot
    /// `t` runs with `derive_seed(base, t)`.
    pub em: EmConfig,
}

/// Static inference on one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFit {
    pub assignments: Vec<usize>,
    pub affinity: Option<AffinityMatrix>,
    pub a_star: Option<f64>,
    pub converged: bool,
}

impl SnapshotFit {
    fn failed(n: usize) -> Self {
        Self {
            assignments: vec![0; n],
            affinity: None,
            a_star: None,
            converged: false,
        }
    }
}

/// Runs EM on snapshot `t`. Failures are recorded, not returned.
pub fn fit_snapshot(network: &TemporalNetwork, t: usize, prior: &Prior, config: &LsdConfig) -> SnapshotFit {
    let mut em = config.em.clone();
    em.bp.seed = derive_seed(config.em.bp.seed, t as u64);
    let adjacency = network.snapshot(t).adjacency(network.n_nodes());
    match em_fit(&adjacency, prior, &InitAffinity::Random, &em) {
        Ok(fit) => SnapshotFit {
            a_star: Some(fit.a_hat),
            converged: fit.converged,
            affinity: Some(fit.affinity_hat),
            assignments: fit.assignments,
        },
        Err(_) => SnapshotFit::failed(network.n_nodes()),
    }
}

/// Per-snapshot static results, one entry per snapshot `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSweep {
    pub k: usize,
    pub raw: Vec<Vec<usize>>,
    /// `aligned[t][i] = permutations[t][raw[t][i]]`.
    pub aligned: Vec<Vec<usize>>,
    pub permutations: Vec<Vec<usize>>,
    pub a_star: Vec<Option<f64>>,
    pub affinities: Vec<Option<AffinityMatrix>>,
    pub converged: Vec<bool>,
}

impl SnapshotSweep {
    pub fn n_snapshots(&self) -> usize {
        self.raw.len()
    }

    pub fn n_failed(&self) -> usize {
        self.converged.iter().filter(|&&c| !c).count()
    }
}

/// Assembles a sweep from per-snapshot fits given in time order.
pub fn sweep_from_fits(fits: Vec<SnapshotFit>, k: usize) -> Result<SnapshotSweep> {
    if fits.is_empty() {
        return Err(Error::InvalidParameter("no snapshots to sweep".into()));
    }
    let mut raw = Vec::with_capacity(fits.len());
    let mut a_star = Vec::with_capacity(fits.len());
    let mut affinities = Vec::with_capacity(fits.len());
    let mut converged = Vec::with_capacity(fits.len());
    for fit in fits {
        raw.push(fit.assignments);
        a_star.push(fit.a_star);
        affinities.push(fit.affinity);
        converged.push(fit.converged);
    }
    let Alignment { rows, permutations } = align_labels(&raw, k)?;
    Ok(SnapshotSweep {
        k,
        raw,
        aligned: rows,
        permutations,
        a_star,
        affinities,
        converged,
    })
}

/// Independent static inference on every snapshot, then label alignment.
pub fn snapshot_sweep(network: &TemporalNetwork, prior: &Prior, config: &LsdConfig) -> Result<SnapshotSweep> {
    let fits = (0..network.n_snapshots())
        .map(|t| fit_snapshot(network, t, prior, config))
        .collect();
    sweep_from_fits(fits, prior.k())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LsdFlags {
    pub eta_saturated: bool,
    pub xi_clamped: Option<Clamp>,
    pub affinity_perturbed: bool,
    /// The estimated lag reached the horizon and was clamped to `T − 1`.
    pub lag_exceeds_horizon: bool,
    /// The corrected assortativity exceeded one and was clamped.
    pub a_hat_clamped: bool,
    pub failed_snapshots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsdResult {
    pub eta_hat: f64,
    pub xi_hat: f64,
    /// ξ̂ from the first pass, computed with the uncorrected assortativity.
    pub xi_first_pass: f64,
    pub tau_star_hat: usize,
    /// Mean effective assortativity over valid snapshots after burn-in.
    pub a_star_hat: f64,
    pub a_hat: f64,
    /// `corrected[t] = aligned[t + τ̂*]` for `t ≤ T − τ̂*`, `None` beyond.
    pub corrected: Vec<Option<Vec<usize>>>,
    pub burn_in: usize,
    pub mean_degree: f64,
    pub flags: LsdFlags,
    pub sweep: SnapshotSweep,
    pub counts: TransitionCounts,
}

impl LsdResult {
    /// Last time with a corrected assignment; the window is `0..=validity_end`.
    pub fn validity_end(&self) -> usize {
        self.corrected.len() - 1 - self.tau_star_hat
    }

    /// Corrected assignments restricted to the validity window.
    pub fn corrected_sequence(&self) -> Result<AssignmentSequence> {
        let rows = self.corrected.iter().flatten().cloned().collect();
        AssignmentSequence::new(self.sweep.k, rows)
    }
}

struct Correction {
    burn_in: usize,
    a_star: f64,
    tau: usize,
    a_hat: f64,
    lag_clamped: bool,
    a_clamped: bool,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn correct(sweep: &SnapshotSweep, eta: f64, xi: f64, n_steps: usize) -> Result<Correction> {
    let decay = 1.0 - xi * eta * eta;
    let burn_in = libm::ceil(5.0 / decay).min((n_steps / 2) as f64) as usize;
    let valid_a = |from: usize| {
        mean(
            sweep.a_star[from..]
                .iter()
                .zip(&sweep.converged[from..])
                .filter_map(|(a, &ok)| if ok { *a } else { None }),
        )
    };
    let a_star = valid_a(burn_in)
        .or_else(|| valid_a(0))
        .ok_or(Error::SweepFailed {
            failed: sweep.n_failed(),
            total: sweep.n_snapshots(),
        })?
        .clamp(0.0, 1.0);
    let mut tau = optimal_lag(xi, eta, Horizon::Asymptotic)?.tau_star;
    let lag_clamped = tau >= n_steps;
    if lag_clamped {
        tau = n_steps - 1;
    }
    let raw = a_star / lag_factor(xi, eta, tau);
    Ok(Correction {
        burn_in,
        a_star,
        tau,
        a_hat: raw.min(1.0),
        lag_clamped,
        a_clamped: raw > 1.0,
    })
}

/// Persistence estimation and lag correction on a finished sweep.
pub fn lsd_from_sweep(network: &TemporalNetwork, sweep: SnapshotSweep, prior: &Prior) -> Result<LsdResult> {
    let n_steps = network.n_steps();
    if n_steps == 0 {
        return Err(Error::NoTransitions);
    }
    if sweep.n_snapshots() != network.n_snapshots() || sweep.k != prior.k() {
        return Err(Error::InvalidParameter("sweep does not match the network or prior".into()));
    }
    let failed = sweep.n_failed();
    if 2 * failed > sweep.n_snapshots() {
        return Err(Error::SweepFailed {
            failed,
            total: sweep.n_snapshots(),
        });
    }
    let k = prior.k();
    let n = network.n_nodes();
    let counts = transition_counts_masked(network, &sweep.aligned, k, Some(&sweep.converged))?;
    if counts.transitions == 0 {
        return Err(Error::NoTransitions);
    }
    let eta = estimate_eta(&counts, prior)?;
    let cbar = network.mean_degree();

    let a_all = mean(
        sweep
            .a_star
            .iter()
            .zip(&sweep.converged)
            .filter_map(|(a, &ok)| if ok { *a } else { None }),
    )
    .unwrap_or(0.0)
    .clamp(0.0, 1.0);
    let first = estimate_xi(&counts, &affinity_from_assortativity(a_all, k, cbar, n)?)?;
    let first_pass = correct(&sweep, eta.value, first.value, n_steps)?;

    let xi = estimate_xi(&counts, &affinity_from_assortativity(first_pass.a_hat, k, cbar, n)?)?;
    let fix = correct(&sweep, eta.value, xi.value, n_steps)?;

    let corrected = (0..=n_steps)
        .map(|t| (t + fix.tau <= n_steps).then(|| sweep.aligned[t + fix.tau].clone()))
        .collect();
    Ok(LsdResult {
        eta_hat: eta.value,
        xi_hat: xi.value,
        xi_first_pass: first.value,
        tau_star_hat: fix.tau,
        a_star_hat: fix.a_star,
        a_hat: fix.a_hat,
        corrected,
        burn_in: fix.burn_in,
        mean_degree: cbar,
        flags: LsdFlags {
            eta_saturated: eta.saturated,
            xi_clamped: xi.clamped,
            affinity_perturbed: xi.perturbed_affinity,
            lag_exceeds_horizon: fix.lag_clamped,
            a_hat_clamped: fix.a_clamped,
            failed_snapshots: failed,
        },
        sweep,
        counts,
    })
}

/// Sweep, persistence estimation and lag correction in one call.
pub fn lsd_run(network: &TemporalNetwork, prior: &Prior, config: &LsdConfig) -> Result<LsdResult> {
    if network.n_steps() == 0 {
        return Err(Error::NoTransitions);
    }
    let sweep = snapshot_sweep(network, prior, config)?;
    lsd_from_sweep(network, sweep, prior)
}
