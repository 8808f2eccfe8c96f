//! Persistence estimators from transition frequencies.

use crate::error::{Error, Result};
use crate::params::{AffinityMatrix, Prior};
use crate::roots::bisect;

use super::counts::TransitionCounts;

/// Upper end of the search interval for both persistences.
pub const PERSISTENCE_CAP: f64 = 1.0 - 1e-12;
const ROOT_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EtaEstimate {
    pub value: f64,
    /// No label ever changed, so the estimate sits at the cap.
    pub saturated: bool,
}

/// Which end of `(0, 1)` the ξ estimate was clamped to, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Clamp {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct XiEstimate {
    pub value: f64,
    pub clamped: Option<Clamp>,
    /// Some affinity entry was 0 or 1 and was nudged by 1e-12.
    pub perturbed_affinity: bool,
}

/// Left side of the η equation:
/// `Σ_a (1 − q_a) / (η + (1 − η) q_a) f_same[a] − f_diff / (1 − η)`.
pub fn eta_score(eta: f64, f_same: &[f64], f_diff: f64, prior: &Prior) -> f64 {
    let kept: f64 = f_same
        .iter()
        .zip(prior.weights())
        .map(|(&f, &q)| if f == 0.0 { 0.0 } else { (1.0 - q) / (eta + (1.0 - eta) * q) * f })
        .sum();
    kept - f_diff / (1.0 - eta)
}

/// Solves the η equation by bisection on `(0, 1 − 1e-12)`.
pub fn solve_eta_bisection(counts: &TransitionCounts, prior: &Prior) -> Result<f64> {
    check_k(counts, prior.k())?;
    bisect(
        |eta| eta_score(eta, &counts.f_same, counts.f_diff, prior),
        0.0,
        PERSISTENCE_CAP,
        ROOT_TOL,
    )
    .ok_or(Error::NoSignChange)
}

fn check_k(counts: &TransitionCounts, k: usize) -> Result<()> {
    if counts.k() != k {
        return Err(Error::InvalidParameter(alloc::format!(
            "counts have k = {} but {} groups were given",
            counts.k(),
            k
        )));
    }
    Ok(())
}

/// Community persistence estimate. Uniform priors use the closed form
/// `(k f_s − 1) / (k − 1)` clamped to `[0, 1 − 1e-12]`.
pub fn estimate_eta(counts: &TransitionCounts, prior: &Prior) -> Result<EtaEstimate> {
    check_k(counts, prior.k())?;
    if counts.f_diff <= 0.0 {
        return Ok(EtaEstimate {
            value: PERSISTENCE_CAP,
            saturated: true,
        });
    }
    let value = if prior.is_uniform() {
        let k = prior.k() as f64;
        ((k * counts.f_same_total() - 1.0) / (k - 1.0)).clamp(0.0, PERSISTENCE_CAP)
    } else {
        solve_eta_bisection(counts, prior)?
    };
    Ok(EtaEstimate {
        value,
        saturated: false,
    })
}

/// Left side of the ξ equation,
/// `Σ_{ab} Σ_{ε'ε} (δ − B) / (ξ δ + (1 − ξ) B) m^{ab}_{ε'→ε}` with
/// `B = p_ab^ε (1 − p_ab)^{1−ε}`. Non-increasing in `ξ`.
pub fn xi_score(xi: f64, counts: &TransitionCounts, affinity: &AffinityMatrix) -> f64 {
    let k = counts.k();
    let mut total = 0.0;
    for a in 0..k {
        for b in 0..k {
            let p = affinity.get(a, b);
            for prev in [false, true] {
                for now in [false, true] {
                    let m = counts.m(a, b, prev, now);
                    if m == 0.0 {
                        continue;
                    }
                    let fresh = if now { p } else { 1.0 - p };
                    let kept = if prev == now { 1.0 } else { 0.0 };
                    total += (kept - fresh) / (xi * kept + (1.0 - xi) * fresh) * m;
                }
            }
        }
    }
    total
}

/// Link persistence estimate by bisection on `(0, 1 − 1e-12)`; clamps to the
/// nearer end when the score does not change sign.
pub fn estimate_xi(counts: &TransitionCounts, affinity: &AffinityMatrix) -> Result<XiEstimate> {
    check_k(counts, affinity.k())?;
    let k = affinity.k();
    let eps = 1e-12;
    let mut perturbed = false;
    let mut entries = affinity.entries().to_vec();
    for v in &mut entries {
        if *v <= 0.0 {
            *v = eps;
            perturbed = true;
        } else if *v >= 1.0 {
            *v = 1.0 - eps;
            perturbed = true;
        }
    }
    let affinity = AffinityMatrix::new(k, entries)?;
    let score = |xi: f64| xi_score(xi, counts, &affinity);
    let (lo, hi) = (0.0, PERSISTENCE_CAP);
    let (f_lo, f_hi) = (score(lo), score(hi));
    let (value, clamped) = if f_lo <= 0.0 {
        (lo, Some(Clamp::Lower))
    } else if f_hi >= 0.0 {
        (hi, Some(Clamp::Upper))
    } else {
        (bisect(score, lo, hi, ROOT_TOL).ok_or(Error::NoSignChange)?, None)
    };
    Ok(XiEstimate {
        value,
        clamped,
        perturbed_affinity: perturbed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn counts_with(f_same: Vec<f64>, f_diff: f64) -> TransitionCounts {
        let k = f_same.len();
        TransitionCounts::from_parts(k, vec![0.0; 4 * k * k], f_same, f_diff, 1).unwrap()
    }

    #[test]
    fn eta_examples() {
        let prior = Prior::uniform(2);
        let c = counts_with(vec![0.4375, 0.4375], 0.125);
        assert!((estimate_eta(&c, &prior).unwrap().value - 0.75).abs() < 1e-12);
        let c = counts_with(vec![0.25, 0.25], 0.5);
        assert_eq!(estimate_eta(&c, &prior).unwrap().value, 0.0);
        let c = counts_with(vec![0.5, 0.5], 0.0);
        let e = estimate_eta(&c, &prior).unwrap();
        assert!(e.saturated);
        assert!(e.value > 0.999_999);
    }

    #[test]
    fn eta_bisection_for_skewed_prior() {
        // Exact stationary frequencies of the chain with eta = 0.6, q = (0.7, 0.3).
        let (eta, q) = (0.6, [0.7, 0.3]);
        let f_same: Vec<f64> = q.iter().map(|&qa| qa * (eta + (1.0 - eta) * qa)).collect();
        let f_diff = 1.0 - f_same.iter().sum::<f64>();
        let prior = Prior::new(q.to_vec()).unwrap();
        let est = estimate_eta(&counts_with(f_same, f_diff), &prior).unwrap();
        assert!((est.value - eta).abs() < 1e-9);
    }

    #[test]
    fn eta_without_root_is_an_error() {
        // Labels change more often than memoryless: no root in [0, 1).
        let prior = Prior::new(vec![0.7, 0.3]).unwrap();
        let c = counts_with(vec![0.05, 0.05], 0.9);
        assert!(matches!(estimate_eta(&c, &prior), Err(Error::NoSignChange)));
    }

    #[test]
    fn frozen_links_push_xi_to_one() {
        let mut m = vec![0.0; 16];
        // only 0->0 and 1->1 transitions
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            m[((a * 2 + b) * 2) * 2] = 0.24;
            m[((a * 2 + b) * 2 + 1) * 2 + 1] = 0.01;
        }
        let c = TransitionCounts::from_parts(2, m, vec![0.5, 0.5], 0.0, 1).unwrap();
        let aff = AffinityMatrix::planted(2, 0.03, 0.01).unwrap();
        let est = estimate_xi(&c, &aff).unwrap();
        assert_eq!(est.clamped, Some(Clamp::Upper));
        assert!(est.value > 0.999_999);
    }

    #[test]
    fn degenerate_affinity_is_perturbed() {
        let mut m = vec![0.0; 16];
        m[0] = 0.5;
        m[15] = 0.5;
        let c = TransitionCounts::from_parts(2, m, vec![0.5, 0.5], 0.0, 1).unwrap();
        let aff = AffinityMatrix::planted(2, 0.05, 0.0).unwrap();
        assert!(estimate_xi(&c, &aff).unwrap().perturbed_affinity);
    }
}
