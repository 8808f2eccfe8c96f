//! Closed forms for single-snapshot and time-lagged inference.
//!
//! All quantities are for the uniform prior. Conditioned on the labels at
//! time `t - τ`, the links of `A^t` follow a static planted partition whose
//! assortativity is `a` times a factor depending on `(xi, eta, t, τ)` only.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Below this gap `|eta² − xi|` the lag sum uses its analytic limit.
pub const LIMIT_BRANCH_TOL: f64 = 1e-9;
/// Hard cap on the asymptotic lag scan.
pub const MAX_ASYMPTOTIC_LAG: usize = 10_000;
/// The asymptotic scan stops once the profile decays below this value.
pub const PROFILE_FLOOR: f64 = 1e-12;

/// Observation time: a finite `t` or the `t → ∞` limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Horizon {
    Finite(usize),
    Asymptotic,
}

/// Lagged assortativity profile `a^(t,τ)` for `a = 1`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LagProfile {
    pub horizon: Horizon,
    /// `values[τ]`, starting at the non-lagged value.
    pub values: Vec<f64>,
    /// Smallest maximizing lag.
    pub tau_star: usize,
    pub a_star: f64,
    /// `eta² xi / (1 − xi)`, infinite at `xi = 1`.
    pub delta: f64,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid!("{name} must lie in [0, 1], got {v}"))
    }
}

fn check(a: f64, xi: f64, eta: f64) -> Result<()> {
    check_unit("a", a)?;
    check_unit("xi", xi)?;
    check_unit("eta", eta)
}

#[inline]
fn powu(x: f64, n: usize) -> f64 {
    libm::pow(x, n as f64)
}

/// `(eta²^τ − xi^τ) / (eta² − xi)`, with the limit `τ xi^(τ−1)` near the
/// removable singularity.
fn lag_sum(eta2: f64, xi: f64, tau: usize) -> f64 {
    if tau == 0 {
        return 0.0;
    }
    if (eta2 - xi).abs() < LIMIT_BRANCH_TOL {
        tau as f64 * powu(xi, tau - 1)
    } else {
        (powu(eta2, tau) - powu(xi, tau)) / (eta2 - xi)
    }
}

/// Factor `ε^t` with `a^t = a ε^t`, written as `(1 − xi) Σ_{l<t} r^l + r^t`
/// with `r = xi eta²`, which stays finite at `r = 1`.
fn single_snapshot_factor(xi: f64, eta: f64, t: usize) -> f64 {
    let r = xi * eta * eta;
    let rt = powu(r, t);
    let geometric = if (1.0 - r).abs() < 1e-12 {
        t as f64
    } else {
        (1.0 - rt) / (1.0 - r)
    };
    (1.0 - xi) * geometric + rt
}

/// Effective assortativity `a^t` of a single snapshot.
pub fn effective_assortativity(a: f64, xi: f64, eta: f64, horizon: Horizon) -> Result<f64> {
    check(a, xi, eta)?;
    match horizon {
        Horizon::Finite(t) => Ok(a * single_snapshot_factor(xi, eta, t)),
        Horizon::Asymptotic => {
            let r = xi * eta * eta;
            if r >= 1.0 {
                return Err(invalid!("xi eta^2 = 1 has no asymptotic limit (frozen model)"));
            }
            Ok(a * (1.0 - xi) / (1.0 - r))
        }
    }
}

/// Lagged assortativity `a^(t,τ)`: the effective assortativity of `A^t` with
/// respect to the labels at time `t − τ`.
pub fn lagged_assortativity(a: f64, xi: f64, eta: f64, t: usize, tau: usize) -> Result<f64> {
    check(a, xi, eta)?;
    if tau > t {
        return Err(invalid!("lag {tau} exceeds observation time {t}"));
    }
    let eta2 = eta * eta;
    let base = powu(xi, tau) * single_snapshot_factor(xi, eta, t - tau);
    Ok(a * (base + (1.0 - xi) * eta2 * lag_sum(eta2, xi, tau)))
}

/// `t → ∞` limit of [`lagged_assortativity`].
pub fn asymptotic_lagged(a: f64, xi: f64, eta: f64, tau: usize) -> Result<f64> {
    check(a, xi, eta)?;
    let eta2 = eta * eta;
    if xi * eta2 >= 1.0 {
        return Err(invalid!("xi eta^2 = 1 has no asymptotic limit (frozen model)"));
    }
    Ok(a * lag_factor(xi, eta, tau))
}

/// Ratio `a^(τ) / a` in the asymptotic regime; the factor that the LSD
/// correction divides out. Caller guarantees `xi eta² < 1`.
pub fn lag_factor(xi: f64, eta: f64, tau: usize) -> f64 {
    let eta2 = eta * eta;
    powu(xi, tau) * (1.0 - xi) / (1.0 - xi * eta2) + (1.0 - xi) * eta2 * lag_sum(eta2, xi, tau)
}

/// `δ = eta² xi / (1 − xi)`; the asymptotic optimal lag is positive iff `δ > 1`.
pub fn delta(xi: f64, eta: f64) -> Result<f64> {
    check_unit("xi", xi)?;
    check_unit("eta", eta)?;
    if xi >= 1.0 {
        return Err(invalid!("delta is undefined at xi = 1"));
    }
    Ok(eta * eta * xi / (1.0 - xi))
}

/// Scans the lag profile (with `a = 1`) and returns the maximizing lag.
///
/// For a finite horizon the scan covers `τ = 0..=t`. In the asymptotic case it
/// runs until the profile is decreasing and below [`PROFILE_FLOOR`], or up to
/// [`MAX_ASYMPTOTIC_LAG`].
pub fn optimal_lag(xi: f64, eta: f64, horizon: Horizon) -> Result<LagProfile> {
    check_unit("xi", xi)?;
    check_unit("eta", eta)?;
    let mut values = Vec::new();
    match horizon {
        Horizon::Finite(t) => {
            for tau in 0..=t {
                values.push(lagged_assortativity(1.0, xi, eta, t, tau)?);
            }
        }
        Horizon::Asymptotic => {
            if xi * eta * eta >= 1.0 {
                return Err(invalid!("xi eta^2 = 1 has no asymptotic limit (frozen model)"));
            }
            for tau in 0..=MAX_ASYMPTOTIC_LAG {
                let v = lag_factor(xi, eta, tau);
                let decaying = tau > 0 && v <= values[tau - 1];
                values.push(v);
                if decaying && v < PROFILE_FLOOR {
                    break;
                }
            }
        }
    }
    let (mut tau_star, mut a_star) = (0, values[0]);
    for (tau, &v) in values.iter().enumerate().skip(1) {
        if v > a_star {
            tau_star = tau;
            a_star = v;
        }
    }
    let delta = if xi < 1.0 { eta * eta * xi / (1.0 - xi) } else { f64::INFINITY };
    Ok(LagProfile {
        horizon,
        values,
        tau_star,
        a_star,
        delta,
    })
}

/// Which detectability line to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DetectabilityMode {
    /// `c̄^(-1/2)`.
    Static,
    /// Asymptotic single-snapshot line `a (1 − xi) / (1 − xi eta²) = c̄^(-1/2)`.
    SingleSnapshot,
    /// Lag-corrected line `a*_∞(xi, eta) = c̄^(-1/2)`.
    LagCorrected,
}

/// Smallest assortativity `a` that is detectable under `mode`.
pub fn detectability_threshold(cbar: f64, xi: f64, eta: f64, mode: DetectabilityMode) -> Result<f64> {
    if !(cbar.is_finite() && cbar > 0.0) {
        return Err(invalid!("mean degree must be positive, got {cbar}"));
    }
    let a_c = 1.0 / libm::sqrt(cbar);
    match mode {
        DetectabilityMode::Static => Ok(a_c),
        DetectabilityMode::SingleSnapshot | DetectabilityMode::LagCorrected if xi >= 1.0 => {
            Err(invalid!("asymptotic detectability is undefined at xi = 1"))
        }
        DetectabilityMode::SingleSnapshot => {
            check_unit("xi", xi)?;
            check_unit("eta", eta)?;
            Ok(a_c * (1.0 - xi * eta * eta) / (1.0 - xi))
        }
        DetectabilityMode::LagCorrected => {
            let profile = optimal_lag(xi, eta, Horizon::Asymptotic)?;
            if profile.a_star <= 0.0 {
                return Err(Error::InvalidParameter("degenerate lag profile".into()));
            }
            Ok(a_c / profile.a_star)
        }
    }
}
