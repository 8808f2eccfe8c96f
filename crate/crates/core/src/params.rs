//! Model parameters and the planted-partition affinity parametrization.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Tolerance on the sum of the prior entries.
const PRIOR_SUM_TOL: f64 = 1e-12;

/// Probability vector over the `k` groups.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct Prior(Vec<f64>);

impl Prior {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(invalid!("prior needs at least 2 groups, got {}", weights.len()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid!("prior entries must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(invalid!("prior entries sum to {total}, expected 1"));
        }
        Ok(Self(weights))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.k() as f64;
        self.0.iter().all(|w| (w - u).abs() <= PRIOR_SUM_TOL)
    }
}

impl core::ops::Index<usize> for Prior {
    type Output = f64;
    fn index(&self, r: usize) -> &f64 {
        &self.0[r]
    }
}

impl TryFrom<Vec<f64>> for Prior {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Prior::new(v)
    }
}

impl From<Prior> for Vec<f64> {
    fn from(p: Prior) -> Vec<f64> {
        p.0
    }
}

/// Generative parameters of the persistent dynamic SBM.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    /// Number of nodes `N`.
    pub n_nodes: usize,
    /// Number of transitions `T`; the sequence holds `T + 1` snapshots.
    pub n_steps: usize,
    /// Number of groups.
    pub k: usize,
    /// Assortativity `a` in `[0, 1]`.
    pub assortativity: f64,
    /// Mean degree `c̄`, so that the mean link probability is `c̄ / N`.
    pub mean_degree: f64,
    /// Link persistence `xi`.
    pub link_persistence: f64,
    /// Community persistence `eta`.
    pub community_persistence: f64,
    pub prior: Prior,
}

impl ModelParams {
    /// Uniform-prior parameters.
    pub fn new(
        n_nodes: usize,
        n_steps: usize,
        k: usize,
        assortativity: f64,
        mean_degree: f64,
        link_persistence: f64,
        community_persistence: f64,
    ) -> Result<Self> {
        let params = Self {
            n_nodes,
            n_steps,
            k,
            assortativity,
            mean_degree,
            link_persistence,
            community_persistence,
            prior: Prior::uniform(k.max(1)),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_prior(mut self, prior: Prior) -> Result<Self> {
        self.prior = prior;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(invalid!("n_nodes must be positive"));
        }
        if self.n_nodes > u32::MAX as usize {
            return Err(invalid!("n_nodes must fit in 32 bits"));
        }
        if self.k < 2 {
            return Err(invalid!("k must be at least 2, got {}", self.k));
        }
        if self.prior.k() != self.k {
            return Err(invalid!(
                "prior has {} entries but k = {}",
                self.prior.k(),
                self.k
            ));
        }
        check_unit("assortativity", self.assortativity)?;
        check_unit("link_persistence", self.link_persistence)?;
        check_unit("community_persistence", self.community_persistence)?;
        if !(self.mean_degree.is_finite() && self.mean_degree > 0.0) {
            return Err(invalid!("mean_degree must be positive, got {}", self.mean_degree));
        }
        // Rejects the dense regime.
        self.affinity().map(|_| ())
    }

    pub fn mean_link_probability(&self) -> f64 {
        self.mean_degree / self.n_nodes as f64
    }

    pub fn affinity(&self) -> Result<AffinityMatrix> {
        affinity_from_assortativity(self.assortativity, self.k, self.mean_degree, self.n_nodes)
    }
}

fn check_unit(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(invalid!("{name} must lie in [0, 1], got {value}"))
    }
}

/// Symmetric `k × k` matrix of link probabilities `p_ab`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffinityMatrix {
    k: usize,
    entries: Vec<f64>,
}

impl AffinityMatrix {
    /// Builds a matrix from row-major entries, checking symmetry and range.
    pub fn new(k: usize, entries: Vec<f64>) -> Result<Self> {
        if k < 1 || entries.len() != k * k {
            return Err(invalid!("affinity needs k*k = {} entries, got {}", k * k, entries.len()));
        }
        for a in 0..k {
            for b in 0..k {
                let v = entries[a * k + b];
                if !(0.0..=1.0).contains(&v) {
                    return Err(invalid!("affinity entry ({a},{b}) = {v} outside [0, 1]"));
                }
                let w = entries[b * k + a];
                if (v - w).abs() > 1e-12 * v.abs().max(w.abs()) {
                    return Err(invalid!("affinity is not symmetric at ({a},{b})"));
                }
            }
        }
        Ok(Self { k, entries })
    }

    /// Planted-partition matrix with `p_in` on the diagonal and `p_out` elsewhere.
    pub fn planted(k: usize, p_in: f64, p_out: f64) -> Result<Self> {
        let mut entries = vec![p_out; k * k];
        for a in 0..k {
            entries[a * k + a] = p_in;
        }
        Self::new(k, entries)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.k + b]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Least-squares projection on the planted-partition family: the mean of
    /// the diagonal and the mean of the off-diagonal entries.
    pub fn project_planted(&self) -> (f64, f64) {
        let k = self.k;
        let diag = (0..k).map(|a| self.get(a, a)).sum::<f64>() / k as f64;
        let mut off_sum = 0.0;
        for a in 0..k {
            for b in (0..k).filter(|&b| b != a) {
                off_sum += self.get(a, b);
            }
        }
        let off = if k > 1 { off_sum / (k * (k - 1)) as f64 } else { 0.0 };
        (diag, off)
    }

    /// Assortativity of the planted-partition projection.
    pub fn assortativity(&self) -> Result<f64> {
        let (p_in, p_out) = self.project_planted();
        assortativity_from_affinity(p_in, p_out, self.k)
    }

    /// Mean of all entries, which equals `p̄` under a uniform prior.
    pub fn mean(&self) -> f64 {
        self.entries.iter().sum::<f64>() / self.entries.len() as f64
    }
}

/// Planted-partition affinity `p = a k p̄ I + (1 - a) p̄ 1` with `p̄ = c̄ / N`.
pub fn affinity_from_assortativity(a: f64, k: usize, cbar: f64, n: usize) -> Result<AffinityMatrix> {
    if k < 2 {
        return Err(invalid!("k must be at least 2, got {k}"));
    }
    if n == 0 {
        return Err(invalid!("n must be positive"));
    }
    check_unit("assortativity", a)?;
    if !(cbar.is_finite() && cbar >= 0.0) {
        return Err(invalid!("mean degree must be non-negative, got {cbar}"));
    }
    let p_bar = cbar / n as f64;
    let p_in = p_bar * (1.0 + a * (k as f64 - 1.0));
    let p_out = p_bar * (1.0 - a);
    if p_in > 1.0 {
        return Err(Error::DenseRegime { value: p_in });
    }
    if p_out > 1.0 {
        return Err(Error::DenseRegime { value: p_out });
    }
    AffinityMatrix::planted(k, p_in, p_out)
}

/// Inverse of [`affinity_from_assortativity`] on planted-partition matrices.
pub fn assortativity_from_affinity(p_in: f64, p_out: f64, k: usize) -> Result<f64> {
    if p_in < 0.0 || p_out < 0.0 {
        return Err(invalid!("affinities must be non-negative"));
    }
    let denom = p_in + (k as f64 - 1.0) * p_out;
    if denom <= 0.0 {
        return Err(invalid!("p_in + (k-1) p_out must be positive"));
    }
    Ok((p_in - p_out) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn random_limit_is_flat() {
        let p = affinity_from_assortativity(0.0, 2, 10.0, 100).unwrap();
        for v in p.entries() {
            assert_relative_eq!(*v, 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn assortative_limit_is_diagonal() {
        let p = affinity_from_assortativity(1.0, 2, 10.0, 100).unwrap();
        assert_relative_eq!(p.get(0, 0), 0.2, epsilon = 1e-15);
        assert_relative_eq!(p.get(1, 1), 0.2, epsilon = 1e-15);
        assert_eq!(p.get(0, 1), 0.0);
    }

    #[test]
    fn half_assortative_entries() {
        let p = affinity_from_assortativity(0.5, 2, 10.0, 1000).unwrap();
        assert_relative_eq!(p.get(0, 0), 0.015, epsilon = 1e-15);
        assert_relative_eq!(p.get(0, 1), 0.005, epsilon = 1e-15);
        // mean degree under the uniform prior: N (p_in + p_out) / 2
        assert_relative_eq!(1000.0 * (0.015 + 0.005) / 2.0, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn dense_regime_rejected() {
        assert!(matches!(
            affinity_from_assortativity(1.0, 2, 60.0, 100),
            Err(Error::DenseRegime { .. })
        ));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(assortativity_from_affinity(0.1, 0.1, 2).unwrap(), 0.0);
        assert_eq!(assortativity_from_affinity(0.2, 0.0, 2).unwrap(), 1.0);
        assert_relative_eq!(
            assortativity_from_affinity(0.015, 0.005, 2).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(assortativity_from_affinity(0.0, 0.0, 2).is_err());
    }

    #[test]
    fn prior_validation() {
        assert!(Prior::new(vec![0.5, 0.5]).is_ok());
        assert!(Prior::new(vec![0.5, 0.6]).is_err());
        assert!(Prior::new(vec![1.5, -0.5]).is_err());
        assert!(Prior::new(vec![1.0]).is_err());
        assert!(Prior::uniform(4).is_uniform());
        assert!(!Prior::new(vec![0.7, 0.3]).unwrap().is_uniform());
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(ModelParams::new(100, 1, 1, 0.5, 10.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(100, 1, 2, 1.5, 10.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(100, 1, 2, 0.5, -1.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(0, 1, 2, 0.5, 10.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(10, 1, 2, 1.0, 9.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(100, 1, 2, 0.5, 10.0, 0.3, 0.9).is_ok());
    }

    #[test]
    fn projection_averages_blocks() {
        let p = AffinityMatrix::new(2, vec![0.3, 0.1, 0.1, 0.1]).unwrap();
        let (pin, pout) = p.project_planted();
        assert_relative_eq!(pin, 0.2, epsilon = 1e-15);
        assert_relative_eq!(pout, 0.1, epsilon = 1e-15);
        assert!(AffinityMatrix::new(2, vec![0.3, 0.1, 0.2, 0.1]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(a in 0.0f64..=1.0, k in 2usize..8, cbar in 0.1f64..20.0, n in 200usize..100_000) {
            let p = affinity_from_assortativity(a, k, cbar, n).unwrap();
            let back = p.assortativity().unwrap();
            prop_assert!((back - a).abs() < 1e-12);
        }

        #[test]
        fn mean_entry_is_pbar(a in 0.0f64..=1.0, k in 2usize..8, cbar in 0.1f64..20.0, n in 200usize..100_000) {
            let p = affinity_from_assortativity(a, k, cbar, n).unwrap();
            let pbar = cbar / n as f64;
            prop_assert!((p.mean() - pbar).abs() < 1e-12 * pbar.max(1e-300) * 10.0);
        }
    }
}
