//! Statistical checks of the sampler against exact chain and density formulas.

use dsbm_core::generator::step_communities;
use dsbm_core::{generate, ModelParams, Prior};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two-step kernel `K²` of the label chain, `K = eta I + (1 − eta) 1 qᵀ`.
fn two_step_kernel(eta: f64, q: &[f64]) -> Vec<Vec<f64>> {
    let k = q.len();
    let kernel: Vec<Vec<f64>> = (0..k)
        .map(|a| (0..k).map(|b| if a == b { eta } else { 0.0 } + (1.0 - eta) * q[b]).collect())
        .collect();
    (0..k)
        .map(|a| (0..k).map(|b| (0..k).map(|c| kernel[a][c] * kernel[c][b]).sum()).collect())
        .collect()
}

#[test]
fn two_step_persistence_matches_chain() {
    let n = 100_000;
    for (eta, q) in [(0.6, vec![0.5, 0.5]), (0.8, vec![0.5, 0.3, 0.2]), (0.3, vec![0.25; 4])] {
        let prior = Prior::new(q.clone()).unwrap();
        let k2 = two_step_kernel(eta, &q);
        // Start from the stationary law, which is the prior.
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let start = step_communities(&vec![0; n], 0.0, &prior, &mut rng);
        let mid = step_communities(&start, eta, &prior, &mut rng);
        let end = step_communities(&mid, eta, &prior, &mut rng);
        let expected: f64 = (0..q.len()).map(|a| q[a] * k2[a][a]).sum();
        let same = start.iter().zip(&end).filter(|(a, b)| a == b).count() as f64 / n as f64;
        let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((same - expected).abs() < 3.0 * sigma, "eta {eta}: {same} vs {expected}");
    }
}

#[test]
fn uniform_labels_stay_uniform() {
    let k = 4;
    let n = 100_000;
    let params = ModelParams::new(n, 6, k, 0.5, 2.0, 0.5, 0.7).unwrap();
    let out = generate(&params, 9).unwrap();
    // 99.9% quantile of chi-square with 3 degrees of freedom.
    let critical = 16.266;
    for row in out.planted.rows() {
        let mut counts = vec![0.0; k];
        for &g in row {
            counts[g] += 1.0;
        }
        let expected = n as f64 / k as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expected) * (c - expected) / expected).sum();
        assert!(chi2 < critical, "chi2 {chi2}");
    }
}

#[test]
fn edge_density_is_preserved() {
    let n = 2000;
    let cbar = 8.0;
    let pairs = (n * (n - 1) / 2) as f64;
    let pbar = cbar / n as f64;
    let sigma = (pairs * pbar * (1.0 - pbar)).sqrt();
    for (xi, eta) in [(0.0, 0.5), (0.6, 0.8), (0.9, 0.9)] {
        let params = ModelParams::new(n, 15, 2, 0.7, cbar, xi, eta).unwrap();
        let out = generate(&params, 17).unwrap();
        for snap in out.network.snapshots() {
            let e = snap.n_edges() as f64;
            assert!((e - pairs * pbar).abs() < 3.0 * sigma, "xi {xi}: {e} edges vs {}", pairs * pbar);
        }
    }
}
