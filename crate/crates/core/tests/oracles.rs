//! Brute-force and closed-form oracles for the counting, BP and estimation code.

use dsbm_core::lsd::{
    estimate_eta, estimate_xi, solve_eta_bisection, transition_counts, Clamp, TransitionCounts,
};
use dsbm_core::sbm::{bp_marginals, BpConfig};
use dsbm_core::{generate, AffinityMatrix, ModelParams, Prior, Snapshot};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_force_counts(network: &dsbm_core::TemporalNetwork, rows: &[Vec<usize>], k: usize) -> (Vec<u64>, Vec<u64>, u64) {
    let n = network.n_nodes();
    let mut m = vec![0u64; 4 * k * k];
    let mut same = vec![0u64; k];
    let mut diff = 0;
    for t in 1..=network.n_steps() {
        for i in 0..n {
            if rows[t][i] == rows[t - 1][i] {
                same[rows[t][i]] += 1;
            } else {
                diff += 1;
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                let prev = network.snapshot(t - 1).contains(i, j) as usize;
                let now = network.snapshot(t).contains(i, j) as usize;
                let (a, b) = (rows[t][i], rows[t][j]);
                m[((a * k + b) * 2 + prev) * 2 + now] += 1;
            }
        }
    }
    (m, same, diff)
}

#[test]
fn sparse_counts_equal_brute_force() {
    let mut cases = 0;
    for seed in 0..40u64 {
        let n = 4 + (seed as usize % 7);
        let t = 1 + (seed as usize % 5);
        let k = 2 + (seed as usize % 2);
        let xi = [0.0, 0.3, 0.7, 1.0][seed as usize % 4];
        let params = ModelParams::new(n, t, k, 0.6, 0.45 * n as f64, xi, 0.5).unwrap();
        let Ok(out) = generate(&params, seed) else { continue };
        cases += 1;
        let rows = out.planted.rows();
        let counts = transition_counts(&out.network, rows, k).unwrap();
        let (m, same, diff) = brute_force_counts(&out.network, rows, k);
        let pair_norm = (t * n * (n - 1)) as f64;
        let node_norm = (t * n) as f64;
        for a in 0..k {
            for b in 0..k {
                for prev in 0..2 {
                    for now in 0..2 {
                        let c = m[((a * k + b) * 2 + prev) * 2 + now];
                        assert_eq!(counts.m(a, b, prev == 1, now == 1), c as f64 / pair_norm);
                    }
                }
            }
            assert_eq!(counts.f_same[a], same[a] as f64 / node_norm);
        }
        assert_eq!(counts.f_diff, diff as f64 / node_norm);
    }
    assert!(cases >= 30);
}

/// Exact posterior marginals `P(g_i = r | A)` of a static SBM with the full
/// (non-sparse) likelihood, by enumeration of all `2^N` labelings.
fn exact_marginals(n: usize, edges: &Snapshot, p: &AffinityMatrix, prior: &Prior) -> Vec<[f64; 2]> {
    enumerate(n, |g| {
        let mut log_w: f64 = (0..n).map(|i| prior[g(i)].ln()).sum();
        for i in 0..n {
            for j in i + 1..n {
                let pij = p.get(g(i), g(j));
                log_w += if edges.contains(i, j) { pij.ln() } else { (1.0 - pij).ln() };
            }
        }
        log_w
    })
}

/// Exact marginals of the sparse model that BP targets: edge factors `c_ab`
/// and a fixed external field `h` on every node.
fn exact_field_marginals(n: usize, edges: &Snapshot, c: &[f64], h: [f64; 2], prior: &Prior) -> Vec<[f64; 2]> {
    enumerate(n, |g| {
        let mut log_w: f64 = (0..n).map(|i| prior[g(i)].ln() - h[g(i)]).sum();
        for &(i, j) in edges.edges() {
            log_w += c[g(i as usize) * 2 + g(j as usize)].ln();
        }
        log_w
    })
}

fn enumerate(n: usize, log_weight: impl Fn(&dyn Fn(usize) -> usize) -> f64) -> Vec<[f64; 2]> {
    let mut weights = Vec::with_capacity(1 << n);
    for mask in 0u32..(1 << n) {
        let g = move |i: usize| ((mask >> i) & 1) as usize;
        weights.push(log_weight(&g));
    }
    let max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut marg = vec![[0.0; 2]; n];
    let mut z = 0.0;
    for (mask, lw) in weights.iter().enumerate() {
        let w = (lw - max).exp();
        z += w;
        for (i, row) in marg.iter_mut().enumerate() {
            row[(mask >> i) & 1] += w;
        }
    }
    for row in &mut marg {
        row[0] /= z;
        row[1] /= z;
    }
    marg
}

fn is_forest(n: usize, edges: &Snapshot) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(i, j) in edges.edges() {
        let (ri, rj) = (find(&mut parent, i as usize), find(&mut parent, j as usize));
        if ri == rj {
            return false;
        }
        parent[ri] = rj;
    }
    true
}

#[test]
fn bp_matches_exhaustive_posterior_on_sparse_forests() {
    let n = 12;
    let prior = Prior::new(vec![0.65, 0.35]).unwrap();
    let p = AffinityMatrix::new(2, vec![0.05, 0.005, 0.005, 0.05]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut tested, mut excluded, mut worst) = (0, 0, 0.0f64);
    while tested < 25 {
        let labels: Vec<usize> = (0..n).map(|_| (rng.random::<f64>() >= 0.65) as usize).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p.get(labels[i], labels[j]) {
                    edges.push((i, j));
                }
            }
        }
        let snap = Snapshot::from_edges(n, edges).unwrap();
        if snap.is_empty() || !is_forest(n, &snap) {
            excluded += 1;
            continue;
        }
        tested += 1;
        let exact = exact_marginals(n, &snap, &p, &prior);
        let config = BpConfig { convergence_tol: 1e-12, max_iterations: 2000, ..BpConfig::default() };
        let bp = bp_marginals(&snap.adjacency(n), &p, &prior, &config).unwrap();
        assert!(bp.converged);
        for (i, row) in exact.iter().enumerate() {
            let diff = (bp.marginals.row(i)[0] - row[0]).abs();
            worst = worst.max(diff);
            assert!(diff < 0.05, "node {i}: bp {:?} exact {row:?}", bp.marginals.row(i));
        }
    }
    eprintln!("exhaustive vs bp: {tested} forests, {excluded} loopy or empty graphs excluded, worst gap {worst:.4}");
}

#[test]
fn bp_is_exact_on_trees_with_the_field_frozen() {
    let n = 12;
    let prior = Prior::new(vec![0.6, 0.4]).unwrap();
    let p = AffinityMatrix::new(2, vec![0.3, 0.05, 0.05, 0.2]).unwrap();
    let c: Vec<f64> = p.entries().iter().map(|v| v * n as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut tested = 0;
    while tested < 10 {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|_| rng.random::<f64>() < 0.15)
            .collect();
        let snap = Snapshot::from_edges(n, edges).unwrap();
        if snap.is_empty() || !is_forest(n, &snap) {
            continue;
        }
        tested += 1;
        let config = BpConfig { convergence_tol: 1e-14, max_iterations: 5000, ..BpConfig::default() };
        let bp = bp_marginals(&snap.adjacency(n), &p, &prior, &config).unwrap();
        assert!(bp.converged);
        let mut h = [0.0; 2];
        for (r, hr) in h.iter_mut().enumerate() {
            *hr = bp.marginals.rows().map(|m| (0..2).map(|s| c[s * 2 + r] * m[s]).sum::<f64>()).sum::<f64>()
                / n as f64;
        }
        let exact = exact_field_marginals(n, &snap, &c, h, &prior);
        for (i, row) in exact.iter().enumerate() {
            assert!((bp.marginals.row(i)[0] - row[0]).abs() < 1e-9, "node {i}");
        }
    }
}

proptest! {
    #[test]
    fn eta_closed_form_agrees_with_bisection(
        k in 2usize..6,
        raw in proptest::collection::vec(0.01f64..1.0, 6),
        signal in 0.02f64..0.98,
    ) {
        // f_s strictly above 1/k so that the root lies inside (0, 1).
        let kf = k as f64;
        let f_s = 1.0 / kf + signal * (1.0 - 1.0 / kf);
        let norm: f64 = raw[..k].iter().sum();
        let f_same: Vec<f64> = raw[..k].iter().map(|r| r / norm * f_s).collect();
        let counts = TransitionCounts::from_parts(k, vec![0.0; 4 * k * k], f_same, 1.0 - f_s, 1).unwrap();
        let prior = Prior::uniform(k);
        let closed = estimate_eta(&counts, &prior).unwrap().value;
        let bisected = solve_eta_bisection(&counts, &prior).unwrap();
        prop_assert!((closed - bisected).abs() < 1e-9, "{closed} vs {bisected}");
    }
}

/// Expected stationary transition frequencies of the model with uniform prior:
/// `P(labels (a, b) at t, link state prev at t − 1, now at t)`.
fn analytic_counts(k: usize, p: &AffinityMatrix, xi: f64, eta: f64) -> TransitionCounts {
    let pbar = p.mean();
    let eta2 = eta * eta;
    let mut m = vec![0.0; 4 * k * k];
    for a in 0..k {
        for b in 0..k {
            let pab = p.get(a, b);
            let stationary = (xi * (1.0 - eta2) * pbar + (1.0 - xi) * pab) / (1.0 - xi * eta2);
            let linked_before = eta2 * stationary + (1.0 - eta2) * pbar;
            for prev in 0..2 {
                let w_prev = if prev == 1 { linked_before } else { 1.0 - linked_before };
                for now in 0..2 {
                    let fresh = if now == 1 { pab } else { 1.0 - pab };
                    let keep = if prev == now { 1.0 } else { 0.0 };
                    m[((a * k + b) * 2 + prev) * 2 + now] =
                        w_prev * (xi * keep + (1.0 - xi) * fresh) / (k * k) as f64;
                }
            }
        }
    }
    let f_s = eta + (1.0 - eta) / k as f64;
    TransitionCounts::from_parts(k, m, vec![f_s / k as f64; k], 1.0 - f_s, 1).unwrap()
}

#[test]
fn analytic_counts_are_normalized() {
    let p = AffinityMatrix::planted(3, 0.05, 0.01).unwrap();
    let c = analytic_counts(3, &p, 0.4, 0.7);
    assert!((c.total_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn xi_root_is_recovered_from_expected_counts() {
    for k in [2usize, 3, 4] {
        for (p_in, p_out) in [(0.06, 0.004), (0.3, 0.1), (0.02, 0.02)] {
            let p = AffinityMatrix::planted(k, p_in, p_out).unwrap();
            for xi in [0.1, 0.5, 0.8, 0.95] {
                for eta in [0.0, 0.75, 1.0] {
                    let est = estimate_xi(&analytic_counts(k, &p, xi, eta), &p).unwrap();
                    assert!((est.value - xi).abs() < 1e-6, "k {k} p ({p_in},{p_out}) xi {xi}: {}", est.value);
                    assert_eq!(est.clamped, None);
                }
            }
        }
    }
}

#[test]
fn memoryless_links_give_xi_at_lower_endpoint() {
    let p = AffinityMatrix::planted(2, 0.06, 0.004).unwrap();
    let est = estimate_xi(&analytic_counts(2, &p, 0.0, 0.75), &p).unwrap();
    assert!(est.value < 1e-6);
    if est.value == 0.0 {
        assert_eq!(est.clamped, Some(Clamp::Lower));
    }
}
