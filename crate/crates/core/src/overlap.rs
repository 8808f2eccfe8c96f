//! Normalized overlap between assignments and exhaustive label matching.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::params::Prior;

/// Largest `k` for which the `k!` relabelings are enumerated.
pub const MAX_EXHAUSTIVE_K: usize = 8;

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Result<Vec<Vec<usize>>> {
    if k > MAX_EXHAUSTIVE_K {
        return Err(Error::TooManyGroups { k });
    }
    let mut current: Vec<usize> = (0..k).collect();
    let mut out = vec![current.clone()];
    while next_permutation(&mut current) {
        out.push(current.clone());
    }
    Ok(out)
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// `k × k` contingency table: `table[r * k + s]` counts nodes with `from == r`
/// and `to == s`.
pub fn confusion(from: &[usize], to: &[usize], k: usize) -> Vec<u64> {
    let mut table = vec![0u64; k * k];
    for (&r, &s) in from.iter().zip(to) {
        table[r * k + s] += 1;
    }
    table
}

/// Relabeling `perm` (applied to `from`) that maximizes agreement with `to`;
/// ties go to the lexicographically smallest permutation.
pub fn best_relabeling(from: &[usize], to: &[usize], k: usize) -> Result<(Vec<usize>, u64)> {
    let table = confusion(from, to, k);
    let mut best: Option<(Vec<usize>, u64)> = None;
    for perm in permutations(k)? {
        let agree: u64 = (0..k).map(|r| table[r * k + perm[r]]).sum();
        if best.as_ref().map_or(true, |(_, b)| agree > *b) {
            best = Some((perm, agree));
        }
    }
    Ok(best.expect("at least the identity permutation"))
}

/// Overlap `(N⁻¹ Σ δ(ĝ_i, g_i) − max_r q_r) / (1 − max_r q_r)`.
///
/// With `maximize_over_permutations`, the agreement is maximized over all
/// relabelings of `inferred`.
pub fn overlap(
    planted: &[usize],
    inferred: &[usize],
    prior: &Prior,
    maximize_over_permutations: bool,
) -> Result<f64> {
    let k = prior.k();
    if planted.len() != inferred.len() {
        return Err(Error::InvalidAssignment(alloc::format!(
            "length mismatch: {} planted vs {} inferred",
            planted.len(),
            inferred.len()
        )));
    }
    if planted.is_empty() {
        return Err(Error::InvalidAssignment("empty assignment".into()));
    }
    if planted.iter().chain(inferred).any(|&g| g >= k) {
        return Err(Error::InvalidAssignment(alloc::format!("label >= k = {k}")));
    }
    let agree = if maximize_over_permutations {
        best_relabeling(inferred, planted, k)?.1
    } else {
        planted.iter().zip(inferred).filter(|(a, b)| a == b).count() as u64
    };
    let q_max = prior.max();
    if q_max >= 1.0 {
        return Err(Error::InvalidParameter("overlap is undefined for a degenerate prior".into()));
    }
    let frac = agree as f64 / planted.len() as f64;
    Ok((frac - q_max) / (1.0 - q_max))
}

/// Applies `perm` to every label.
pub fn relabel(labels: &[usize], perm: &[usize]) -> Vec<usize> {
    labels.iter().map(|&g| perm[g]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn permutation_count_and_order() {
        let p = permutations(3).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![0, 1, 2]);
        assert_eq!(p[1], vec![0, 2, 1]);
        assert_eq!(p[5], vec![2, 1, 0]);
        assert_eq!(permutations(8).unwrap().len(), 40320);
        assert!(matches!(permutations(9), Err(Error::TooManyGroups { k: 9 })));
    }

    #[test]
    fn overlap_examples() {
        let u2 = Prior::uniform(2);
        let g = vec![0, 0, 1, 1];
        assert_eq!(overlap(&g, &g, &u2, false).unwrap(), 1.0);
        assert_eq!(overlap(&g, &[0, 0, 0, 0], &u2, false).unwrap(), 0.0);
        assert_eq!(overlap(&g, &[1, 1, 0, 0], &u2, true).unwrap(), 1.0);
        assert_eq!(overlap(&g, &[1, 1, 0, 0], &u2, false).unwrap(), -1.0);
        assert!(overlap(&g, &[0, 0, 1], &u2, false).is_err());
        assert!(overlap(&g, &[0, 0, 1, 2], &u2, false).is_err());
        let u9 = Prior::uniform(9);
        assert!(matches!(overlap(&g, &g, &u9, true), Err(Error::TooManyGroups { .. })));
    }

    #[test]
    fn random_assignment_has_vanishing_overlap() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let prior = Prior::uniform(2);
        let planted: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let guess: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        assert!(overlap(&planted, &guess, &prior, false).unwrap().abs() < 0.05);
        assert!(overlap(&planted, &guess, &prior, true).unwrap().abs() < 0.05);
    }

    fn labels(k: usize, n: usize) -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0..k, n)
    }

    proptest! {
        #[test]
        fn common_permutation_invariance(
            (a, b) in (1usize..40).prop_flat_map(|n| (labels(3, n), labels(3, n))),
            pi in 0usize..6,
        ) {
            let prior = Prior::uniform(3);
            let perm = &permutations(3).unwrap()[pi];
            let pa = relabel(&a, perm);
            let pb = relabel(&b, perm);
            for flag in [false, true] {
                let q0 = overlap(&a, &b, &prior, flag).unwrap();
                let q1 = overlap(&pa, &pb, &prior, flag).unwrap();
                prop_assert!((q0 - q1).abs() < 1e-12);
            }
        }

        #[test]
        fn flagged_overlap_ignores_inferred_labels(
            (a, b) in (1usize..40).prop_flat_map(|n| (labels(3, n), labels(3, n))),
            pi in 0usize..6,
        ) {
            let prior = Prior::uniform(3);
            let perm = &permutations(3).unwrap()[pi];
            let q0 = overlap(&a, &b, &prior, true).unwrap();
            prop_assert!((q0 - overlap(&a, &relabel(&b, perm), &prior, true).unwrap()).abs() < 1e-12);
            prop_assert!((q0 - overlap(&relabel(&a, perm), &b, &prior, true).unwrap()).abs() < 1e-12);
            prop_assert!((overlap(&a, &a, &prior, true).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
