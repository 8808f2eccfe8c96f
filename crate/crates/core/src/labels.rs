//! Label sequences and posterior marginals.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Per-time node labels, `(T + 1) × N`, every label below `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentSequence {
    k: usize,
    rows: Vec<Vec<usize>>,
}

impl AssignmentSequence {
    pub fn new(k: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidAssignment("no rows".into()));
        }
        let n = rows[0].len();
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidAssignment(alloc::format!(
                    "row {t} has {} labels, expected {n}",
                    row.len()
                )));
            }
            if let Some(&g) = row.iter().find(|&&g| g >= k) {
                return Err(Error::InvalidAssignment(alloc::format!(
                    "row {t} has label {g} >= k = {k}"
                )));
            }
        }
        Ok(Self { k, rows })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_nodes(&self) -> usize {
        self.rows[0].len()
    }

    pub fn n_steps(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn row(&self, t: usize) -> &[usize] {
        &self.rows[t]
    }

    pub fn into_rows(self) -> Vec<Vec<usize>> {
        self.rows
    }
}

/// Row-normalized per-node group probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    k: usize,
    values: Vec<f64>,
}

impl Marginals {
    pub fn new(k: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || values.len() % k != 0 {
            return Err(Error::InvalidAssignment("marginal table is not n × k".into()));
        }
        for row in values.chunks(k) {
            let s: f64 = row.iter().sum();
            if row.iter().any(|&v| v < 0.0) || (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidAssignment("marginal row is not normalized".into()));
            }
        }
        Ok(Self { k, values })
    }

    pub(crate) fn from_raw(k: usize, values: Vec<f64>) -> Self {
        Self { k, values }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len() / self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.k)
    }

    /// Total probability mass per group, `Σ_i ψ^i_a`.
    pub fn group_mass(&self) -> Vec<f64> {
        let mut mass = alloc::vec![0.0; self.k];
        for row in self.rows() {
            for (m, v) in mass.iter_mut().zip(row) {
                *m += v;
            }
        }
        mass
    }
}

/// Most likely group per node; ties go to the smaller index.
pub fn map_assignments(marginals: &Marginals) -> Vec<usize> {
    marginals
        .rows()
        .map(|row| {
            let mut best = 0;
            for (r, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = r;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn map_examples() {
        let m = Marginals::new(2, vec![0.9, 0.1, 0.5, 0.5]).unwrap();
        assert_eq!(map_assignments(&m), vec![0, 0]);
        let m = Marginals::new(3, vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(map_assignments(&m), vec![1]);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(Marginals::new(2, vec![0.9, 0.2]).is_err());
        assert!(AssignmentSequence::new(2, vec![vec![0, 2]]).is_err());
        assert!(AssignmentSequence::new(2, vec![vec![0, 1], vec![0]]).is_err());
    }
}
