//! Sparse snapshots and temporal networks.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Undirected edge stored with the smaller endpoint first.
pub type Edge = (u32, u32);

/// One undirected simple graph, stored as a sorted list of `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct Snapshot {
    edges: Vec<Edge>,
}

impl Snapshot {
    /// Normalizes endpoint order and sorts. Rejects self-loops, duplicates and
    /// endpoints outside `[0, n)`.
    pub fn from_edges(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = Vec::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidGraph(alloc::format!("self-loop at node {i}")));
            }
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::InvalidGraph(alloc::format!(
                    "edge ({i}, {j}) has an endpoint outside [0, {n_nodes})"
                )));
            }
            out.push((i.min(j) as u32, i.max(j) as u32));
        }
        out.sort_unstable();
        if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(alloc::format!(
                "duplicate edge ({}, {})",
                w[0].0,
                w[0].1
            )));
        }
        Ok(Self { edges: out })
    }

    /// Caller guarantees the edges are sorted, unique, with `i < j`.
    pub(crate) fn from_sorted(edges: Vec<Edge>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.iter().all(|&(i, j)| i < j));
        Self { edges }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let e = (i.min(j) as u32, i.max(j) as u32);
        self.edges.binary_search(&e).is_ok()
    }

    pub fn adjacency(&self, n_nodes: usize) -> Adjacency {
        Adjacency::from_edges(n_nodes, &self.edges)
    }
}

/// Compressed adjacency lists with a reverse index on directed slots.
///
/// Slot `e` in the list of node `i` represents the directed edge `i -> j`;
/// `reverse(e)` is the slot of `j -> i`.
#[derive(Debug, Clone)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    reverse: Vec<usize>,
}

impl Adjacency {
    pub fn from_edges(n_nodes: usize, edges: &[Edge]) -> Self {
        let mut degree = vec![0usize; n_nodes];
        for &(i, j) in edges {
            degree[i as usize] += 1;
            degree[j as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n_nodes].to_vec();
        let mut targets = vec![0u32; 2 * edges.len()];
        let mut reverse = vec![0usize; 2 * edges.len()];
        for &(i, j) in edges {
            let si = fill[i as usize];
            let sj = fill[j as usize];
            targets[si] = j;
            targets[sj] = i;
            reverse[si] = sj;
            reverse[sj] = si;
            fill[i as usize] += 1;
            fill[j as usize] += 1;
        }
        Self {
            offsets,
            targets,
            reverse,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of directed slots, twice the number of edges.
    pub fn n_slots(&self) -> usize {
        self.targets.len()
    }

    pub fn n_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Range of directed slots leaving `i`.
    #[inline]
    pub fn slots(&self, i: usize) -> core::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    #[inline]
    pub fn target(&self, slot: usize) -> usize {
        self.targets[slot] as usize
    }

    #[inline]
    pub fn reverse(&self, slot: usize) -> usize {
        self.reverse[slot]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.targets[self.slots(i)].iter().map(|&j| j as usize)
    }
}

/// Sequence `A^0 … A^T` of snapshots on a fixed node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalNetwork {
    n_nodes: usize,
    snapshots: Vec<Snapshot>,
}

impl TemporalNetwork {
    pub fn new(n_nodes: usize, snapshots: Vec<Snapshot>) -> Result<Self> {
        if n_nodes == 0 || n_nodes > u32::MAX as usize {
            return Err(Error::InvalidGraph(alloc::format!("invalid node count {n_nodes}")));
        }
        if snapshots.is_empty() {
            return Err(Error::InvalidGraph("a temporal network needs at least one snapshot".into()));
        }
        for (t, s) in snapshots.iter().enumerate() {
            if let Some(&(i, j)) = s.edges.iter().find(|&&(i, j)| j as usize >= n_nodes || i >= j) {
                return Err(Error::InvalidGraph(alloc::format!(
                    "snapshot {t}: edge ({i}, {j}) is invalid for N = {n_nodes}"
                )));
            }
        }
        Ok(Self { n_nodes, snapshots })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of transitions `T`.
    pub fn n_steps(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn n_snapshots(&self) -> usize {
        self.snapshots.len()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn snapshot(&self, t: usize) -> &Snapshot {
        &self.snapshots[t]
    }

    /// Empirical mean degree over all snapshots, `2 |E| / (N (T + 1))`.
    pub fn mean_degree(&self) -> f64 {
        let edges: usize = self.snapshots.iter().map(Snapshot::n_edges).sum();
        2.0 * edges as f64 / (self.n_nodes as f64 * self.snapshots.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_normalizes_and_validates() {
        let s = Snapshot::from_edges(4, [(2, 1), (0, 3), (1, 0)]).unwrap();
        assert_eq!(s.edges(), &[(0, 1), (0, 3), (1, 2)]);
        assert!(s.contains(3, 0));
        assert!(!s.contains(2, 3));
        assert!(Snapshot::from_edges(4, [(1, 1)]).is_err());
        assert!(Snapshot::from_edges(4, [(1, 4)]).is_err());
        assert!(Snapshot::from_edges(4, [(1, 2), (2, 1)]).is_err());
    }

    #[test]
    fn adjacency_reverse_slots() {
        let s = Snapshot::from_edges(5, [(0, 1), (1, 2), (2, 0), (3, 4)]).unwrap();
        let adj = s.adjacency(5);
        assert_eq!(adj.n_slots(), 8);
        assert_eq!(adj.degree(0), 2);
        for i in 0..5 {
            for e in adj.slots(i) {
                let j = adj.target(e);
                let r = adj.reverse(e);
                assert_eq!(adj.target(r), i);
                assert!(adj.slots(j).contains(&r));
                assert_eq!(adj.reverse(r), e);
            }
        }
    }

    #[test]
    fn network_validates_snapshots() {
        let ok = Snapshot::from_edges(3, [(0, 2)]).unwrap();
        assert!(TemporalNetwork::new(3, vec![ok.clone()]).is_ok());
        assert!(TemporalNetwork::new(2, vec![ok]).is_err());
        assert!(TemporalNetwork::new(3, vec![]).is_err());
    }
}
