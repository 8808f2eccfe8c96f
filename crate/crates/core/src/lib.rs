//! Persistent dynamic stochastic block model.
//!
//! A temporal network is a sequence of sparse undirected snapshots on a fixed
//! node set. Node labels follow an independent Markov chain per node (kept with
//! probability `eta`, otherwise redrawn from the prior) and each pair copies its
//! previous link state with probability `xi`, otherwise it is redrawn from the
//! planted-partition affinity of the current labels.
//!
//! The crate provides:
//!
//! - [`generator`]: sampling of planted label sequences and temporal networks;
//! - [`theory`]: closed forms for the effective and time-lagged assortativity,
//!   the optimal lag and the detectability lines;
//! - [`sbm`]: single-snapshot belief propagation and EM learning of the affinity;
//! - [`lsd`]: the lagged snapshot dynamic algorithm, which estimates the
//!   persistences from per-snapshot inference and shifts the assignments back by
//!   the optimal lag.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

mod error;
pub mod generator;
pub mod graph;
pub mod labels;
pub mod lsd;
pub mod overlap;
pub mod params;
mod rng;
pub mod roots;
pub mod sbm;
pub mod theory;

pub use error::{Error, Result};
pub use generator::{generate, GeneratorOutput};
pub use graph::{Adjacency, Edge, Snapshot, TemporalNetwork};
pub use labels::{map_assignments, AssignmentSequence, Marginals};
pub use overlap::overlap;
pub use params::{
    affinity_from_assortativity, assortativity_from_affinity, AffinityMatrix, ModelParams, Prior,
};
pub use rng::derive_seed;
