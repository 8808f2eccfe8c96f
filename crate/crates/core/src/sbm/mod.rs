//! Static SBM inference on a single snapshot.

pub mod bp;
pub mod em;

pub use bp::{bp_marginals, BpConfig, BpResult, Messages};
pub use em::{em_fit, EmConfig, EmResult, InitAffinity};
