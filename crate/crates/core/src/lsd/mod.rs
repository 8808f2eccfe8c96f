//! Lagged snapshot dynamic: per-snapshot static inference, persistence
//! estimation from the inferred label sequence, and lag correction.

mod align;
mod counts;
mod estimate;
mod run;

pub use align::{align_labels, Alignment};
pub use counts::{transition_counts, transition_counts_masked, TransitionCounts};
pub use estimate::{
    estimate_eta, estimate_xi, eta_score, solve_eta_bisection, xi_score, Clamp, EtaEstimate, XiEstimate,
    PERSISTENCE_CAP,
};
pub use run::{
    fit_snapshot, lsd_from_sweep, lsd_run, snapshot_sweep, sweep_from_fits, LsdConfig, LsdFlags, LsdResult,
    SnapshotFit, SnapshotSweep,
};
