//! File formats, parallel drivers, experiment recipes and the `dsbm` command
//! line on top of [`dsbm_core`].

pub mod cli;
pub mod experiment;
pub mod io;
pub mod parallel;
pub mod svg;

pub use dsbm_core;
