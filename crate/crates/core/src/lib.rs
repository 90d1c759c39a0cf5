//! Frequency-domain beam splitters built from modulated coupled ring
//! resonators: normal-mode analysis, effective transfer matrices via the
//! SLH/ABCD/RWA pipeline, operating-point solvers, device composition,
//! array-feasibility checks, and an RWA-free time-domain oracle.

pub mod error;
pub mod graph;
pub mod modulation;
pub mod rwa;
pub mod slh;
pub mod units;

pub use error::{Error, Result};
