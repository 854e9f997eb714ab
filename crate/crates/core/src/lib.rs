//! Concurrent transmission scheduling for millimeter-wave vehicle-to-vehicle
//! sharing of perceptual data at an intersection.
//!
//! The pipeline for one data-update interval is:
//!
//! 1. [`geometry::build_scenario`] places vehicles on a four-arm intersection.
//! 2. [`propagation::Channel`] caches path loss, blockage and antenna gains.
//! 3. [`netgraph::NetworkGraph`] links every vehicle pair whose loss stays under
//!    the link-budget threshold.
//! 4. [`simulator::plan_schedule`] builds one scheduling graph per slot and picks
//!    a greedy maximum-weight independent set of transmissions.
//! 5. [`simulator::execute_schedule`] replays the plan under the full
//!    interference sum and tracks [`coverage`] per vehicle.
//!
//! [`cli`] wraps the pipeline in a seeded Monte-Carlo harness that writes CSV.

pub mod cli;
pub mod coverage;
pub mod error;
pub mod geometry;
pub mod mwis;
pub mod netgraph;
pub mod propagation;
pub mod schedgraph;
pub mod simulator;

pub use error::{Error, Result};
