//! Estimation laboratory for the missing mass of a discrete law.
//!
//! The crate provides four layers:
//! - [`laws`]: truncated power-law, log-corrected, and geometric laws with
//!   exact occupancy functionals (expected missing mass, expected level
//!   counts, estimator bias, and the power-law limit ratio).
//! - [`occupancy`]: samples, occupancy profiles, the singleton estimator
//!   of the missing mass, and the multiplicative loss.
//! - [`montecarlo`]: seeded, replicated risk curves, rate fits, and
//!   concentration checks for the singleton estimator.
//! - [`betalab`] and [`bayes`]: Beta-function numerics verifying the
//!   analytic machinery, and Pitman-Yor posterior simulation checks.

pub mod bayes;
pub mod betalab;
mod error;
pub mod laws;
pub mod montecarlo;
mod numerics;
pub mod occupancy;

pub use error::{Error, Result};
