//! Exact K-functionals, partition norms and tail envelopes for polynomials in
//! bounded function systems, with tools for selecting subsystems whose
//! polynomials behave like Rademacher sums.

pub mod cli;
pub mod equivalence;
pub mod error;
pub mod exact;
pub mod extension;
pub mod kfunctional;
pub mod qnorm;
pub mod selection;
pub mod systems;
pub mod tails;

pub use error::{LacunaError, Result};
