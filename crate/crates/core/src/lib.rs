//! Frenkel-Kontorova model on the Fibonacci quasi-crystal.
//!
//! Exact chain geometry lives in [`golden`], [`fibword`] and [`chain`];
//! [`potential`] and [`model`] define the energy; [`solver`] computes
//! equilibria near the anti-integrable limit and [`minimal`] builds minimal
//! configurations from the branched-manifold construction.

pub mod chain;
pub mod error;
pub mod fibword;
pub mod golden;
pub mod minimal;
pub mod model;
pub mod potential;
pub mod solver;
pub mod verify;

pub use error::{FkError, Result};
pub use golden::{Abscissa, GoldenNumber, GoldenRational, TAU};
