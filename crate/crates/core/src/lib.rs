//! Spiking networks as optimizers.
//!
//! An integrate-and-fire network with connectivity `AᵀA` and constant input
//! `Aᵀb` drives its firing rates toward the solution of an optimization
//! problem over `A x ≈ b`: one-sided (non-negative) spiking solves
//! non-negative least squares, two-sided spiking solves minimum-`l1`
//! interpolation (basis pursuit). The crate provides
//!
//! - a discrete-time simulator for such networks ([`snn`]),
//! - the mirrored dual-space trajectory `v(t)` with `u(t) = Aᵀ v(t)`
//!   ([`dual`]),
//! - geometric diagnostics that decompose the dual state against a shrunken
//!   feasible polytope and track the associated auxiliary potentials
//!   ([`coupling`]),
//! - conditioning measures of the column arrangement ([`niceness`]),
//! - reference solvers and optimality checks used as ground truth
//!   ([`oracles`]),
//! - and the small dense linear-algebra kernel everything else relies on
//!   ([`numerics`]).
//!
//! With the default `parallel` feature, enumeration-heavy routines fan out
//! via rayon; building with `--no-default-features` selects the sequential
//! fallbacks.

pub mod coupling;
pub mod dual;
pub mod error;
pub mod fixtures;
pub mod instance;
pub mod niceness;
pub mod numerics;
pub mod oracles;
pub mod snn;

pub use error::Error;
pub use instance::ProblemInstance;
