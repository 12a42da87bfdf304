//! Desk-scale pseudospectral toolkit for the mass-critical, defocusing,
//! vector-valued resonant nonlinear Schroedinger system on the plane with
//! an integer mode lattice.
//!
//! The crate provides the resonance combinatorics of the coupled system,
//! a periodic-square spectral discretization with the free propagator and
//! Littlewood-Paley style projectors, conserved quantities and mixed
//! norms, a structure-preserving split-step integrator, the symmetry
//! group action, and the measurable functionals used to probe scattering,
//! bilinear frequency-interaction scaling, and interaction Morawetz
//! quantities.

pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod initial;
pub mod resonance;
pub mod snapshot;
pub mod state;
pub mod symmetry;

pub use error::{CoreError, Result};
pub use field::Field2;
pub use grid::{BumpProfile, LpMode, SpatialGrid};
pub use resonance::{ModeBand, ResonanceTriple};
pub use state::{DiagnosticsRecord, Trajectory, VectorField, WeightSpec};
