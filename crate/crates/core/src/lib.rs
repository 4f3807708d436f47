//! Geometric synthesis of centralized and distributed unknown-input observers
//! for linear time-invariant systems.
//!
//! The crate is organized bottom-up:
//!
//! * [`subspace`]: orthonormal-basis subspace algebra (sum, intersection,
//!   preimage, quotient charts).
//! * [`geometry`]: conditioned-invariant recursions, friends, spectral
//!   splitting and stabilizing output injection.
//! * [`central`]: the centralized observer.
//! * [`distributed`]: node classification and the networked observer.
//! * [`sim`]: fixed-step simulation of plant plus observers.

pub mod battery;
pub mod central;
pub mod distributed;
pub mod error;
pub mod geometry;
pub mod linalg;
mod placement;
pub mod reference;
pub mod sim;
pub mod subspace;
pub mod system;

pub use error::{Assumption, ExistenceFailure, GeoError, Result};
pub use geometry::{GeometricDecomposition, PlacementConfig, SpectralPartition, SynthesisSettings};
pub use linalg::{Mat, Vector};
pub use subspace::{Subspace, TolerancePolicy};
pub use system::{InputPartition, LinSystem};
