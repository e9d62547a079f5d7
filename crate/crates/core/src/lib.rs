//! Simulation of `N` bosons with bounded permutation-symmetric `m`-body
//! interactions, the generalized Hartree mean-field flow, and numerical
//! checks of the `1/N` mean-field error bound and correlation bounds.

pub mod bounds;
pub mod error;
pub mod exact_dynamics;
pub mod experiments;
pub mod hartree;
pub mod linalg;
pub mod operators;
pub mod random;
pub mod symmetric_space;

pub use error::{Error, Result};
pub use hartree::DensityMatrix;
pub use operators::{BoundConstants, HamiltonianSpec, PotentialTerm, VtildeStrategy};
pub use symmetric_space::{OccupationBasis, SymmetricState};
