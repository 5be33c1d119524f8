//! Curvature classification of focal submanifolds of isoparametric hypersurfaces in spheres.

pub mod classify;
pub mod clifford;
pub mod error;
pub mod fkm;
pub mod geometry;
pub mod linalg;
pub mod orbits;

pub use clifford::{
    build_clifford_system, clifford_sphere_frame, irreducible_dimension, product_trace_invariant,
    verify_clifford_system, CliffordFamily, CliffordSystem, CliffordVerification,
};
pub use error::{Error, Result};
