//! Numerical laboratory for Lieb–Robinson bounds on lattice fermions.
//!
//! The core is generic over the real scalar type; `f64` aliases are provided
//! for the common case.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod interactions;
pub mod lattice;
pub mod linalg;
pub mod lppl;
pub mod scalar;
pub mod spectral_flow;
pub mod spin;

pub use error::{Error, Result};
pub use fock::{FockContext, LadderKind, LocalOperator, Parity, SignedMap};
pub use lattice::{build_lattice, LatticeGraph, LatticeSpec, SiteSet};
pub use scalar::{Real, C};

pub type Mat64 = linalg::Mat<f64>;
pub type LocalOperator64 = fock::LocalOperator<f64>;
