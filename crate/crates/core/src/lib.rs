//! Numerical laboratory for stationary quantum information sources.
//!
//! A source is a consistent family of block density matrices `Π_n` on
//! `(C^d)^{⊗n}`. The crate builds the standard families (Bernoulli,
//! commuting-R and the two-level Pauli R-matrix source), computes von Neumann
//! block entropies and rates, derives the classical sources induced by a
//! positive operator valued measure, and checks typical-subspace
//! (Shannon-McMillan) statements at sizes a desktop can hold densely.
//!
//! Entropies are in nats throughout.

pub mod aep;
pub mod certify;
pub mod entropy;
pub mod ergodicity;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod measurement;
pub mod par;
pub mod random;
pub mod sources;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, HermitianMatrix, C64};
pub use measurement::{CylinderMeasure, Pom};
pub use par::Execution;
pub use sources::{Budget, DensityMatrix, SourceFamily, SourceKind};
