//! Numerical engine for conformal differential geometry.
//!
//! The crate evaluates pseudo-Riemannian metrics given as coordinate
//! expressions, computes the conformal curvature hierarchy (Weyl, Cotton,
//! Bach and the ρ-tensor), realizes the standard tractor bundle with its
//! normal covariant derivative, verifies candidate differential forms
//! against the normal twistor equations, and estimates the holonomy algebra
//! of the normal conformal connection together with its invariant
//! structures.
//!
//! Everything is built on one differentiation substrate: truncated
//! multivariate Taylor jets of the metric components ([`expr`]). Tensor
//! computations happen in the coordinate basis; pseudo-orthonormal frames
//! enter only where signature signs matter (Hodge duality, traces, the
//! tractor splitting).

pub mod chart;
pub mod constructions;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod exterior;
pub mod holonomy;
pub mod report;
pub mod tensor;
pub mod tractor;
pub mod twistor;

pub use error::{Error, Result};
