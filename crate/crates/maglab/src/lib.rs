//! Verification lab for magnetic flows on Riemannian manifolds.
//!
//! The crate computes the frame-bundle geometry of a magnetic system
//! (contorsion, torsion, curvature, Bianchi remainder), integrates the
//! magnetic flow and its Jacobi fields, evaluates Pestov-type integral
//! identities on surfaces by spectral quadrature, checks the constant
//! algebra of tensor tomography in exact arithmetic, and tabulates the
//! representation-theoretic pinching thresholds.
//!
//! Every closed form has an independent brute-force counterpart: a
//! finite-difference Lie bracket on the frame bundle, a finite-difference
//! variation of trajectories, or a second algebraic route.

pub mod circlebundle;
pub mod config;
pub mod dynamics;
pub mod fmquad;
pub mod framebundle;
pub mod haar;
pub mod liealg;
pub mod magtensor;
pub mod manifold;
pub mod par;
pub mod reptheory;
pub mod suites;
pub mod tolerances;
pub mod tomoconst;

pub use nalgebra::{DMatrix, DVector};

/// Dense real matrix used throughout.
pub type Matrix = DMatrix<f64>;
/// Dense real vector used throughout.
pub type Vector = DVector<f64>;
