//! Symbolic derivation of Euler-Lagrange equations and natural boundary
//! conditions for variational problems with free boundary values, plus
//! contact-transformation lifts for curved boundaries and a numerical
//! free-boundary minimizer that verifies the derived conditions.
//!
//! The crate is organized around four layers:
//!
//! * [`jet`] — expression trees over jet coordinates `(x^i, u^j_I)` with
//!   partial/total derivatives, evaluation and randomized equivalence
//!   testing;
//! * [`variational`] — the Euler operator `E` and the boundary operator
//!   `E^∂` (for Lagrangians and for general total differential
//!   operators);
//! * [`contact`] — first-order contact lifts of point transformations,
//!   Lagrangian pullback by total Jacobians, and transversality
//!   conditions for curved boundaries;
//! * [`solver`] — discretized free-boundary problems: 1D sliding
//!   endpoints and a soap-film mesh relaxation, with residual reports
//!   that tie the numerics back to the symbolic operators.

pub mod contact;
pub mod jet;
pub mod selftest;
pub mod solver;
pub mod specfile;
pub mod variational;
