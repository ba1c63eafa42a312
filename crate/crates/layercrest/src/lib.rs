//! Concentrating steady states of the anisotropic chemotaxis equation
//! −div(a∇u) + a·u = ε²·a·eᵘ with zero Neumann data on a smooth planar
//! domain, where the weight a is positive on the closure of the domain.
//!
//! The crate builds the singular objects of the matched-asymptotics
//! construction (Neumann Green function of Δ + ∇ln a·∇ − 1 with its regular
//! part, the bounded kernel R of Δ−1 against z/|z|²), assembles multi-bubble
//! approximate solutions with the self-consistent height closure, runs the
//! finite-dimensional reduction (projected linear/nonlinear solves against
//! the approximate-kernel modes) and a full damped Newton solve, evaluates
//! the reduced energy over concentration configurations, and certifies its
//! critical points for the three concentration scenarios (near-boundary
//! interior points, separated boundary points, boundary clusters). Solutions
//! lift to rotationally symmetric layered states in higher dimension; the
//! quantized masses of both the planar and the lifted problems are reported.

// Validation guards are written `!(x > 0.0)` on purpose: the negated form
// rejects NaN, which `x <= 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod domain;
mod error;
pub mod fem;
pub mod greens;
pub mod landscape;
pub mod numerics;
pub mod reduction;

pub use error::{Error, Result};

/// Crate version, embedded in report provenance lines.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
