//! Numerical continuation for a family of abelian vortex-type equations on
//! the flat torus, with runtime monitors for the a priori estimates that
//! control the continuity method, plus an exact-arithmetic calculator for
//! the Gieseker-stability reduction on the product with the projective line.
//!
//! Layout:
//! - [`geometry`]: periodic grid, integration, spectral Laplacian/ddbar,
//!   Green solver
//! - [`bundle`]: theta-function background (s0, Theta_0), curvature and the
//!   eliminated gradient pairing
//! - [`equation`]: residual/Jacobian of the cleared scalar equation and the
//!   bradlow/cym/vbma/general parameter maps
//! - [`solver`]: damped Newton, adaptive (alpha, t) continuation, the
//!   backward-forward uniqueness probe
//! - [`estimates`]: hypothesis flags and per-state monitors
//! - [`stability`]: exact rational Chern/Euler arithmetic and the stability
//!   verdict with its cross-checks

pub mod bundle;
pub mod equation;
pub mod error;
pub mod estimates;
pub mod geometry;
mod linsolve;
pub mod solver;
pub mod stability;

pub use error::{Result, VortexError};
