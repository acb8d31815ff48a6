//! Numerical continuation and verification toolkit for the concave-convex
//! Neumann problem −Δu = λ b(x) u^{q−1} + a(x) u^{p−1}, ∂u/∂n = 0, with
//! 1 < q < 2 < p, studied through the regularization
//! −Δu = λ b(x) (u+ε)^{q−2} u + a(x) u^{p−1} and an ε → 0 limiting
//! procedure.
//!
//! The crate provides structured meshes with a Neumann Laplacian, a small
//! expression language for the coefficients a(x) and b(x), nonlinear and
//! eigenvalue solvers, pseudo-arclength branch tracing with fold location,
//! a metric ε → 0 branch-convergence procedure, diagnostic checks of the
//! identities and bounds the solution set must satisfy, and a config-driven
//! CLI that exports CSV, JSON and SVG bifurcation diagrams.

pub mod coeff;
pub mod config;
pub mod continuation;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod report;
pub mod run;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
