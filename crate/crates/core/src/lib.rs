//! Numerical study of the one-dimensional Dirichlet problem
//!
//! −(|u′|^{p−2}u′)′ − (|u′|^{q−2}u′)′ = α|u|^{p−2}u + β|u|^{q−2}u on (0,1)
//!
//! with 1 < q < p. The crate provides p-trigonometric special functions and
//! r-Laplacian eigenpairs, energy/fiber analysis on the associated Nehari
//! set, a shooting solver that enumerates all positive solutions, the
//! critical constants and the critical curve β*(α), variational solvers
//! (truncated minimization, fiber-reduced global minimization, a numerical
//! mountain pass), and bifurcation sweeps with region classification.

pub mod bifurcation;
pub mod critical;
pub mod error;
pub mod fiber;
pub mod grid;
pub mod ode;
pub mod params;
pub mod quad;
pub mod shooting;
pub mod special;
pub mod variational;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, DEFAULT_NODES};
pub use params::Params;
