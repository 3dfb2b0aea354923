//! Numerical laboratory for the higher divergence invariants `div_k` of
//! Hadamard model spaces.
//!
//! The model spaces are finite products of constant curvature `-1`
//! hyperbolic spaces and Euclidean spaces. On top of their closed-form
//! geometry the crate builds piecewise-geodesic sphere maps and fillings,
//! the explicit constructions that bound `div_k` from above and below
//! (suspensions, pull-off fillings, embedded hyperbolic leaves, flat
//! spheres), and a constrained volume minimiser that estimates the
//! divergence functions `delta^k_{rho,A}(r)` and classifies their growth.
//!
//! Modules:
//! - [`geometry`]: distances, geodesics, spheres, radial projection and
//!   horospherical coordinates.
//! - [`simplicial`]: reference complexes, piecewise-geodesic maps, k-volume
//!   and admissibility.
//! - [`constructions`]: the explicit geometric constructions.
//! - [`divergence`]: filling optimisation, leaf slicing and growth fits.
//! - [`experiments`]: the named experiment registry driven by the `divkit` CLI.

pub mod constructions;
pub mod divergence;
mod error;
pub mod experiments;
pub mod geometry;
pub(crate) mod linalg;
pub mod simplicial;

pub use error::{Error, Result};
