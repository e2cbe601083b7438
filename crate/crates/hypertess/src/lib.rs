//! Poisson hyperplane tessellations and continuum percolation in d-dimensional
//! hyperbolic space, computed in the Klein ball model.
//!
//! Hyperplanes are chords of the unit ball, geodesics are straight segments and
//! the invariant measure on hyperplanes has an explicit product density, so
//! percolation predicates reduce to exact Euclidean linear algebra. On top of
//! the geometric core the crate provides a seeded sampler for the hyperplane
//! process, exact zero-cell clipping in the plane, a probe-lattice connectivity
//! fallback in higher dimensions, closed-form critical intensities, section
//! (k-plane slice) processes, encounter-point constructions and Monte Carlo
//! estimators whose targets are computed exactly.
//!
//! The `examples/` directory holds one runnable program per capability; the
//! `hypertess` binary exposes the same entry points as subcommands.

pub mod error;
pub mod estimators;
pub mod measure;
pub mod geometry;
pub mod numeric;
pub mod percolation;
pub mod tessellation;

pub use error::{Error, Result};
