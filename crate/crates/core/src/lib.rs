//! Numerical toolkit for two-dimensional hollow vortices with surface tension.
//!
//! A bubble is a Jordan curve `S` bounding a region of area π together with a
//! stream function `ψ`, harmonic outside `S`, constant on it and growing like
//! `log|x|`, such that the jump equation `−(We/2)(∂_nψ)² + H = λ` holds on
//! `S`. Solutions are exactly the critical points of
//! `F_We(E) = We·π·I(E) + P(E)` under the area constraint, where `I` is the
//! logarithmic potential energy and `P` the perimeter.
//!
//! Modules:
//!
//! * [`geometry`]: shape descriptions and spectral boundary sampling.
//! * [`potential`]: the equilibrium measure, Robin constant and Neumann trace.
//! * [`energy`]: the functional, its shape gradient and the identity report.
//! * [`spectrum`]: linearization about the unit disk.
//! * [`solve`]: Newton solves, branch continuation and energy minimization.
//! * [`io`]: CSV and JSON export.

pub mod energy;
pub mod error;
pub mod geometry;
pub mod io;
pub mod potential;
pub mod solve;
pub mod spectrum;

pub use error::{Error, Result};
pub use geometry::{BoundaryDiscretization, EllipsePoint, FourierShape, Shape, SupportShape};
pub use potential::EquilibriumSolution;
