//! Numerics on the Heisenberg group ℍⁿ: group arithmetic, CR Yamabe bubbles
//! and their modes, axisymmetric finite-volume PDE solves, interaction
//! integrals, and bubble fitting.

pub mod bubbles;
pub mod derivatives;
pub mod error;
pub mod fields;
pub mod fitter;
pub mod green;
pub mod grid;
pub mod gridfile;
pub mod identities;
pub mod group;
pub mod interactions;
pub mod quadrature;
pub mod sampling;
pub mod solver;

pub use error::{Error, Result};
pub use group::{
    compose, dilate, dist, gauge_apply, gauge_compose, gauge_inverse, hnorm, inverse, Dim, Gauge,
    HPoint,
};
