//! Weighted extended B-spline (WEB-spline) solver for bending and buckling of
//! stiffened Kirchhoff plates on embedded Cartesian grids.

pub mod airy;
pub mod assembly;
pub mod basis;
pub mod bench;
pub mod error;
pub mod extension;
pub mod geometry;
pub mod jet;
pub mod quadrature;
pub mod solvers;
pub mod spline;

pub use error::{Error, Result};
