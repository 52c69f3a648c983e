//! Numerical toolkit for fractal sets in the first Heisenberg group: exact
//! group and metric operations, rectangle and self-similar constructions,
//! box-dimension estimation under `d_E` and `d_H`, and density-ratio probes
//! against vertical planes.

pub mod constructions;
pub mod density;
pub mod dimension;
pub mod error;
pub mod hgeom;
pub mod io;
pub mod rng;

pub use error::{Error, Result};
