//! Numerical toolkit for Yang–Mills fields on the three-torus in the
//! Coulomb-type split `A = A^df + A^cf`.

pub mod dynamics;
pub mod error;
pub mod estimates;
pub mod evolution;
pub mod gauge;
pub mod grid;
pub mod io;
pub mod lie;
pub mod projections;
pub mod spacetime;

pub use error::{Error, Result};
