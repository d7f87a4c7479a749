//! Boundary-integral solver for the two-dimensional Mullins-Sekerka flow of a graph
//! interface `y = f(t, x)` on a periodized line.

pub mod error;
pub mod grid;
pub mod sio;
pub mod resolvent;
pub mod evolution;
pub mod potential;
pub mod cli;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
