//! Discrete tent spaces on the upper half-space: functionals, lifted operators,
//! weights, decompositions and slice spaces.

pub mod atoms;
pub mod cz;
pub mod error;
pub mod experiment;
pub mod grid;

pub use error::{Result, TentError};
pub use grid::{Grid, GridSpec, HalfSpaceFunction, LineFunction};
pub mod operators;
pub mod slice;
pub mod tent;
pub mod weights;
