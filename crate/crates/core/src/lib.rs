//! Projective transformations of divergence-free positive symmetric tensors.

pub mod cli;
pub mod error;
pub mod estimates;
pub mod euler;
pub mod grid;
pub mod interp;
pub mod io;
pub mod kinetic;
pub mod linalg;
pub mod projective;
pub mod special;
pub mod stats;
pub mod tensor_field;

pub use error::{Error, Result};
pub use grid::{Axis, GridSpec, Lattice};
pub use linalg::{Mat, Vector};
pub use tensor_field::{SymTensorField, TensorSource};
