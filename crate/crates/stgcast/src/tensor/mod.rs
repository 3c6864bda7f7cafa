//! Dense matrix kernels, a reverse-mode autodiff tape, and a
//! finite-difference gradient checker.

mod fd;
mod matrix;
mod tape;

pub use fd::{finite_difference_gradient, max_relative_error, relative_error};
pub use matrix::{DenseMatrix, Tensor3};
pub use tape::{Tape, VarId};
