//! Finite distributions and their entropy functionals.

mod alphabet;
pub mod info;
mod pmf;
mod tensor;

pub use alphabet::FiniteAlphabet;
pub use info::{binary_entropy, entropy_bits};
pub use pmf::{JointPmf, PmfFile, Side, INPUT_NORMALIZATION_TOL};
pub use tensor::{Axis, TensorPmf, TENSOR_CELL_BUDGET};

/// Tolerance used when asserting exact information identities.
pub const IDENTITY_TOL: f64 = 1e-9;
