//! Dense linear algebra for the learner.

pub mod complex;
pub mod eigen;
pub mod expm;
pub mod symmetric;

pub use complex::{inner_product, max_norm, ComplexMatrix, ComplexVector};
pub use eigen::{symmetric_eigendecompose, EigenDecomposition};
pub use expm::{expm_taylor, expm_taylor_scaled, expm_unitary, DEFAULT_TAYLOR_TERMS};
pub use symmetric::SymmetricMatrix;
