//! Small dense linear algebra: row-major matrices, Cholesky, Householder QR
//! and a cyclic Jacobi eigen-solver for symmetric matrices.

mod cholesky;
mod jacobi;
mod matrix;
mod qr;

pub use cholesky::Cholesky;
pub use jacobi::{symmetric_eigen, SymmetricEigen};
pub use matrix::{dot, Matrix};
pub use qr::HouseholderQr;
