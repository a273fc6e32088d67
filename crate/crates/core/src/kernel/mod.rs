//! Small dense complex linear algebra for the separation updates.
//!
//! Everything here targets `M <= 8` microphones: Hermitian PSD functions via
//! Jacobi eigendecomposition, LU for general square solves, and the scalar
//! cubic root used by the basis updates.

mod cubic;
mod eigen;
mod lu;
mod matrix;
mod psd;

pub use cubic::cubic_positive_root;
pub use eigen::{eigh, HermitianEigen};
pub use lu::{inverse, solve, Lu};
pub use matrix::CMatrix;
pub use psd::{inv_psd, logdet_psd, riccati_solve, sqrt_psd, trace_prod, LOADING, LOADING_TRIGGER};
