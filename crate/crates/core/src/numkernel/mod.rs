//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Operators are `dim × dim` matrices; superoperators act on column-stacked
//! vectorized operators, so the map `ρ ↦ A ρ B` is the matrix `Bᵀ ⊗ A`.

mod eigen;
mod expm;
mod operator;
mod partial;
mod superop;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use eigen::{
    drazin, drazin_from_spectrum, eig, eig_matrix, Spectrum, DEFAULT_ZERO_TOL, EIG_RESIDUAL_TOL,
};
pub use expm::{expm_matrix, matexp};
pub use operator::{kron, kron_all, Operator};
pub use partial::partial_trace;
pub use superop::{devectorize, vectorize, vectorized_identity, Superoperator};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Shared access to the dense matrix behind an operator or superoperator.
pub trait LinearMap: Clone {
    fn entries(&self) -> &CMatrix;

    /// A value of the same kind (and shape metadata) holding `entries`.
    fn with_entries(&self, entries: CMatrix) -> Self;
}
