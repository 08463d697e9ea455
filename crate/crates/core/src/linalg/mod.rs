//! Dense linear algebra for the small matrices that appear in LMI synthesis.

mod general;
mod matrix;
mod sym;

pub use general::{
    determinant, eigenvalues, expm, inverse, is_hurwitz, rank, singular_values, solve,
    solve_lyapunov, Lu,
};
pub use matrix::Matrix;
pub use sym::{eig_sym, is_psd, schur_complement, SymEigen, SymMatrix, DEFAULT_PSD_TOL};
