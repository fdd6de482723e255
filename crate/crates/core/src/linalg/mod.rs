//! Dense matrix type and the decomposition kernels the models build on.

mod deflation;
mod eigen;
mod matrix;
mod oracle;
mod power;
mod qr;
mod subspace;

pub use deflation::deflated_eigenpairs;
pub use eigen::{pair_residuals, pinv_psd, pinv_sym, pseudo_inverse, sym_eig, EigenPairs};
pub use matrix::{canonical_sign, dot, norm, Matrix};
pub use oracle::{eig_values_oracle, OracleSpectrum, ORACLE_MAX_DIM};
pub use power::{dominant_eigenpair, DominantPair, PowerSettings, ACCEPTABLE_RESIDUAL};
pub use qr::householder_qr;
pub use subspace::max_principal_angle;

/// Default Jacobi stopping tolerance (relative off-diagonal norm).
pub const SYM_EIG_TOL: f64 = 1e-14;

/// Default relative rank cutoff for pseudoinverses.
pub const RANK_TOL: f64 = 1e-12;
