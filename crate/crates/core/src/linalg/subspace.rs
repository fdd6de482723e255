use super::eigen::sym_eig;
use super::matrix::Matrix;
use super::qr::householder_qr;
use crate::error::{ApcaError, Result};

/// Largest principal angle (radians) between the column spans of `a` and `b`.
///
/// Uses the sine form `||(I - Qa Qa^T) Qb||_2`, which stays accurate for
/// nearly identical subspaces where the cosine form loses everything below
/// 1e-8.
pub fn max_principal_angle(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.rows() != b.rows() {
        return Err(ApcaError::Dimension(format!(
            "subspaces live in R^{} and R^{}",
            a.rows(),
            b.rows()
        )));
    }
    let (qa, _) = householder_qr(a)?;
    let (qb, _) = householder_qr(b)?;
    let coeffs = qa.t_matmul(&qb);
    let residual = qb.sub(&qa.matmul(&coeffs));
    let gram = residual.t_matmul(&residual);
    let top = sym_eig(&gram, 1e-14)?.values.first().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt().min(1.0).asin())
}
