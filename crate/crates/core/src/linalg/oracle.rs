use super::matrix::Matrix;
use super::qr::householder_qr;
use crate::error::{ApcaError, Result};

/// Largest dimension the oracle accepts.
pub const ORACLE_MAX_DIM: usize = 64;

/// Eigenvalue real parts from the oracle, descending, plus the largest
/// imaginary part seen in any 2x2 diagonal block.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpectrum {
    pub values: Vec<f64>,
    pub max_imag: f64,
}

/// Independent eigenvalue check for small matrices: unshifted QR iteration
/// (`A <- R Q`) towards quasi-triangular form, then eigenvalues of the 1x1
/// and 2x2 diagonal blocks. Meant for tests, not production paths.
pub fn eig_values_oracle(b: &Matrix, sweeps: usize) -> Result<OracleSpectrum> {
    if !b.is_square() {
        return Err(ApcaError::Dimension(format!(
            "oracle needs a square matrix, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    let n = b.rows();
    if n > ORACLE_MAX_DIM {
        return Err(ApcaError::OracleTooLarge(n));
    }
    let scale = b.frobenius_norm();
    if n == 0 {
        return Ok(OracleSpectrum {
            values: vec![],
            max_imag: 0.0,
        });
    }

    let mut a = b.clone();
    for _ in 0..sweeps {
        let (q, r) = householder_qr(&a)?;
        a = r.matmul(&q);
        let lower: f64 = (1..n).map(|i| a[(i, i - 1)].abs()).fold(0.0, f64::max);
        if lower <= 1e-15 * scale {
            break;
        }
    }

    let split = 1e-13 * scale;
    let mut values = Vec::with_capacity(n);
    let mut max_imag = 0.0_f64;
    let mut i = 0;
    while i < n {
        if i + 1 < n && a[(i + 1, i)].abs() > split {
            let (p, q, r, s) = (a[(i, i)], a[(i, i + 1)], a[(i + 1, i)], a[(i + 1, i + 1)]);
            let half_trace = 0.5 * (p + s);
            let disc = 0.25 * (p - s) * (p - s) + q * r;
            if disc >= 0.0 {
                let root = disc.sqrt();
                values.push(half_trace + root);
                values.push(half_trace - root);
            } else {
                values.push(half_trace);
                values.push(half_trace);
                max_imag = max_imag.max((-disc).sqrt());
            }
            i += 2;
        } else {
            values.push(a[(i, i)]);
            i += 1;
        }
    }
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(OracleSpectrum { values, max_imag })
}
