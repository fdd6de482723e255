use super::matrix::Matrix;
use crate::error::{ApcaError, Result};

/// Thin Householder QR of a tall matrix.
///
/// Returns `Q` (rows x cols, orthonormal columns) and upper-triangular `R`
/// (cols x cols) with a nonnegative diagonal. `Q` stays orthonormal when
/// `M` is rank deficient.
pub fn householder_qr(m: &Matrix) -> Result<(Matrix, Matrix)> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(ApcaError::UnderdeterminedQr { rows, cols });
    }

    let mut a = m.clone();
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cols);
    let mut w = vec![0.0; cols];

    for j in 0..cols {
        let mut v: Vec<f64> = (j..rows).map(|i| a[(i, j)]).collect();
        let alpha = super::matrix::norm(&v);
        if alpha == 0.0 {
            reflectors.push((v, 0.0));
            continue;
        }
        v[0] += if v[0] >= 0.0 { alpha } else { -alpha };
        let vv = super::matrix::dot(&v, &v);
        let beta = 2.0 / vv;
        apply_reflector(&mut a, j, j, &v, beta, &mut w);
        reflectors.push((v, beta));
    }

    let mut r = Matrix::from_fn(cols, cols, |i, k| if k >= i { a[(i, k)] } else { 0.0 });

    let mut q = Matrix::from_fn(rows, cols, |i, k| if i == k { 1.0 } else { 0.0 });
    for (j, (v, beta)) in reflectors.iter().enumerate().rev() {
        if *beta != 0.0 {
            apply_reflector(&mut q, j, j, v, *beta, &mut w);
        }
    }

    for i in 0..cols {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).iter_mut().for_each(|x| *x = -*x);
            for row in 0..rows {
                q[(row, i)] = -q[(row, i)];
            }
        }
    }
    Ok((q, r))
}

/// Applies `I - beta v v^T` to rows `row0..` and columns `col0..` of `a`.
fn apply_reflector(a: &mut Matrix, row0: usize, col0: usize, v: &[f64], beta: f64, w: &mut [f64]) {
    let cols = a.cols();
    let w = &mut w[..cols - col0];
    w.iter_mut().for_each(|x| *x = 0.0);
    for (offset, &vi) in v.iter().enumerate() {
        let row = &a.row(row0 + offset)[col0..];
        for (acc, &x) in w.iter_mut().zip(row) {
            *acc += vi * x;
        }
    }
    for (offset, &vi) in v.iter().enumerate() {
        let s = beta * vi;
        let row = &mut a.row_mut(row0 + offset)[col0..];
        for (x, &wk) in row.iter_mut().zip(w.iter()) {
            *x -= s * wk;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomized::gaussian_matrix;

    #[test]
    fn identity_factors_trivially() {
        let (q, r) = householder_qr(&Matrix::identity(2)).unwrap();
        assert_eq!(q, Matrix::identity(2));
        assert_eq!(r, Matrix::identity(2));
    }

    #[test]
    fn single_column_is_normalized() {
        let (q, r) = householder_qr(&Matrix::from_rows(&[[3.0], [4.0]])).unwrap();
        assert!((q[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((q[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((r[(0, 0)] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn wide_input_is_rejected() {
        let err = householder_qr(&Matrix::zeros(2, 3)).unwrap_err();
        assert!(err.to_string().contains("underdetermined QR not supported"));
    }

    #[test]
    fn random_tall_matrix_reconstructs() {
        let m = gaussian_matrix(50, 8, 3);
        let (q, r) = householder_qr(&m).unwrap();
        let recon = q.matmul(&r);
        assert!(recon.sub(&m).frobenius_norm() <= 1e-10 * m.frobenius_norm());
        let qtq = q.t_matmul(&q);
        assert!(qtq.sub(&Matrix::identity(8)).max_abs() <= 1e-12);
        for i in 0..8 {
            assert!(r[(i, i)] >= 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn rank_deficient_input_keeps_orthonormal_q() {
        let mut m = gaussian_matrix(10, 3, 11);
        let c0 = m.column(0);
        m.set_column(2, &c0);
        let (q, r) = householder_qr(&m).unwrap();
        assert!(q.t_matmul(&q).sub(&Matrix::identity(3)).max_abs() <= 1e-12);
        assert!(q.matmul(&r).sub(&m).frobenius_norm() <= 1e-10 * m.frobenius_norm());
    }
}
