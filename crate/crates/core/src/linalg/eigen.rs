use super::matrix::{canonical_sign, norm, Matrix};
use crate::error::{ApcaError, Result};

/// Eigenvalue estimates with their vectors and per-pair backward errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `j` is the unit vector paired with `values[j]`.
    pub vectors: Matrix,
    /// `||B v - lambda v||_2 / ||B||_F` for each pair.
    pub residuals: Vec<f64>,
    /// Some step used its whole iteration budget but still reached an
    /// acceptable residual.
    pub exhausted: bool,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-14;

fn check_symmetric(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(ApcaError::Dimension(format!(
            "symmetric eigensolver needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let asym = m.asymmetry();
    if asym > 1e-10 * m.max_abs() {
        return Err(ApcaError::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Values come back in descending order; each vector follows the
/// largest-entry-positive sign convention. Sweeps stop once the
/// off-diagonal Frobenius norm falls below `tol * ||M||_F` (the library
/// default is 1e-14) or after 100 sweeps.
pub fn sym_eig(m: &Matrix, tol: f64) -> Result<EigenPairs> {
    check_symmetric(m)?;
    let n = m.rows();
    let scale = m.frobenius_norm();

    // Work on the exact symmetric part.
    let mut a = Matrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    // Rows of `vt` are the eigenvectors, which keeps rotations contiguous.
    let mut vt = Matrix::identity(n);

    for sweep in 0..JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= tol * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = 0.5 * (aqq - app) / apq;
                let mut t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
                if theta < 0.0 {
                    t = -t;
                }
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = a[(r, p)];
                    let h = a[(r, q)];
                    let new_rp = g - s * (h + g * tau);
                    let new_rq = h + s * (g - h * tau);
                    a[(r, p)] = new_rp;
                    a[(p, r)] = new_rp;
                    a[(r, q)] = new_rq;
                    a[(q, r)] = new_rq;
                }
                rotate_rows(&mut vt, p, q, s, tau);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = Matrix::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        values.push(a[(idx, idx)]);
        let mut v = vt.row(idx).to_vec();
        canonical_sign(&mut v);
        vectors.set_column(col, &v);
    }
    let residuals = pair_residuals(m, &values, &vectors);
    Ok(EigenPairs {
        values,
        vectors,
        residuals,
        exhausted: false,
    })
}

fn rotate_rows(vt: &mut Matrix, p: usize, q: usize, s: f64, tau: f64) {
    let n = vt.cols();
    let (lo, hi) = vt.as_mut_slice().split_at_mut(q * n);
    let row_p = &mut lo[p * n..(p + 1) * n];
    let row_q = &mut hi[..n];
    for (vp, vq) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let g = *vp;
        let h = *vq;
        *vp = g - s * (h + g * tau);
        *vq = h + s * (g - h * tau);
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Backward errors `||M v - lambda v|| / ||M||_F` for each column.
pub fn pair_residuals(m: &Matrix, values: &[f64], vectors: &Matrix) -> Vec<f64> {
    let scale = m.frobenius_norm();
    (0..values.len())
        .map(|j| {
            let v = vectors.column(j);
            let mv = m.matvec(&v);
            let r: Vec<f64> = mv.iter().zip(&v).map(|(a, b)| a - values[j] * b).collect();
            if scale == 0.0 {
                0.0
            } else {
                norm(&r) / scale
            }
        })
        .collect()
}

/// Moore–Penrose inverse of a symmetric positive semidefinite matrix.
///
/// Eigenvalues above `rank_tol_rel * lambda_max` are inverted; everything
/// else (including slightly negative round-off) is treated as zero.
pub fn pinv_psd(m: &Matrix, rank_tol_rel: f64) -> Result<Matrix> {
    let eig = sym_eig(m, JACOBI_OFF_TOL)?;
    let lambda_max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = rank_tol_rel * lambda_max;
    Ok(spectral_inverse(&eig, |l| l > cutoff && l > 0.0))
}

/// Pseudoinverse of a symmetric (possibly indefinite) matrix. Eigenvalues
/// with `|lambda| <= rank_tol_rel * max |lambda|` are dropped; the flag
/// reports whether any were.
pub fn pinv_sym(m: &Matrix, rank_tol_rel: f64) -> Result<(Matrix, bool)> {
    let eig = sym_eig(m, JACOBI_OFF_TOL)?;
    let largest = eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cutoff = rank_tol_rel * largest;
    let keep = |l: f64| l.abs() > cutoff && l != 0.0;
    let dropped = eig.values.iter().any(|&l| !keep(l));
    Ok((spectral_inverse(&eig, keep), dropped))
}

fn spectral_inverse(eig: &EigenPairs, keep: impl Fn(f64) -> bool) -> Matrix {
    let n = eig.vectors.rows();
    let kept: Vec<usize> = (0..eig.values.len()).filter(|&j| keep(eig.values[j])).collect();
    let v = eig.vectors.select_columns(&kept);
    let scaled = Matrix::from_fn(n, kept.len(), |i, c| v[(i, c)] / eig.values[kept[c]]);
    scaled.matmul_t(&v)
}

/// Pseudoinverse of a rectangular matrix, computed through whichever Gram
/// matrix is smaller: `X^T (X X^T)^+` when rows <= cols, otherwise
/// `(X^T X)^+ X^T`.
pub fn pseudo_inverse(x: &Matrix, rank_tol_rel: f64) -> Result<Matrix> {
    if x.rows() <= x.cols() {
        let g = pinv_psd(&x.gram(), rank_tol_rel)?;
        Ok(x.t_matmul(&g))
    } else {
        let g = pinv_psd(&x.t_matmul(x), rank_tol_rel)?;
        Ok(g.matmul_t(x))
    }
}
