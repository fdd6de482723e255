use super::rng::gaussian_matrix;
use crate::error::{ApcaError, Result};
use crate::linalg::{canonical_sign, deflated_eigenpairs, householder_qr, pair_residuals, EigenPairs, Matrix, PowerSettings};

pub const DEFAULT_OVERSAMPLE: usize = 5;
pub const DEFAULT_POWER_ITERS: usize = 5;

/// Parameters of the randomized subspace-iteration eigensolver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApproxParams {
    /// Number of eigenpairs wanted.
    pub k: usize,
    /// Extra sample columns beyond `k`.
    pub oversample: usize,
    /// Rounds of `B^T` / `B` subspace iteration.
    pub power_iters: usize,
}

impl ApproxParams {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            oversample: DEFAULT_OVERSAMPLE,
            power_iters: DEFAULT_POWER_ITERS,
        }
    }

    /// Sketch width `k + s`.
    pub fn width(&self) -> usize {
        self.k + self.oversample
    }

    /// Fit-time precondition `k + s < min(n, dim)`, with `n` the sample count
    /// and `dim = p + q` the size of the decomposition matrix.
    pub fn validate(&self, samples: usize, dim: usize) -> Result<()> {
        let bound = samples.min(dim);
        if self.k == 0 || self.width() >= bound {
            return Err(ApcaError::ApproxPrecondition {
                k: self.k,
                s: self.oversample,
                bound,
            });
        }
        Ok(())
    }
}

/// Approximate top-`k` eigenpairs of a square `B` by randomized subspace
/// iteration:
///
/// 1. `G = B Omega` with a seeded Gaussian `Omega` of width `k + s`, `Q = qr(G)`.
/// 2. `t` rounds of `Q~ = qr(B^T Q)`, `Q = qr(B Q~)`.
/// 3. Rayleigh–Ritz: eigenpairs of `Q^T B Q` from the deflation solver,
///    lifted back as `U = Q V`.
///
/// The sketch width may equal `dim(B)` here (the sketch then spans the whole
/// space); model fits enforce the stricter [`ApproxParams::validate`].
pub fn approx_eig(b: &Matrix, params: ApproxParams, seed: u64) -> Result<EigenPairs> {
    if !b.is_square() {
        return Err(ApcaError::Dimension(format!(
            "approximate eigensolver needs a square matrix, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    let dim = b.rows();
    let width = params.width();
    if params.k == 0 || width > dim {
        return Err(ApcaError::ApproxPrecondition {
            k: params.k,
            s: params.oversample,
            bound: dim + 1,
        });
    }

    let omega = gaussian_matrix(dim, width, seed);
    let (mut q, _) = householder_qr(&b.matmul(&omega))?;
    for _ in 0..params.power_iters {
        let (q_tilde, _) = householder_qr(&b.t_matmul(&q))?;
        q = householder_qr(&b.matmul(&q_tilde))?.0;
    }

    let projected = q.t_matmul(&b.matmul(&q));
    let small = deflated_eigenpairs(&projected, params.k, seed, PowerSettings::default())?;
    let mut u = q.matmul(&small.vectors);
    for j in 0..params.k {
        let mut col = u.column(j);
        canonical_sign(&mut col);
        u.set_column(j, &col);
    }
    let residuals = pair_residuals(b, &small.values, &u);
    Ok(EigenPairs {
        values: small.values,
        vectors: u,
        residuals,
        exhausted: small.exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_principal_angle;

    #[test]
    fn diagonal_top_pair() {
        let b = Matrix::from_diag(&[5.0, 2.0, 1.0]);
        // Width 2 in R^3: the e3 leak after three applications of B is about
        // (1/5)^3, so the Ritz value is off by roughly 5 * (1/5)^6.
        let params = ApproxParams {
            k: 1,
            oversample: 1,
            power_iters: 1,
        };
        let e = approx_eig(&b, params, 3).unwrap();
        assert!((e.values[0] - 5.0).abs() < 1e-3);
        assert!((e.vectors[(0, 0)] - 1.0).abs() < 1e-4);

        // Once the sketch spans the space the pair is exact.
        let params = ApproxParams {
            k: 1,
            oversample: 2,
            power_iters: 1,
        };
        let e = approx_eig(&b, params, 3).unwrap();
        assert!((e.values[0] - 5.0).abs() < 1e-8);
        assert!((e.vectors[(0, 0)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn full_width_sketch_is_exact() {
        let g = gaussian_matrix(12, 12, 2);
        let b = g.add(&g.transpose());
        let params = ApproxParams {
            k: 3,
            oversample: 9,
            power_iters: 0,
        };
        let approx = approx_eig(&b, params, 8).unwrap();
        let exact = deflated_eigenpairs(&b, 3, 8, PowerSettings::default()).unwrap();
        assert!(max_principal_angle(&approx.vectors, &exact.vectors).unwrap() < 1e-8);
    }

    #[test]
    fn oversized_sketch_rejected() {
        let params = ApproxParams {
            k: 3,
            oversample: 5,
            power_iters: 1,
        };
        let err = approx_eig(&Matrix::identity(6), params, 0).unwrap_err();
        assert!(err.to_string().contains("k + s must be < min(n, p)"));
    }

    #[test]
    fn validate_uses_sample_and_feature_bound() {
        let p = ApproxParams::new(2);
        assert!(p.validate(100, 8).is_ok());
        assert!(p.validate(7, 100).is_err());
        assert!(p.validate(100, 7).is_err());
    }

    #[test]
    fn deterministic() {
        let g = gaussian_matrix(20, 20, 6);
        let b = g.gram();
        let p = ApproxParams::new(2);
        assert_eq!(approx_eig(&b, p, 1).unwrap(), approx_eig(&b, p, 1).unwrap());
    }
}
