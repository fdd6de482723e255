//! Fit / transform / reconstruct lifecycle over samples x features data.

mod file;

pub use file::{load, save, FORMAT_VERSION, MAGIC};

use crate::apca::{build_decomposition_matrix, demean, encoding_matrix, extract_loadings, loading_gram, local_scores, Flavor, Inference, Loadings};
use crate::error::{ApcaError, Result};
use crate::linalg::{pinv_sym, Matrix, RANK_TOL};
use crate::randomized::{approx_eig, ApproxParams, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS};

/// Eigensolver used at fit time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decomp {
    /// Power iteration with orthogonal deflation on the full matrix.
    Exact,
    /// Randomized subspace iteration followed by a small exact solve.
    Approx { oversample: usize, power_iters: usize },
}

impl Decomp {
    pub fn approx_default() -> Self {
        Decomp::Approx {
            oversample: DEFAULT_OVERSAMPLE,
            power_iters: DEFAULT_POWER_ITERS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApcaConfig {
    pub flavor: Flavor,
    pub inference: Inference,
    pub k: usize,
    pub mu: f64,
    pub decomp: Decomp,
    pub center_primary: bool,
    pub center_augmenting: bool,
    pub seed: u64,
}

impl ApcaConfig {
    /// Exact decomposition, both blocks centered, seed 0.
    pub fn new(flavor: Flavor, inference: Inference, k: usize, mu: f64) -> Self {
        Self {
            flavor,
            inference,
            k,
            mu,
            decomp: Decomp::Exact,
            center_primary: true,
            center_augmenting: true,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_decomp(mut self, decomp: Decomp) -> Self {
        self.decomp = decomp;
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(ApcaError::NegativeMu(self.mu));
        }
        if self.k == 0 {
            return Err(ApcaError::InvalidParameter("number of components must be at least 1".into()));
        }
        Ok(())
    }
}

/// Conditions worth reporting that did not stop the fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Warnings {
    /// `W^T W +- mu D^T D` was singular and a pseudoinverse was used.
    pub singular_gram: bool,
    /// Power iteration used its whole budget; the residual was still small.
    pub nonconvergence: bool,
}

/// A fitted model. `a` is present exactly when inference is encoded.
#[derive(Debug, Clone, PartialEq)]
pub struct ApcaModel {
    pub config: ApcaConfig,
    pub w: Matrix,
    pub d: Matrix,
    pub a: Option<Matrix>,
    pub x_means: Vec<f64>,
    pub y_means: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub warnings: Warnings,
}

fn center(m: &Matrix, enabled: bool) -> Result<(Matrix, Vec<f64>)> {
    if enabled {
        demean(m)
    } else {
        Ok((m.clone(), vec![0.0; m.rows()]))
    }
}

fn subtract_means(m: &Matrix, means: &[f64]) -> Matrix {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] - means[i])
}

fn add_means(m: &Matrix, means: &[f64]) -> Matrix {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] + means[i])
}

/// Fits a model to `x` (samples x p) and `y` (samples x q).
pub fn fit(config: &ApcaConfig, x: &Matrix, y: &Matrix) -> Result<ApcaModel> {
    config.validate()?;
    let (n, p) = x.shape();
    let q = y.cols();
    if y.rows() != n {
        return Err(ApcaError::Dimension(format!(
            "primary data has {n} samples but augmenting data has {}",
            y.rows()
        )));
    }
    if config.k > p + q {
        return Err(ApcaError::InvalidParameter(format!(
            "number of components {} exceeds p + q = {}",
            config.k,
            p + q
        )));
    }
    let centering = config.center_primary || config.center_augmenting;
    if n == 0 || (centering && n < 2) {
        return Err(ApcaError::InvalidParameter(format!("need at least 2 samples to fit, got {n}")));
    }

    let (xc, x_means) = center(&x.transpose(), config.center_primary)?;
    let (yc, y_means) = center(&y.transpose(), config.center_augmenting)?;
    let b = build_decomposition_matrix(&xc, &yc, config.mu, config.flavor, config.inference)?;

    let loadings = match config.decomp {
        Decomp::Exact => extract_loadings(&b, config.k, p, q, config.seed)?,
        Decomp::Approx { oversample, power_iters } => {
            let params = ApproxParams {
                k: config.k,
                oversample,
                power_iters,
            };
            params.validate(n, p + q)?;
            Loadings::from_pairs(approx_eig(&b, params, config.seed)?, p)
        }
    };

    let mut warnings = Warnings {
        nonconvergence: loadings.exhausted,
        ..Warnings::default()
    };
    let a = match config.inference {
        Inference::Encoded => {
            let solved = encoding_matrix(&loadings.w, &loadings.d, &xc, &yc, config.mu, config.flavor)?;
            warnings.singular_gram = solved.singular_gram;
            Some(solved.value)
        }
        Inference::Local => {
            let gram = loading_gram(&loadings.w, &loadings.d, config.mu, config.flavor);
            warnings.singular_gram = pinv_sym(&gram, RANK_TOL)?.1;
            None
        }
    };

    Ok(ApcaModel {
        config: *config,
        w: loadings.w,
        d: loadings.d,
        a,
        x_means,
        y_means,
        eigenvalues: loadings.eigenvalues,
        warnings,
    })
}

impl ApcaModel {
    pub fn k(&self) -> usize {
        self.w.cols()
    }

    pub fn p(&self) -> usize {
        self.w.rows()
    }

    pub fn q(&self) -> usize {
        self.d.rows()
    }

    /// Factor scores (k x n) in the internal orientation.
    fn scores(&self, x: &Matrix, y: Option<&Matrix>) -> Result<Matrix> {
        if x.cols() != self.p() {
            return Err(ApcaError::Dimension(format!(
                "model expects {} primary features, got {}",
                self.p(),
                x.cols()
            )));
        }
        let xc = subtract_means(&x.transpose(), &self.x_means);
        match (&self.a, self.config.inference) {
            (Some(a), Inference::Encoded) => Ok(a.matmul(&xc)),
            _ => {
                let y = y.ok_or(ApcaError::MissingAugmenting)?;
                if y.cols() != self.q() || y.rows() != x.rows() {
                    return Err(ApcaError::Dimension(format!(
                        "augmenting data must be {}x{}, got {}x{}",
                        x.rows(),
                        self.q(),
                        y.rows(),
                        y.cols()
                    )));
                }
                let yc = subtract_means(&y.transpose(), &self.y_means);
                Ok(local_scores(&self.w, &self.d, &xc, &yc, self.config.mu, self.config.flavor)?.value)
            }
        }
    }

    /// Scores as samples x k. Encoded models ignore `y`; local models need it.
    pub fn transform(&self, x: &Matrix, y: Option<&Matrix>) -> Result<Matrix> {
        Ok(self.scores(x, y)?.transpose())
    }

    /// `(X_hat, Y_hat)` as samples x p and samples x q, with means restored.
    pub fn reconstruct(&self, x: &Matrix, y: Option<&Matrix>) -> Result<(Matrix, Matrix)> {
        let s = self.scores(x, y)?;
        let x_hat = add_means(&self.w.matmul(&s), &self.x_means).transpose();
        let y_hat = add_means(&self.d.matmul(&s), &self.y_means).transpose();
        Ok((x_hat, y_hat))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomized::gaussian_matrix;

    #[test]
    fn rejects_too_many_components() {
        let x = gaussian_matrix(10, 3, 1);
        let y = gaussian_matrix(10, 1, 2);
        let cfg = ApcaConfig::new(Flavor::Supervised, Inference::Local, 5, 1.0);
        assert!(matches!(fit(&cfg, &x, &y), Err(ApcaError::InvalidParameter(_))));
    }

    #[test]
    fn rejects_sample_mismatch_and_negative_mu() {
        let x = gaussian_matrix(10, 3, 1);
        let cfg = ApcaConfig::new(Flavor::Supervised, Inference::Local, 1, 1.0);
        assert!(matches!(fit(&cfg, &x, &gaussian_matrix(9, 1, 2)), Err(ApcaError::Dimension(_))));
        let cfg = ApcaConfig::new(Flavor::Adversarial, Inference::Local, 1, -0.5);
        assert!(matches!(fit(&cfg, &x, &gaussian_matrix(10, 1, 2)), Err(ApcaError::NegativeMu(_))));
    }

    #[test]
    fn approx_precondition_checked() {
        let x = gaussian_matrix(30, 6, 1);
        let y = gaussian_matrix(30, 1, 2);
        let cfg = ApcaConfig::new(Flavor::Supervised, Inference::Local, 2, 1.0).with_decomp(Decomp::approx_default());
        assert!(matches!(fit(&cfg, &x, &y), Err(ApcaError::ApproxPrecondition { .. })));
    }

    #[test]
    fn local_transform_needs_augmenting() {
        let x = gaussian_matrix(12, 3, 1);
        let y = gaussian_matrix(12, 1, 2);
        let model = fit(&ApcaConfig::new(Flavor::Supervised, Inference::Local, 2, 1.0), &x, &y).unwrap();
        let err = model.transform(&x, None).unwrap_err();
        assert!(err.to_string().contains("requires augmenting data"));
        assert_eq!(model.transform(&x, Some(&y)).unwrap().shape(), (12, 2));
    }

    #[test]
    fn zero_loadings_reconstruct_means() {
        let x = gaussian_matrix(6, 3, 4);
        let y = gaussian_matrix(6, 1, 5);
        let mut model = fit(&ApcaConfig::new(Flavor::Supervised, Inference::Encoded, 1, 1.0), &x, &y).unwrap();
        model.w = Matrix::zeros(3, 1);
        model.d = Matrix::zeros(1, 1);
        let (xh, yh) = model.reconstruct(&x, None).unwrap();
        for i in 0..6 {
            assert_eq!(xh.row(i), model.x_means.as_slice());
            assert_eq!(yh.row(i), model.y_means.as_slice());
        }
    }
}
