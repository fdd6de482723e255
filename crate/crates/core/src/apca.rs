//! Augmented decomposition matrices, loading extraction and the closed-form
//! scores, encoder, objectives and gradients.
//!
//! Everything here uses the features x samples orientation: `X` is p x n,
//! `Y` is q x n, `W` is p x k, `D` is q x k, `S` is k x n and `A` is k x p.

use crate::error::{ApcaError, Result};
use crate::linalg::{deflated_eigenpairs, pinv_psd, pinv_sym, pseudo_inverse, sym_eig, EigenPairs, Matrix, PowerSettings, RANK_TOL, SYM_EIG_TOL};

/// Whether the augmenting objective is added (supervised) or subtracted
/// (adversarial).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Supervised,
    Adversarial,
}

impl Flavor {
    /// Weight applied to every augmenting term: `+mu` or `-mu`. Zero stays
    /// positive zero so both flavors agree bit-for-bit at `mu = 0`.
    pub fn signed_mu(self, mu: f64) -> f64 {
        match self {
            _ if mu == 0.0 => 0.0,
            Flavor::Supervised => mu,
            Flavor::Adversarial => -mu,
        }
    }
}

/// How factor scores are inferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Inference {
    /// Scores from `X` and `Y` jointly; needs `Y` at transform time.
    Local,
    /// Scores as a linear encoding `S = A X` of primary data only.
    Encoded,
}

/// Primary and augmenting loadings from one decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Loadings {
    pub w: Matrix,
    pub d: Matrix,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub exhausted: bool,
}

impl Loadings {
    /// Splits stacked `[W; D]` columns at row `p`.
    pub fn from_pairs(pairs: EigenPairs, p: usize) -> Self {
        let (rows, k) = pairs.vectors.shape();
        let v = &pairs.vectors;
        Self {
            w: Matrix::from_fn(p, k, |i, j| v[(i, j)]),
            d: Matrix::from_fn(rows - p, k, |i, j| v[(p + i, j)]),
            eigenvalues: pairs.values,
            residuals: pairs.residuals,
            exhausted: pairs.exhausted,
        }
    }

    pub fn k(&self) -> usize {
        self.w.cols()
    }

    /// Stacked `[W; D]`.
    pub fn stacked(&self) -> Matrix {
        let p = self.w.rows();
        Matrix::from_fn(p + self.d.rows(), self.k(), |i, j| {
            if i < p {
                self.w[(i, j)]
            } else {
                self.d[(i - p, j)]
            }
        })
    }
}

/// Centers each row (feature) of a features x samples matrix.
pub fn demean(m: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Err(ApcaError::Dimension("cannot center a matrix with zero samples".into()));
    }
    let means: Vec<f64> = (0..rows).map(|i| m.row(i).iter().sum::<f64>() / cols as f64).collect();
    let centered = Matrix::from_fn(rows, cols, |i, j| m[(i, j)] - means[i]);
    Ok((centered, means))
}

/// Orthogonal projector `X^T (X X^T)^+ X` onto the row space of `X` (n x n).
pub fn projection_px(x: &Matrix) -> Result<Matrix> {
    Ok(pseudo_inverse(x, RANK_TOL)?.matmul(x))
}

fn check_samples(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.cols() != y.cols() {
        return Err(ApcaError::Dimension(format!(
            "primary data has {} samples but augmenting data has {}",
            x.cols(),
            y.cols()
        )));
    }
    Ok(())
}

fn check_mu(mu: f64) -> Result<()> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(ApcaError::NegativeMu(mu));
    }
    Ok(())
}

/// The (p+q) x (p+q) matrix whose leading eigenvectors are the stacked
/// loadings:
///
/// ```text
/// [ X X^T    m X Y^T ]        local:   T = Y Y^T
/// [ Y X^T    m T     ]        encoded: T = Y P_X Y^T
/// ```
///
/// with `m = mu` for supervised models and `m = -mu` for adversarial ones.
pub fn build_decomposition_matrix(x: &Matrix, y: &Matrix, mu: f64, flavor: Flavor, inference: Inference) -> Result<Matrix> {
    check_samples(x, y)?;
    check_mu(mu)?;
    let p = x.rows();
    let q = y.rows();
    let dim = p + q;
    let n = x.cols();

    let mut stacked = Vec::with_capacity(dim * n);
    stacked.extend_from_slice(x.as_slice());
    stacked.extend_from_slice(y.as_slice());
    let z = Matrix::new(dim, n, stacked)?;
    let mut b = z.gram();

    if inference == Inference::Encoded && q > 0 {
        // Y P_X Y^T = (Y X^+)(X Y^T), never forming the n x n projector.
        let y_xpinv = y.matmul(&pseudo_inverse(x, RANK_TOL)?);
        let t = y_xpinv.matmul(&x.matmul_t(y));
        for i in 0..q {
            for j in 0..q {
                b[(p + i, p + j)] = 0.5 * (t[(i, j)] + t[(j, i)]);
            }
        }
    }

    let m = flavor.signed_mu(mu);
    for i in 0..dim {
        for v in &mut b.row_mut(i)[p..] {
            *v *= m;
        }
    }
    Ok(b)
}

/// Leading `k` stacked loadings of `b` by power iteration with orthogonal
/// deflation, split into `W` (first `p` rows) and `D` (last `q`).
pub fn extract_loadings(b: &Matrix, k: usize, p: usize, q: usize, seed: u64) -> Result<Loadings> {
    extract_loadings_with(b, k, p, q, seed, PowerSettings::default())
}

pub fn extract_loadings_with(b: &Matrix, k: usize, p: usize, q: usize, seed: u64, settings: PowerSettings) -> Result<Loadings> {
    if b.shape() != (p + q, p + q) {
        return Err(ApcaError::Dimension(format!(
            "decomposition matrix is {}x{}, expected {}x{}",
            b.rows(),
            b.cols(),
            p + q,
            p + q
        )));
    }
    if k == 0 || k > p + q {
        return Err(ApcaError::InvalidParameter(format!(
            "number of components {k} must be in 1..={}",
            p + q
        )));
    }
    let pairs = deflated_eigenpairs(b, k, seed, settings)?;
    Ok(Loadings::from_pairs(pairs, p))
}

/// A closed-form solve that may have fallen back to a pseudoinverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub value: Matrix,
    /// The k x k Gram combination was (numerically) singular.
    pub singular_gram: bool,
}

fn check_loading_shapes(w: &Matrix, d: &Matrix, x: &Matrix, y: &Matrix) -> Result<()> {
    check_samples(x, y)?;
    if w.rows() != x.rows() || d.rows() != y.rows() || w.cols() != d.cols() {
        return Err(ApcaError::Dimension(format!(
            "loadings W {:?} / D {:?} do not fit data X {:?} / Y {:?}",
            w.shape(),
            d.shape(),
            x.shape(),
            y.shape()
        )));
    }
    Ok(())
}

/// The k x k combination `W^T W +- mu D^T D` that the closed forms invert.
pub fn loading_gram(w: &Matrix, d: &Matrix, mu: f64, flavor: Flavor) -> Matrix {
    w.t_matmul(w).add(&d.t_matmul(d).scale(flavor.signed_mu(mu)))
}

/// `(W^T W +- mu D^T D)^+` and `W^T X +- mu D^T Y`.
fn gram_terms(w: &Matrix, d: &Matrix, x: &Matrix, y: &Matrix, m: f64) -> Result<(Matrix, bool, Matrix)> {
    let gram = w.t_matmul(w).add(&d.t_matmul(d).scale(m));
    let (inv, singular) = pinv_sym(&gram, RANK_TOL)?;
    let rhs = w.t_matmul(x).add(&d.t_matmul(y).scale(m));
    Ok((inv, singular, rhs))
}

/// Local scores `S = (W^T W +- mu D^T D)^{-1} (W^T X +- mu D^T Y)`.
pub fn local_scores(w: &Matrix, d: &Matrix, x: &Matrix, y: &Matrix, mu: f64, flavor: Flavor) -> Result<Solved> {
    check_loading_shapes(w, d, x, y)?;
    check_mu(mu)?;
    let (inv, singular_gram, rhs) = gram_terms(w, d, x, y, flavor.signed_mu(mu))?;
    Ok(Solved {
        value: inv.matmul(&rhs),
        singular_gram,
    })
}

/// Encoder `A = (W^T W +- mu D^T D)^{-1} (W^T X +- mu D^T Y) X^T (X X^T)^+`.
pub fn encoding_matrix(w: &Matrix, d: &Matrix, x: &Matrix, y: &Matrix, mu: f64, flavor: Flavor) -> Result<Solved> {
    check_loading_shapes(w, d, x, y)?;
    check_mu(mu)?;
    let (inv, singular_gram, rhs) = gram_terms(w, d, x, y, flavor.signed_mu(mu))?;
    let x_pinv = pseudo_inverse(x, RANK_TOL)?;
    Ok(Solved {
        value: inv.matmul(&rhs).matmul(&x_pinv),
        singular_gram,
    })
}

/// Latent side of the objective: explicit scores or an encoder.
#[derive(Debug, Clone, Copy)]
pub enum Latent<'a> {
    Scores(&'a Matrix),
    Encoder(&'a Matrix),
}

impl Latent<'_> {
    fn scores(&self, x: &Matrix) -> Matrix {
        match self {
            Latent::Scores(s) => (*s).clone(),
            Latent::Encoder(a) => a.matmul(x),
        }
    }
}

fn check_latent(w: &Matrix, x: &Matrix, latent: Latent<'_>) -> Result<()> {
    let ok = match latent {
        Latent::Scores(s) => s.shape() == (w.cols(), x.cols()),
        Latent::Encoder(a) => a.shape() == (w.cols(), x.rows()),
    };
    if !ok {
        return Err(ApcaError::Dimension("latent block does not match loadings and data".into()));
    }
    Ok(())
}

/// `||X - W S||_F^2 +- mu ||Y - D S||_F^2`, with `S = A X` for an encoder.
pub fn objective(w: &Matrix, d: &Matrix, latent: Latent<'_>, x: &Matrix, y: &Matrix, mu: f64, flavor: Flavor) -> Result<f64> {
    check_loading_shapes(w, d, x, y)?;
    check_latent(w, x, latent)?;
    let s = latent.scores(x);
    let rx = x.sub(&w.matmul(&s)).frobenius_norm();
    let ry = y.sub(&d.matmul(&s)).frobenius_norm();
    Ok(rx * rx + flavor.signed_mu(mu) * ry * ry)
}

/// Analytic gradients of [`objective`] with respect to each block.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w: Matrix,
    pub d: Matrix,
    /// With respect to `S` (local) or `A` (encoded).
    pub latent: Matrix,
}

pub fn objective_grads(w: &Matrix, d: &Matrix, latent: Latent<'_>, x: &Matrix, y: &Matrix, mu: f64, flavor: Flavor) -> Result<Gradients> {
    check_loading_shapes(w, d, x, y)?;
    check_latent(w, x, latent)?;
    let m = flavor.signed_mu(mu);
    let s = latent.scores(x);
    let ex = x.sub(&w.matmul(&s));
    let ey = y.sub(&d.matmul(&s));
    let grad_w = ex.matmul_t(&s).scale(-2.0);
    let grad_d = ey.matmul_t(&s).scale(-2.0 * m);
    // dL/dS = -2 W^T Ex - 2m D^T Ey
    let grad_s = w.t_matmul(&ex).add(&d.t_matmul(&ey).scale(m)).scale(-2.0);
    let latent_grad = match latent {
        Latent::Scores(_) => grad_s,
        Latent::Encoder(_) => grad_s.matmul_t(x),
    };
    Ok(Gradients {
        w: grad_w,
        d: grad_d,
        latent: latent_grad,
    })
}

/// Relative residuals of the encoded fixed points
/// `W = X X^T A^T (A X X^T A^T)^+` and `D = Y X^T A^T (A X X^T A^T)^+`.
pub fn encoded_fixed_point_residuals(w: &Matrix, d: &Matrix, a: &Matrix, x: &Matrix, y: &Matrix) -> Result<(f64, f64)> {
    check_loading_shapes(w, d, x, y)?;
    let s = a.matmul(x);
    let inner = pinv_psd(&s.gram(), RANK_TOL)?;
    let w_fp = x.matmul_t(&s).matmul(&inner);
    let d_fp = y.matmul_t(&s).matmul(&inner);
    let rel = |target: &Matrix, fp: &Matrix| {
        let scale = target.frobenius_norm();
        let diff = target.sub(fp).frobenius_norm();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    };
    Ok((rel(w, &w_fp), rel(d, &d_fp)))
}

/// Top-`k` principal directions of centered `X` (p x n) from the symmetric
/// eigensolver on `X X^T`.
pub fn pca_loadings(x: &Matrix, k: usize) -> Result<Matrix> {
    if k == 0 || k > x.rows() {
        return Err(ApcaError::InvalidParameter(format!(
            "number of components {k} must be in 1..={}",
            x.rows()
        )));
    }
    let eig = sym_eig(&x.gram(), SYM_EIG_TOL)?;
    Ok(eig.vectors.select_columns(&(0..k).collect::<Vec<_>>()))
}

/// The `m` largest-magnitude entries of loading column `component`, as
/// `(feature index, loading)`. Ties keep the lower feature index first.
pub fn top_loadings(w: &Matrix, component: usize, m: usize) -> Result<Vec<(usize, f64)>> {
    if component >= w.cols() {
        return Err(ApcaError::InvalidParameter(format!(
            "component {component} out of range (model has {})",
            w.cols()
        )));
    }
    if m > w.rows() {
        return Err(ApcaError::InvalidParameter(format!(
            "requested {m} loadings but there are only {} features",
            w.rows()
        )));
    }
    let mut entries: Vec<(usize, f64)> = w.column(component).into_iter().enumerate().collect();
    entries.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    entries.truncate(m);
    Ok(entries)
}
