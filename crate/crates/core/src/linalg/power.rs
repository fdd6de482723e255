use super::matrix::{canonical_sign, dot, norm, Matrix};
use crate::error::{ApcaError, Result};
use crate::randomized::RandomStream;

/// Residual below which an exhausted iteration is still accepted.
pub const ACCEPTABLE_RESIDUAL: f64 = 1e-6;

/// Stopping rule for power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSettings {
    /// Bound on the sign-aligned change of the unit iterate.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PowerRun {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on an implicit operator, starting from `start`.
///
/// The eigenvalue estimate is the Rayleigh quotient of the unit iterate.
/// An iterate the operator maps to zero is an exact null vector and is
/// returned immediately with value 0.
pub(crate) fn power_iterate<F>(mut apply: F, start: Vec<f64>, settings: PowerSettings) -> PowerRun
where
    F: FnMut(&[f64], &mut [f64]),
{
    let dim = start.len();
    let mut v = start;
    let n0 = norm(&v);
    if n0 > 0.0 {
        v.iter_mut().for_each(|x| *x /= n0);
    } else if dim > 0 {
        v[0] = 1.0;
    }
    let mut w = vec![0.0; dim];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < settings.max_iter {
        iterations += 1;
        apply(&v, &mut w);
        let nw = norm(&w);
        if nw == 0.0 || !nw.is_finite() {
            converged = nw == 0.0;
            break;
        }
        w.iter_mut().for_each(|x| *x /= nw);
        // Negative eigenvalues flip the iterate each step; compare up to sign.
        if dot(&w, &v) < 0.0 {
            w.iter_mut().for_each(|x| *x = -*x);
        }
        let change = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut v, &mut w);
        if change <= settings.tol {
            converged = true;
            break;
        }
    }

    apply(&v, &mut w);
    let value = dot(&v, &w);
    PowerRun {
        value,
        vector: v,
        iterations,
        converged,
    }
}

/// Leading (largest-magnitude) eigenpair of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantPair {
    pub value: f64,
    /// Unit vector, largest entry positive.
    pub vector: Vec<f64>,
    /// `||B v - lambda v||_2 / ||B||_F`.
    pub residual: f64,
    pub iterations: usize,
    /// The iteration budget ran out but the residual was acceptable.
    pub exhausted: bool,
}

/// Dominant eigenpair of `b` by power iteration from a seeded Gaussian start.
///
/// Fails with [`ApcaError::NonConvergence`] (carrying the best estimate)
/// when `max_iter` is reached and the residual is still above 1e-6, which
/// usually means the leading eigenvalues are nearly tied in magnitude.
pub fn dominant_eigenpair(b: &Matrix, settings: PowerSettings, seed: u64) -> Result<DominantPair> {
    if !b.is_square() {
        return Err(ApcaError::Dimension(format!(
            "dominant eigenpair needs a square matrix, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    let n = b.rows();
    let mut start = vec![0.0; n];
    RandomStream::new(seed).fill_gaussian(&mut start);

    let run = power_iterate(|v, out| b.matvec_into(v, out), start, settings);
    let mut vector = run.vector;
    canonical_sign(&mut vector);
    let residual = residual_of(b, run.value, &vector);

    if !run.converged && residual > ACCEPTABLE_RESIDUAL {
        return Err(ApcaError::NonConvergence {
            value: run.value,
            vector,
            residual,
            iterations: run.iterations,
        });
    }
    Ok(DominantPair {
        value: run.value,
        vector,
        residual,
        iterations: run.iterations,
        exhausted: !run.converged,
    })
}

pub(crate) fn residual_of(b: &Matrix, value: f64, v: &[f64]) -> f64 {
    let scale = b.frobenius_norm();
    if scale == 0.0 {
        return 0.0;
    }
    let bv = b.matvec(v);
    let r: f64 = bv
        .iter()
        .zip(v)
        .map(|(a, x)| (a - value * x).powi(2))
        .sum::<f64>()
        .sqrt();
    r / scale
}
