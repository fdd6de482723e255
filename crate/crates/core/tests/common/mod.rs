#![allow(dead_code)]

use apca_core::apca::{Flavor, Inference};
use apca_core::linalg::{sym_eig, Matrix};
use apca_core::randomized::gaussian_matrix;

pub const FLAVORS: [Flavor; 2] = [Flavor::Supervised, Flavor::Adversarial];
pub const INFERENCES: [Inference; 2] = [Inference::Local, Inference::Encoded];

/// Row-centered features x samples data.
pub fn centered(p: usize, n: usize, seed: u64) -> Matrix {
    let m = gaussian_matrix(p, n, seed);
    let means: Vec<f64> = (0..p).map(|i| m.row(i).iter().sum::<f64>() / n as f64).collect();
    Matrix::from_fn(p, n, |i, j| m[(i, j)] - means[i])
}

/// Top-k eigenvectors of X X^T from the Jacobi solver.
pub fn pca_basis(x: &Matrix, k: usize) -> Matrix {
    let eig = sym_eig(&x.gram(), 1e-15).unwrap();
    eig.vectors.select_columns(&(0..k).collect::<Vec<_>>())
}

/// Symmetric matrix with the given spectrum and a random orthonormal basis.
pub fn with_spectrum(values: &[f64], seed: u64) -> Matrix {
    let n = values.len();
    let (q, _) = apca_core::linalg::householder_qr(&gaussian_matrix(n, n, seed)).unwrap();
    let scaled = Matrix::from_fn(n, n, |i, j| q[(i, j)] * values[j]);
    let b = scaled.matmul_t(&q);
    Matrix::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]))
}

/// Central finite-difference gradient of `f` at `m`.
pub fn numeric_grad(m: &Matrix, h: f64, mut f: impl FnMut(&Matrix) -> f64) -> Matrix {
    let mut g = Matrix::zeros(m.rows(), m.cols());
    let mut probe = m.clone();
    for idx in 0..m.as_slice().len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + h;
        let up = f(&probe);
        probe.as_mut_slice()[idx] = orig - h;
        let down = f(&probe);
        probe.as_mut_slice()[idx] = orig;
        g.as_mut_slice()[idx] = (up - down) / (2.0 * h);
    }
    g
}

pub fn rel_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(1e-300)
}
