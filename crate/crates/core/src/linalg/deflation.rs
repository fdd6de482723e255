//! Leading eigenpairs of a (possibly nonsymmetric) square matrix by power
//! iteration with orthogonal deflation.
//!
//! Step `j` iterates on `P B P`, where `P` projects onto the orthogonal
//! complement of the `j - 1` vectors already accepted. The accepted vectors
//! are orthonormal and their span is invariant under `B` (they form a real
//! Schur basis), so for non-normal `B` only the first column is an
//! eigenvector in the strict sense; the recorded residuals show how far the
//! others are.
//!
//! Selection is by algebraic value. When the magnitude-dominant eigenvalue
//! of the current operator is negative it is removed by Wielandt deflation
//! (`C - lambda x y^T` with the matching left vector `y`, `y^T x = 1`), which
//! leaves every other eigenvector of `C` in place, and the search repeats.

use super::eigen::EigenPairs;
use super::matrix::{canonical_sign, dot, norm, Matrix};
use super::power::{power_iterate, PowerSettings, ACCEPTABLE_RESIDUAL};
use crate::error::{ApcaError, Result};
use crate::randomized::RandomStream;

struct Removed {
    value: f64,
    right: Vec<f64>,
    left: Vec<f64>,
}

fn project_out(basis: &[Vec<f64>], v: &mut [f64]) {
    for b in basis {
        let c = dot(b, v);
        v.iter_mut().zip(b).for_each(|(x, bi)| *x -= c * bi);
    }
}

fn random_start(stream: &mut RandomStream, basis: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    stream.fill_gaussian(&mut v);
    project_out(basis, &mut v);
    project_out(basis, &mut v);
    v
}

/// The `k` algebraically largest eigenpairs of `b`.
///
/// Deflation step `j` draws its start vectors from a stream seeded with
/// `seed ^ j`.
pub fn deflated_eigenpairs(b: &Matrix, k: usize, seed: u64, settings: PowerSettings) -> Result<EigenPairs> {
    if !b.is_square() {
        return Err(ApcaError::Dimension(format!(
            "deflation needs a square matrix, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    let n = b.rows();
    if k == 0 || k > n {
        return Err(ApcaError::InvalidParameter(format!(
            "number of eigenpairs {k} must be in 1..={n}"
        )));
    }

    let scale = b.frobenius_norm();
    let zero_tol = 1e-12 * scale;
    let mut bt: Option<Matrix> = None;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    let mut exhausted = false;
    let mut tmp = vec![0.0; n];

    for j in 0..k {
        let mut stream = RandomStream::new(seed ^ j as u64);
        let mut removed: Vec<Removed> = Vec::new();
        let room = n - basis.len();

        let accepted = loop {
            let start = random_start(&mut stream, &basis, n);
            let apply = |v: &[f64], out: &mut [f64], tmp: &mut [f64]| {
                tmp.copy_from_slice(v);
                project_out(&basis, tmp);
                b.matvec_into(tmp, out);
                project_out(&basis, out);
                for r in &removed {
                    let c = r.value * dot(&r.left, tmp);
                    out.iter_mut().zip(&r.right).for_each(|(o, x)| *o -= c * x);
                }
            };
            let run = power_iterate(|v, out| apply(v, out, &mut tmp), start, settings);

            let mut image = vec![0.0; n];
            let mut scratch = vec![0.0; n];
            apply(&run.vector, &mut image, &mut scratch);
            let op_residual = if scale == 0.0 {
                0.0
            } else {
                norm(
                    &image
                        .iter()
                        .zip(&run.vector)
                        .map(|(a, x)| a - run.value * x)
                        .collect::<Vec<_>>(),
                ) / scale
            };
            if !run.converged {
                if op_residual > ACCEPTABLE_RESIDUAL {
                    return Err(ApcaError::NonConvergence {
                        value: run.value,
                        vector: run.vector,
                        residual: op_residual,
                        iterations: run.iterations,
                    });
                }
                exhausted = true;
            }

            if run.value >= -zero_tol {
                break run.vector;
            }
            if removed.len() + 1 >= room {
                // Every remaining eigenvalue is negative; the one found last
                // has the smallest magnitude, so it is the largest.
                let best = removed
                    .iter()
                    .map(|r| (r.value, &r.right))
                    .chain(std::iter::once((run.value, &run.vector)))
                    .max_by(|a, c| a.0.total_cmp(&c.0))
                    .map(|(_, v)| v.clone())
                    .expect("at least one candidate");
                break best;
            }

            // Left vector of the same eigenvalue for Wielandt removal.
            let bt = bt.get_or_insert_with(|| b.transpose());
            let start = random_start(&mut stream, &basis, n);
            let mut tmp_t = vec![0.0; n];
            let left_run = power_iterate(
                |v, out| {
                    tmp_t.copy_from_slice(v);
                    project_out(&basis, &mut tmp_t);
                    bt.matvec_into(&tmp_t, out);
                    project_out(&basis, out);
                    for r in &removed {
                        let c = r.value * dot(&r.right, &tmp_t);
                        out.iter_mut().zip(&r.left).for_each(|(o, y)| *o -= c * y);
                    }
                },
                start,
                settings,
            );
            if !left_run.converged {
                exhausted = true;
            }
            let overlap = dot(&left_run.vector, &run.vector);
            if overlap.abs() < 1e-12 {
                return Err(ApcaError::NonConvergence {
                    value: run.value,
                    vector: run.vector,
                    residual: op_residual,
                    iterations: run.iterations + left_run.iterations,
                });
            }
            let left = left_run.vector.iter().map(|y| y / overlap).collect();
            removed.push(Removed {
                value: run.value,
                right: run.vector,
                left,
            });
        };

        let mut v = accepted;
        project_out(&basis, &mut v);
        project_out(&basis, &mut v);
        let nv = norm(&v);
        if nv == 0.0 {
            return Err(ApcaError::NonConvergence {
                value: 0.0,
                vector: v,
                residual: f64::INFINITY,
                iterations: 0,
            });
        }
        v.iter_mut().for_each(|x| *x /= nv);
        canonical_sign(&mut v);
        values.push(dot(&v, &b.matvec(&v)));
        basis.push(v);
    }

    // Power iteration already yields descending order; a stable sort only
    // repairs round-off ties and leaves the spanned subspace unchanged.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let vectors = Matrix::from_columns(n, &order.iter().map(|&i| basis[i].clone()).collect::<Vec<_>>());
    let residuals = super::eigen::pair_residuals(b, &sorted_values, &vectors);
    Ok(EigenPairs {
        values: sorted_values,
        vectors,
        residuals,
        exhausted,
    })
}
