//! Downstream evaluation: logistic regression on factor scores, accuracy,
//! squared correlation and mu sweeps.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::{argmax, Dataset, Standardizer};
use crate::error::{ApcaError, Result};
use crate::linalg::{dot, Matrix};
use crate::model::{fit, ApcaConfig};

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegSettings {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogRegSettings {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_iter: 500,
            tol: 1e-8,
        }
    }
}

/// Multinomial logistic regression. `weights` is classes x (k + 1) with the
/// bias in the last column.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Matrix,
    pub l2: f64,
    pub iterations_run: usize,
    pub final_grad_norm: f64,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn logits(weights: &Matrix, x: &[f64], out: &mut [f64]) {
    let k = x.len();
    for (c, o) in out.iter_mut().enumerate() {
        let row = weights.row(c);
        *o = dot(&row[..k], x) + row[k];
    }
}

/// Mean cross-entropy plus `l2 / 2` times the squared non-bias weights, and
/// optionally its gradient.
fn loss_and_grad(weights: &Matrix, s: &Matrix, labels: &[usize], l2: f64, grad: Option<&mut Matrix>) -> f64 {
    let (n, k) = s.shape();
    let classes = weights.rows();
    let mut z = vec![0.0; classes];
    let mut loss = 0.0;
    let mut g = grad;
    if let Some(g) = g.as_deref_mut() {
        g.as_mut_slice().fill(0.0);
    }
    for i in 0..n {
        let x = s.row(i);
        logits(weights, x, &mut z);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - z[labels[i]];
        if let Some(g) = g.as_deref_mut() {
            softmax_in_place(&mut z);
            z[labels[i]] -= 1.0;
            for (c, &r) in z.iter().enumerate() {
                let row = g.row_mut(c);
                for (gj, xj) in row[..k].iter_mut().zip(x) {
                    *gj += r * xj;
                }
                row[k] += r;
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    let mut penalty = 0.0;
    for c in 0..classes {
        let row = weights.row(c);
        penalty += dot(&row[..k], &row[..k]);
    }
    if let Some(g) = g {
        for c in 0..classes {
            let w = weights.row(c)[..k].to_vec();
            let row = g.row_mut(c);
            for v in row.iter_mut() {
                *v *= inv_n;
            }
            for (gj, wj) in row[..k].iter_mut().zip(&w) {
                *gj += l2 * wj;
            }
        }
    }
    loss * inv_n + 0.5 * l2 * penalty
}

/// Penalized mean cross-entropy at `weights` (classes x (k + 1)).
pub fn logreg_loss(weights: &Matrix, s: &Matrix, labels: &[usize], l2: f64) -> f64 {
    loss_and_grad(weights, s, labels, l2, None)
}

/// Gradient of [`logreg_loss`].
pub fn logreg_gradient(weights: &Matrix, s: &Matrix, labels: &[usize], l2: f64) -> Matrix {
    let mut g = Matrix::zeros(weights.rows(), weights.cols());
    loss_and_grad(weights, s, labels, l2, Some(&mut g));
    g
}

fn check_labels(s: &Matrix, labels: &[usize], num_classes: usize) -> Result<()> {
    if labels.len() != s.rows() {
        return Err(ApcaError::Dimension(format!(
            "{} labels for {} samples",
            labels.len(),
            s.rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(ApcaError::InvalidParameter(format!(
            "label {bad} out of range for {num_classes} classes"
        )));
    }
    Ok(())
}

/// Full-batch gradient descent with Armijo backtracking from zero weights.
pub fn logreg_fit(s: &Matrix, labels: &[usize], num_classes: usize, settings: LogRegSettings) -> Result<LogRegModel> {
    check_labels(s, labels, num_classes)?;
    if s.cols() == 0 {
        return Err(ApcaError::InvalidParameter("logistic regression needs at least one feature".into()));
    }
    let distinct = {
        let mut seen = vec![false; num_classes];
        labels.iter().for_each(|&l| seen[l] = true);
        seen.into_iter().filter(|&b| b).count()
    };
    if num_classes < 2 || distinct < 2 {
        return Err(ApcaError::TooFewClasses);
    }

    let cols = s.cols() + 1;
    let mut weights = Matrix::zeros(num_classes, cols);
    let mut grad = Matrix::zeros(num_classes, cols);
    let mut loss = loss_and_grad(&weights, s, labels, settings.l2, Some(&mut grad));
    let mut grad_norm = grad.frobenius_norm();
    let mut iterations_run = 0;
    while iterations_run < settings.max_iter && grad_norm > settings.tol {
        let g2 = grad_norm * grad_norm;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = weights.sub(&grad.scale(step));
            let trial_loss = loss_and_grad(&trial, s, labels, settings.l2, None);
            if trial_loss <= loss - ARMIJO_C * step * g2 {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else { break };
        weights = next;
        iterations_run += 1;
        loss = loss_and_grad(&weights, s, labels, settings.l2, Some(&mut grad));
        grad_norm = grad.frobenius_norm();
    }
    Ok(LogRegModel {
        weights,
        l2: settings.l2,
        iterations_run,
        final_grad_norm: grad_norm,
    })
}

impl LogRegModel {
    pub fn num_classes(&self) -> usize {
        self.weights.rows()
    }

    /// Class probabilities, samples x classes.
    pub fn predict_proba(&self, s: &Matrix) -> Result<Matrix> {
        if s.cols() + 1 != self.weights.cols() {
            return Err(ApcaError::Dimension(format!(
                "classifier expects {} features, got {}",
                self.weights.cols() - 1,
                s.cols()
            )));
        }
        let mut out = Matrix::zeros(s.rows(), self.num_classes());
        for i in 0..s.rows() {
            let row = out.row_mut(i);
            logits(&self.weights, s.row(i), row);
            softmax_in_place(row);
        }
        Ok(out)
    }
}

/// Most probable class per sample, lowest index on ties.
pub fn logreg_predict(model: &LogRegModel, s: &Matrix) -> Result<Vec<usize>> {
    if s.cols() + 1 != model.weights.cols() {
        return Err(ApcaError::Dimension(format!(
            "classifier expects {} features, got {}",
            model.weights.cols() - 1,
            s.cols()
        )));
    }
    let mut z = vec![0.0; model.num_classes()];
    Ok((0..s.rows())
        .map(|i| {
            logits(&model.weights, s.row(i), &mut z);
            argmax(&z)
        })
        .collect())
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(ApcaError::Dimension(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(ApcaError::InvalidParameter("accuracy of an empty prediction set".into()));
    }
    let correct = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / pred.len() as f64)
}

/// Squared Pearson correlation; 0 when either side has no variance or there
/// are fewer than two points.
pub fn r_squared(y_true: &[f64], y_pred: &[f64]) -> f64 {
    let n = y_true.len().min(y_pred.len());
    if n < 2 || y_true.len() != y_pred.len() {
        return 0.0;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (ma, mb) = (mean(y_true), mean(y_pred));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in y_true.iter().zip(y_pred) {
        let (da, db) = (a - ma, b - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab * sab / (saa * sbb)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub test_fraction: f64,
    pub split_seed: u64,
    /// z-score primary features with training-split statistics.
    pub standardize: bool,
    pub logreg: LogRegSettings,
}

impl SweepOptions {
    pub fn new(split_seed: u64) -> Self {
        Self {
            test_fraction: 0.5,
            split_seed,
            standardize: true,
            logreg: LogRegSettings::default(),
        }
    }
}

/// Accuracy and per-component squared correlation for each mu.
///
/// `r2[m][j * targets + i]` is the test-split squared correlation between
/// component `j` and augmenting column `i` at `mu_grid[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mu_grid: Vec<f64>,
    pub train_acc: Vec<f64>,
    pub test_acc: Vec<f64>,
    pub components: usize,
    pub targets: usize,
    pub r2: Vec<Vec<f64>>,
}

impl EvalReport {
    pub fn r2_at(&self, row: usize, component: usize, target: usize) -> f64 {
        self.r2[row][component * self.targets + target]
    }

    /// Largest squared correlation of any component with `target`.
    pub fn max_r2(&self, row: usize, target: usize) -> f64 {
        (0..self.components).map(|j| self.r2_at(row, j, target)).fold(0.0, f64::max)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["mu".to_string(), "train_acc".to_string(), "test_acc".to_string()];
        for j in 0..self.components {
            for i in 0..self.targets {
                h.push(format!("r2_c{j}_t{i}"));
            }
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for (m, mu) in self.mu_grid.iter().enumerate() {
            let _ = write!(out, "{mu:?},{:?},{:?}", self.train_acc[m], self.test_acc[m]);
            for v in &self.r2[m] {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Runs the split / standardize / fit / classify protocol once per mu.
pub fn mu_sweep(dataset: &Dataset, template: &ApcaConfig, mu_grid: &[f64], options: SweepOptions) -> Result<EvalReport> {
    if mu_grid.is_empty() {
        return Err(ApcaError::InvalidParameter("mu grid is empty".into()));
    }
    if let Some(&bad) = mu_grid.iter().find(|&&m| !m.is_finite() || m < 0.0) {
        return Err(ApcaError::NegativeMu(bad));
    }
    if mu_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ApcaError::InvalidParameter("mu grid must be strictly ascending".into()));
    }

    let labels = dataset.class_labels();
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let (train_idx, test_idx) = crate::data::train_test_split(dataset.samples(), options.test_fraction, options.split_seed)?;
    let train = dataset.subset(&train_idx);
    let test = dataset.subset(&test_idx);
    let train_labels: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
    let test_labels: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();

    let (x_train, x_test) = if options.standardize {
        let std = Standardizer::fit(&train.x)?;
        (std.apply(&train.x)?, std.apply(&test.x)?)
    } else {
        (train.x.clone(), test.x.clone())
    };

    let targets = dataset.y.cols();
    let mut report = EvalReport {
        mu_grid: mu_grid.to_vec(),
        train_acc: Vec::new(),
        test_acc: Vec::new(),
        components: template.k,
        targets,
        r2: Vec::new(),
    };
    for &mu in mu_grid {
        let config = ApcaConfig { mu, ..*template };
        let model = fit(&config, &x_train, &train.y)?;
        let s_train = model.transform(&x_train, Some(&train.y))?;
        let s_test = model.transform(&x_test, Some(&test.y))?;

        let clf = logreg_fit(&s_train, &train_labels, num_classes, options.logreg)?;
        report.train_acc.push(accuracy(&logreg_predict(&clf, &s_train)?, &train_labels)?);
        report.test_acc.push(accuracy(&logreg_predict(&clf, &s_test)?, &test_labels)?);

        let mut row = Vec::with_capacity(template.k * targets);
        for j in 0..template.k {
            let scores = s_test.column(j);
            for i in 0..targets {
                row.push(r_squared(&test.y.column(i), &scores));
            }
        }
        report.r2.push(row);
    }
    Ok(report)
}
