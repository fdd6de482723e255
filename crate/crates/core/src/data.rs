//! CSV ingestion, preprocessing, splitting and synthetic datasets.
//!
//! All matrices here are samples x features.

use std::path::Path;

use crate::error::{ApcaError, Result};
use crate::linalg::Matrix;
use crate::randomized::{gaussian_matrix, RandomStream};

/// Primary data `x` (samples x p) with augmenting data `y` (samples x q).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Matrix,
    pub feature_names: Option<Vec<String>>,
    pub label_names: Option<Vec<String>>,
    /// Class of each sample, when the dataset has one separate from `y`.
    pub labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(ApcaError::Dimension(format!(
                "primary data has {} samples but augmenting data has {}",
                x.rows(),
                y.rows()
            )));
        }
        Ok(Self {
            x,
            y,
            feature_names: None,
            label_names: None,
            labels: None,
        })
    }

    pub fn samples(&self) -> usize {
        self.x.rows()
    }

    /// Explicit labels, or the argmax of each row of `y` (lowest index on
    /// ties) when `y` is a one-hot style encoding.
    pub fn class_labels(&self) -> Vec<usize> {
        match &self.labels {
            Some(l) => l.clone(),
            None => (0..self.y.rows()).map(|i| argmax(self.y.row(i))).collect(),
        }
    }

    /// Rows `indices` of every per-sample field.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(indices),
            y: self.y.select_rows(indices),
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A parsed CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub matrix: Matrix,
    pub names: Option<Vec<String>>,
}

fn csv_error(path: &Path, message: impl Into<String>) -> ApcaError {
    ApcaError::Csv {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a numeric CSV. Rows in the error messages are 1-based file lines.
pub fn read_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Table> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e.to_string()))?;

    let mut names = None;
    let mut width = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (line, record) in reader.records().enumerate() {
        let line = line + 1;
        let record = record.map_err(|e| csv_error(path, e.to_string()))?;
        if has_header && line == 1 {
            width = Some(record.len());
            names = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(csv_error(
                path,
                format!("ragged row {line}: expected {expected} fields, found {}", record.len()),
            ));
        }
        for (col, cell) in record.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => data.push(v),
                _ => {
                    return Err(csv_error(
                        path,
                        format!("non-numeric value {cell:?} at row {line}, column {}", col + 1),
                    ))
                }
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(csv_error(path, "empty file: no data rows"));
    }
    let matrix = Matrix::new(rows, width.unwrap_or(0), data)?;
    Ok(Table { matrix, names })
}

/// Writes `m` as CSV with shortest round-trip float formatting. An empty or
/// absent name list writes no header.
pub fn write_csv(m: &Matrix, path: impl AsRef<Path>, names: Option<&[String]>) -> Result<()> {
    let path = path.as_ref();
    let names = names.filter(|n| !n.is_empty());
    if let Some(n) = names {
        if n.len() != m.cols() {
            return Err(ApcaError::Dimension(format!(
                "{} column names for a matrix with {} columns",
                n.len(),
                m.cols()
            )));
        }
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e.to_string()))?;
    let io = |e: csv::Error| csv_error(path, e.to_string());
    if let Some(n) = names {
        writer.write_record(n).map_err(io)?;
    }
    for i in 0..m.rows() {
        writer.write_record(m.row(i).iter().map(|v| format!("{v:?}"))).map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}

/// One row per label with a single 1 in column `label`.
pub fn one_hot(labels: &[usize], num_classes: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(labels.len(), num_classes);
    for (i, &label) in labels.iter().enumerate() {
        if label >= num_classes {
            return Err(ApcaError::InvalidParameter(format!(
                "label {label} at sample {i} out of range for {num_classes} classes"
            )));
        }
        m.row_mut(i)[label] = 1.0;
    }
    Ok(m)
}

/// Per-column z-scoring with population statistics. Constant columns keep a
/// unit scale so they pass through centered.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 2 {
            return Err(ApcaError::InvalidParameter(format!(
                "standardization needs at least 2 samples, got {n}"
            )));
        }
        let mut means = vec![0.0; p];
        for i in 0..n {
            for (m, v) in means.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut vars = vec![0.0; p];
        for i in 0..n {
            for ((s, v), m) in vars.iter_mut().zip(x.row(i)).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stds = vars
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { means, stds })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.means.len() {
            return Err(ApcaError::Dimension(format!(
                "standardizer fitted on {} columns, got {}",
                self.means.len(),
                x.cols()
            )));
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| (x[(i, j)] - self.means[j]) / self.stds[j]))
    }
}

/// Deterministic shuffled partition of `0..n`. The test set is the first
/// `round(n * test_fraction)` entries of a Fisher–Yates permutation; both
/// index lists are returned sorted.
pub fn train_test_split(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(ApcaError::InvalidParameter(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    if n < 2 {
        return Err(ApcaError::InvalidParameter(format!("cannot split {n} samples")));
    }
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(ApcaError::InvalidParameter(format!(
            "split of {n} samples at fraction {test_fraction} leaves an empty {} set",
            if n_test == 0 { "test" } else { "train" }
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = RandomStream::new(seed);
    for i in (1..n).rev() {
        let j = rng.next_below(i + 1);
        perm.swap(i, j);
    }
    let mut test = perm[..n_test].to_vec();
    let mut train = perm[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

fn check_synth_bounds(n: usize, p: usize) -> Result<()> {
    if p < 3 || n < 20 {
        return Err(ApcaError::InvalidParameter(format!(
            "synthetic data needs p >= 3 and n >= 20 (got p = {p}, n = {n})"
        )));
    }
    Ok(())
}

pub const SYNTH_SUPERVISED_DEFAULTS: (usize, usize, f64) = (400, 20, 5.0);
pub const SYNTH_ADVERSARIAL_DEFAULTS: (usize, usize) = (400, 20);

/// Two-class data where PCA is distracted by nuisance structure.
///
/// For sample `i` with class `c ~ Bernoulli(1/2)`:
///
/// - `x[i, 0] = (2c - 1) + 0.3 e` carries the class;
/// - `x[i, j] = f1 + b_j f2 + 0.2 s e_j` for `j >= 1`, with shared nuisance
///   factors `f1 ~ N(0, s^2)`, `f2 ~ N(0, (0.7 s)^2)` and `b_j = +1, -1, ...`
///   alternating;
///
/// where `s = noise_scale` and every `e` is an independent standard normal.
/// `y` is the one-hot class matrix.
pub fn synth_supervised(n: usize, p: usize, noise_scale: f64, seed: u64) -> Result<Dataset> {
    check_synth_bounds(n, p)?;
    if !noise_scale.is_finite() || noise_scale < 0.0 {
        return Err(ApcaError::InvalidParameter(format!("noise scale must be >= 0, got {noise_scale}")));
    }
    let mut rng = RandomStream::new(seed);
    let mut labels = Vec::with_capacity(n);
    let mut x = Matrix::zeros(n, p);
    let mut noise = vec![0.0; p + 2];
    for i in 0..n {
        let c = (rng.next_u64() >> 63) as usize;
        labels.push(c);
        rng.fill_gaussian(&mut noise);
        let f1 = noise_scale * noise[p];
        let f2 = 0.7 * noise_scale * noise[p + 1];
        let row = x.row_mut(i);
        row[0] = (2.0 * c as f64 - 1.0) + 0.3 * noise[0];
        for j in 1..p {
            let b = if j % 2 == 1 { 1.0 } else { -1.0 };
            row[j] = f1 + b * f2 + 0.2 * noise_scale * noise[j];
        }
    }
    let y = one_hot(&labels, 2)?;
    let mut ds = Dataset::new(x, y)?;
    ds.feature_names = Some((0..p).map(|j| format!("x{j}")).collect());
    ds.label_names = Some(vec!["class0".into(), "class1".into()]);
    ds.labels = Some(labels);
    Ok(ds)
}

/// Two-class data dominated by a scalar concomitant variable.
///
/// For sample `i` with concomitant `t ~ N(0, 1)` and class `c ~ Bernoulli(1/2)`:
///
/// - `x[i, j] = 5 t + 0.5 e_j` for `j < h = ceil(p / 2)`;
/// - `x[i, j] = (2c - 1) + 0.5 e_j` for `j >= h`;
///
/// with independent standard normals `e_j`. `y` is the single column `t` and
/// `labels` holds `c`.
pub fn synth_adversarial(n: usize, p: usize, seed: u64) -> Result<Dataset> {
    check_synth_bounds(n, p)?;
    let h = p.div_ceil(2);
    let mut rng = RandomStream::new(seed);
    let mut labels = Vec::with_capacity(n);
    let mut x = Matrix::zeros(n, p);
    let mut y = Matrix::zeros(n, 1);
    let mut noise = vec![0.0; p + 1];
    for i in 0..n {
        let c = (rng.next_u64() >> 63) as usize;
        labels.push(c);
        rng.fill_gaussian(&mut noise);
        let t = noise[p];
        y.row_mut(i)[0] = t;
        let sign = 2.0 * c as f64 - 1.0;
        let row = x.row_mut(i);
        for j in 0..p {
            let signal = if j < h { 5.0 * t } else { sign };
            row[j] = signal + 0.5 * noise[j];
        }
    }
    let mut ds = Dataset::new(x, y)?;
    ds.feature_names = Some((0..p).map(|j| format!("x{j}")).collect());
    ds.label_names = Some(vec!["concomitant".into()]);
    ds.labels = Some(labels);
    Ok(ds)
}

/// Independent standard normal `x` (n x p) and `y` (n x q), the workload
/// used for fit-time comparisons. `y` draws from seed `seed + 1`.
pub fn gaussian_dataset(n: usize, p: usize, q: usize, seed: u64) -> Result<Dataset> {
    Dataset::new(gaussian_matrix(n, p, seed), gaussian_matrix(n, q, seed.wrapping_add(1)))
}
