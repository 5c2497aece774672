//! Datasets: seeded synthetic generators and the LIBSVM text reader.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seeded generator used for every synthetic draw.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataSource {
    Synthetic { seed: u64 },
    File(PathBuf),
}

/// Dense labelled data, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Array1<f64>,
    pub source: DataSource,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Labels are ±1 and no entry is NaN.
    pub fn validate_classification(&self) -> Result<()> {
        if self.labels.len() != self.features.nrows() {
            return Err(Error::BadShape(format!(
                "{} labels for {} samples",
                self.labels.len(),
                self.features.nrows()
            )));
        }
        if self.labels.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::BadShape("SVM labels must be -1 or +1".into()));
        }
        if self.features.iter().any(|v| v.is_nan()) {
            return Err(Error::BadShape("features contain NaN".into()));
        }
        Ok(())
    }
}

/// A lasso instance `y = A x̂` with `s` zero entries in `x̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoData {
    pub a: Array2<f64>,
    pub y: Array1<f64>,
    pub x_hat: Array1<f64>,
}

/// Standard-normal `A` (n×m) and `x̂` with exactly `s` zeros at random positions.
pub fn generate_lasso_data(n: usize, m: usize, s: usize, seed: u64) -> Result<LassoData> {
    if s >= m {
        return Err(Error::BadShape(format!("need s < m, got s = {s}, m = {m}")));
    }
    let mut rng = rng_from_seed(seed);
    let a = Array2::from_shape_simple_fn((n, m), || StandardNormal.sample(&mut rng));
    let zeros = rand::seq::index::sample(&mut rng, m, s);
    let mut x_hat: Array1<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    for i in zeros.iter() {
        x_hat[i] = 0.0;
    }
    let y = a.dot(&x_hat);
    Ok(LassoData { a, y, x_hat })
}

/// Two Gaussian blobs with unit covariance whose centres are ±`separation`/√d · 1.
///
/// Rows alternate between the +1 and −1 classes.
pub fn generate_blobs(n: usize, d: usize, separation: f64, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let shift = separation / (d.max(1) as f64).sqrt();
    let labels: Array1<f64> = (0..n)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let mut features = Array2::zeros((n, d));
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        for v in row.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = labels[i] * shift + z;
        }
    }
    Dataset {
        features,
        labels,
        source: DataSource::Synthetic { seed },
    }
}

fn coerce_label(raw: f64) -> Option<f64> {
    if raw == 1.0 {
        Some(1.0)
    } else if raw == -1.0 || raw == 0.0 {
        Some(-1.0)
    } else {
        None
    }
}

/// Parse LIBSVM sparse text (`label idx:val ...`, 1-based ascending indices).
///
/// Labels `+1` and `-1` are kept and `0` maps to `-1`; any other label is a
/// parse error. Blank lines are skipped; `#` starts a comment. The feature
/// dimension is the largest index seen unless `dim` is given.
pub fn parse_libsvm_str(text: &str, dim: Option<usize>) -> Result<(Array2<f64>, Array1<f64>)> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    for (lineno, raw_line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| Error::ParseError {
            line: line_no,
            message,
        };
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line");
        let raw_label: f64 = label_tok
            .parse()
            .map_err(|_| err(format!("invalid label `{label_tok}`")))?;
        let label = coerce_label(raw_label)
            .ok_or_else(|| err(format!("label `{label_tok}` is not -1, 0 or +1")))?;
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected `index:value`, found `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("invalid feature index `{idx}`")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            if idx <= last {
                return Err(err(format!("feature index {idx} is not ascending")));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("invalid feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite feature value `{val}`")));
            }
            if let Some(d) = dim {
                if idx > d {
                    return Err(err(format!("feature index {idx} exceeds dimension {d}")));
                }
            }
            last = idx;
            max_index = max_index.max(idx);
            entries.push((idx, val));
        }
        rows.push(entries);
        labels.push(label);
    }
    let d = dim.unwrap_or(max_index);
    let mut features = Array2::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[[i, j - 1]] = v;
        }
    }
    Ok((features, Array1::from(labels)))
}

/// Read a LIBSVM file into a dense classification dataset.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let (features, labels) = parse_libsvm_str(&text, None)?;
    Ok(Dataset {
        features,
        labels,
        source: DataSource::File(path.to_path_buf()),
    })
}

/// Render a dataset as LIBSVM text, omitting zero entries.
pub fn to_libsvm_string(data: &Dataset) -> String {
    let mut out = String::new();
    for (row, &label) in data.features.rows().into_iter().zip(data.labels.iter()) {
        out.push_str(if label > 0.0 { "+1" } else { "-1" });
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                let _ = write!(out, " {}:{:e}", j + 1, v);
            }
        }
        out.push('\n');
    }
    out
}
