//! Dataset ingestion, trial splitting and synthetic regression tasks.

use std::path::Path;

use log::info;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub targets: DVector<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

impl Dataset {
    pub fn new(
        features: DMatrix<f64>,
        targets: DVector<f64>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Empty("dataset has no rows"));
        }
        if features.ncols() == 0 {
            return Err(Error::Empty("dataset has no features"));
        }
        crate::error::ensure_len("targets", features.nrows(), targets.len())?;
        crate::error::ensure_len("feature names", features.ncols(), feature_names.len())?;
        if features
            .iter()
            .chain(targets.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Dataset {
            features,
            targets,
            feature_names,
            target_name: target_name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Writes the dataset as a headed CSV (features, then target).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = self.feature_names.clone();
        header.push(self.target_name.clone());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.features.row(i).iter().map(|v| v.to_string()).collect();
            row.push(self.targets[i].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column selection for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CsvSpec {
    pub target: String,
    /// Explicit feature columns. When absent, every other numeric column is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<String>>,
    /// Columns never used as features (e.g. alternative targets).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude: Vec<String>,
    /// Keep only the first this-many usable rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub dropped_columns: Vec<String>,
}

fn parse_cell(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a headed, comma-separated file. Rows with a missing or non-numeric
/// value in any selected column are dropped and counted.
pub fn load_csv(path: impl AsRef<Path>, spec: &CsvSpec) -> Result<(Dataset, LoadReport)> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::Data(format!("file not found: {}", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let records: Vec<csv::StringRecord> =
        reader.records().collect::<std::result::Result<_, _>>()?;

    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("column {name:?} not found in {}", path.display())))
    };
    let target_col = col(&spec.target)?;

    let mut report = LoadReport {
        rows_read: records.len(),
        ..Default::default()
    };
    let feature_cols: Vec<usize> = match &spec.features {
        Some(names) => names.iter().map(|n| col(n)).collect::<Result<_>>()?,
        None => {
            let mut cols = Vec::new();
            for (j, name) in header.iter().enumerate() {
                if j == target_col || spec.exclude.contains(name) {
                    continue;
                }
                let (mut numeric, mut present) = (0usize, 0usize);
                for r in &records {
                    if let Some(cell) = r.get(j).filter(|c| !c.trim().is_empty()) {
                        present += 1;
                        numeric += usize::from(parse_cell(cell).is_some());
                    }
                }
                if present > 0 && 2 * numeric >= present {
                    cols.push(j);
                } else {
                    report.dropped_columns.push(name.clone());
                }
            }
            cols
        }
    };
    if feature_cols.is_empty() {
        return Err(Error::Data("no numeric feature columns".into()));
    }

    let limit = spec.row_limit.unwrap_or(usize::MAX);
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for r in &records {
        if ys.len() >= limit {
            break;
        }
        let y = r.get(target_col).and_then(parse_cell);
        let row: Option<Vec<f64>> = feature_cols
            .iter()
            .map(|&j| r.get(j).and_then(parse_cell))
            .collect();
        match (y, row) {
            (Some(y), Some(row)) => {
                ys.push(y);
                xs.extend(row);
            }
            _ => report.rows_dropped += 1,
        }
    }
    if ys.is_empty() {
        return Err(Error::Data(format!("no usable rows in {}", path.display())));
    }
    if report.rows_dropped > 0 {
        info!(
            "{}: dropped {} incomplete rows",
            path.display(),
            report.rows_dropped
        );
    }
    let d = feature_cols.len();
    let features = DMatrix::from_row_slice(ys.len(), d, &xs);
    let names = feature_cols.iter().map(|&j| header[j].clone()).collect();
    let ds = Dataset::new(features, DVector::from_vec(ys), names, spec.target.clone())?;
    Ok((ds, report))
}

/// Row indices of one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub test: Vec<usize>,
}

/// One trial: labeled pairs, unlabeled inputs (outputs discarded), and a
/// labeled test set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSplit {
    pub labeled_x: DMatrix<f64>,
    pub labeled_y: DVector<f64>,
    pub unlabeled_x: DMatrix<f64>,
    pub test_x: DMatrix<f64>,
    pub test_y: DVector<f64>,
    pub indices: SplitIndices,
    pub seed: u64,
}

/// How many of the remaining rows form the test set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TestPolicy {
    pub max_test: Option<usize>,
}

/// Seeded permutation: first `n` rows labeled, next `n_unlab` unlabeled, the
/// rest (optionally capped) test.
pub fn split_trial(
    dataset: &Dataset,
    n: usize,
    n_unlab: usize,
    policy: TestPolicy,
    seed: u64,
) -> Result<TrialSplit> {
    let total = dataset.len();
    if n == 0 {
        return Err(Error::Config("need at least one labeled row".into()));
    }
    if n + n_unlab >= total {
        return Err(Error::Data(format!(
            "{total} rows cannot supply {n} labeled + {n_unlab} unlabeled rows and a test set"
        )));
    }
    let mut perm: Vec<usize> = (0..total).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let rest = &perm[n + n_unlab..];
    let n_test = policy.max_test.map_or(rest.len(), |m| m.min(rest.len()));
    if n_test == 0 {
        return Err(Error::Config("test policy leaves no test rows".into()));
    }
    let indices = SplitIndices {
        labeled: perm[..n].to_vec(),
        unlabeled: perm[n..n + n_unlab].to_vec(),
        test: rest[..n_test].to_vec(),
    };
    Ok(TrialSplit {
        labeled_x: dataset.features.select_rows(&indices.labeled),
        labeled_y: dataset.targets.select_rows(&indices.labeled),
        unlabeled_x: dataset.features.select_rows(&indices.unlabeled),
        test_x: dataset.features.select_rows(&indices.test),
        test_y: dataset.targets.select_rows(&indices.test),
        indices,
        seed,
    })
}

/// Noiseless regression function of a synthetic task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetFunction {
    Zero,
    Constant {
        value: f64,
    },
    /// `Σ_j a_j x_j`.
    Linear {
        coefficients: Vec<f64>,
    },
    /// `amplitude · sin(frequency · x_0)`.
    Sine {
        amplitude: f64,
        frequency: f64,
    },
    /// `Σ_j h_j exp(−‖x − c_j‖² / (2 s²))`.
    Bumps {
        centers: Vec<Vec<f64>>,
        heights: Vec<f64>,
        scale: f64,
    },
    /// Pointwise sum of several targets.
    Sum {
        terms: Vec<TargetFunction>,
    },
}

impl TargetFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TargetFunction::Zero => 0.0,
            TargetFunction::Constant { value } => *value,
            TargetFunction::Linear { coefficients } => {
                coefficients.iter().zip(x).map(|(a, v)| a * v).sum()
            }
            TargetFunction::Sine {
                amplitude,
                frequency,
            } => amplitude * (frequency * x[0]).sin(),
            TargetFunction::Bumps {
                centers,
                heights,
                scale,
            } => centers
                .iter()
                .zip(heights)
                .map(|(c, h)| {
                    let d2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                    h * (-d2 / (2.0 * scale * scale)).exp()
                })
                .sum(),
            TargetFunction::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }
}

/// Input distribution of a synthetic task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputDistribution {
    /// Independent uniform coordinates on `[low, high]`.
    Uniform { low: f64, high: f64 },
    /// Independent N(0, sd²) coordinates.
    Normal { sd: f64 },
    /// Equal-weight mixture of isotropic Gaussians.
    Clusters { centers: Vec<Vec<f64>>, sd: f64 },
}

impl InputDistribution {
    fn sample(&self, dim: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match self {
            InputDistribution::Uniform { low, high } => {
                if low.is_nan() || high.is_nan() || low >= high {
                    return Err(Error::Config(format!(
                        "uniform inputs need low < high, got [{low}, {high}]"
                    )));
                }
                Ok((0..dim).map(|_| rng.random_range(*low..*high)).collect())
            }
            InputDistribution::Normal { sd } => {
                let normal = Normal::new(0.0, *sd).map_err(|e| Error::Config(e.to_string()))?;
                Ok((0..dim).map(|_| normal.sample(rng)).collect())
            }
            InputDistribution::Clusters { centers, sd } => {
                if centers.is_empty() {
                    return Err(Error::Config("cluster distribution has no centers".into()));
                }
                let normal = Normal::new(0.0, *sd).map_err(|e| Error::Config(e.to_string()))?;
                let c = &centers[rng.random_range(0..centers.len())];
                if c.len() != dim {
                    return Err(Error::Config(format!(
                        "cluster center has {} coordinates, task has {dim}",
                        c.len()
                    )));
                }
                Ok(c.iter().map(|m| m + normal.sample(rng)).collect())
            }
        }
    }
}

/// `y = f(x) + ε`, ε ~ N(0, σ²), fully determined by `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTask {
    pub target: TargetFunction,
    pub noise_sd: f64,
    pub inputs: InputDistribution,
    pub dim: usize,
    pub seed: u64,
}

/// Noiseless function values at every generated point.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub f_labeled: DVector<f64>,
    pub f_unlabeled: DVector<f64>,
    pub f_test: DVector<f64>,
    pub noise_sd: f64,
}

impl SyntheticTask {
    /// Draws `rows` points with noisy outputs; returns the dataset and f(x).
    pub fn sample_dataset(&self, rows: usize) -> Result<(Dataset, DVector<f64>)> {
        if self.dim == 0 {
            return Err(Error::Config("synthetic task needs dim ≥ 1".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config(format!(
                "noise sd must be ≥ 0, got {}",
                self.noise_sd
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, self.noise_sd).map_err(|e| Error::Config(e.to_string()))?;
        let mut xs = Vec::with_capacity(rows * self.dim);
        let mut f = Vec::with_capacity(rows);
        let mut y = Vec::with_capacity(rows);
        for _ in 0..rows {
            let x = self.inputs.sample(self.dim, &mut rng)?;
            let fx = self.target.eval(&x);
            let eps = if self.noise_sd > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            xs.extend_from_slice(&x);
            f.push(fx);
            y.push(fx + eps);
        }
        let names = (0..self.dim).map(|j| format!("x{j}")).collect();
        let ds = Dataset::new(
            DMatrix::from_row_slice(rows, self.dim, &xs),
            DVector::from_vec(y),
            names,
            "y",
        )?;
        Ok((ds, DVector::from_vec(f)))
    }
}

/// Generates a trial directly from a synthetic task.
pub fn generate_synthetic(
    task: &SyntheticTask,
    n: usize,
    n_unlab: usize,
    n_test: usize,
) -> Result<(TrialSplit, GroundTruth)> {
    if n_test == 0 {
        return Err(Error::Config("synthetic trial needs n_test ≥ 1".into()));
    }
    let total = n + n_unlab + n_test;
    let (ds, f) = task.sample_dataset(total)?;
    // Rows are already i.i.d., so the split is positional.
    let labeled: Vec<usize> = (0..n).collect();
    let unlabeled: Vec<usize> = (n..n + n_unlab).collect();
    let test: Vec<usize> = (n + n_unlab..total).collect();
    let split = TrialSplit {
        labeled_x: ds.features.select_rows(&labeled),
        labeled_y: ds.targets.select_rows(&labeled),
        unlabeled_x: ds.features.select_rows(&unlabeled),
        test_x: ds.features.select_rows(&test),
        test_y: ds.targets.select_rows(&test),
        indices: SplitIndices {
            labeled: labeled.clone(),
            unlabeled: unlabeled.clone(),
            test: test.clone(),
        },
        seed: task.seed,
    };
    let truth = GroundTruth {
        f_labeled: f.select_rows(&labeled),
        f_unlabeled: f.select_rows(&unlabeled),
        f_test: f.select_rows(&test),
        noise_sd: task.noise_sd,
    };
    Ok((split, truth))
}
