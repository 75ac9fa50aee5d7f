//! Gaussian kernels centered on labeled and unlabeled inputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};

/// Common kernel width τ in `exp(−‖x − c‖² / τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    width: f64,
}

impl KernelConfig {
    pub fn new(width: f64) -> Result<Self> {
        check_width(width)?;
        Ok(KernelConfig { width })
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}

fn check_width(width: f64) -> Result<()> {
    if width > 0.0 && width.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "kernel width must be positive and finite, got {width}"
        )))
    }
}

/// `exp(−‖x − center‖² / width)`.
pub fn gaussian_kernel(x: &[f64], center: &[f64], width: f64) -> Result<f64> {
    check_width(width)?;
    ensure_len("kernel point", center.len(), x.len())?;
    Ok(kernel_unchecked(
        x.iter().copied(),
        center.iter().copied(),
        width,
    ))
}

#[inline]
fn kernel_unchecked(x: impl Iterator<Item = f64>, c: impl Iterator<Item = f64>, width: f64) -> f64 {
    let d2: f64 = x.zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / width).exp()
}

/// Kernel centers, one per row: labeled inputs first, then unlabeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSet {
    centers: DMatrix<f64>,
    n_labeled: usize,
}

impl CenterSet {
    pub fn new(centers: DMatrix<f64>, n_labeled: usize) -> Result<Self> {
        if n_labeled == 0 {
            return Err(Error::Empty("labeled centers"));
        }
        if centers.nrows() < n_labeled {
            return Err(Error::Config(format!(
                "{} centers cannot hold {n_labeled} labeled centers",
                centers.nrows()
            )));
        }
        if centers.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("centers"));
        }
        Ok(CenterSet { centers, n_labeled })
    }

    /// Stacks labeled rows above unlabeled rows.
    pub fn from_parts(labeled: &DMatrix<f64>, unlabeled: &DMatrix<f64>) -> Result<Self> {
        if unlabeled.nrows() > 0 {
            ensure_len(
                "unlabeled feature count",
                labeled.ncols(),
                unlabeled.ncols(),
            )?;
        }
        let d = labeled.ncols();
        let n = labeled.nrows();
        let mut centers = DMatrix::zeros(n + unlabeled.nrows(), d);
        centers.rows_mut(0, n).copy_from(labeled);
        if unlabeled.nrows() > 0 {
            centers.rows_mut(n, unlabeled.nrows()).copy_from(unlabeled);
        }
        Self::new(centers, n)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    pub fn n_labeled(&self) -> usize {
        self.n_labeled
    }

    /// The labeled-only prefix.
    pub fn labeled_only(&self) -> CenterSet {
        CenterSet {
            centers: self.centers.rows(0, self.n_labeled).into_owned(),
            n_labeled: self.n_labeled,
        }
    }
}

/// Gram-type matrix `G[i, k] = g_k(x_i)`, rows = inputs, columns = centers.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix(pub DMatrix<f64>);

impl DesignMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Copy of the selected rows.
    pub fn select_rows(&self, rows: &[usize]) -> DMatrix<f64> {
        self.0.select_rows(rows)
    }
}

pub fn build_design_matrix(
    rows: &DMatrix<f64>,
    centers: &CenterSet,
    config: &KernelConfig,
) -> Result<DesignMatrix> {
    ensure_len("input dimension", centers.dim(), rows.ncols())?;
    let (n, d) = rows.shape();
    let p = centers.len();
    let width = config.width();
    // Row-major copies keep the inner distance loop contiguous.
    let xs: Vec<f64> = (0..n)
        .flat_map(|i| (0..d).map(move |j| rows[(i, j)]))
        .collect();
    let cs: Vec<f64> = (0..p)
        .flat_map(|k| (0..d).map(move |j| centers.matrix()[(k, j)]))
        .collect();
    let g = DMatrix::from_fn(n, p, |i, k| {
        let x = &xs[i * d..(i + 1) * d];
        let c = &cs[k * d..(k + 1) * d];
        kernel_unchecked(x.iter().copied(), c.iter().copied(), width)
    });
    Ok(DesignMatrix(g))
}

/// Which inputs the z-score statistics are computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationScope {
    /// Labeled and unlabeled inputs pooled.
    #[default]
    LabeledAndUnlabeled,
    LabeledOnly,
}

/// Per-feature affine map `(x − mean) / sd`; constant features map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub means: Vec<f64>,
    /// Population standard deviations; 0 marks a constant feature.
    pub scales: Vec<f64>,
}

impl NormalizationParams {
    pub fn fit(x: &DMatrix<f64>) -> Result<Self> {
        let (m, d) = x.shape();
        if m < 2 {
            return Err(Error::Empty("normalization needs at least 2 rows"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let mut means = Vec::with_capacity(d);
        let mut scales = Vec::with_capacity(d);
        for col in x.column_iter() {
            let mean = col.sum() / m as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
            let sd = var.sqrt();
            means.push(mean);
            scales.push(if sd > 1e-12 * mean.abs().max(1.0) {
                sd
            } else {
                0.0
            });
        }
        Ok(NormalizationParams { means, scales })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        ensure_len("feature count", self.dim(), x.ncols())?;
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            let s = self.scales[j];
            if s == 0.0 {
                0.0
            } else {
                (x[(i, j)] - self.means[j]) / s
            }
        }))
    }

    pub fn apply_row(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.apply(&DMatrix::from_row_slice(1, x.len(), x.as_slice()))?;
        Ok(m.row(0).transpose())
    }
}

/// Fits z-score statistics on `fit_set` and applies them to both inputs.
pub fn normalize_features(
    fit_set: &DMatrix<f64>,
    apply_to: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, NormalizationParams)> {
    let params = NormalizationParams::fit(fit_set)?;
    Ok((params.apply(fit_set)?, params.apply(apply_to)?, params))
}
