//! K-fold cross validation over width × (ridge parameter | component count)
//! grids, plus the final refit on all labeled data.
//!
//! Only rows are folded: every fold keeps all p centers as design-matrix
//! columns, since centers need no outputs.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::estimators::{
    descending_order, fit_svd_rule, ridge_fit_spectral, FitSettings, Hyperparams, Method,
    RidgeConfig, SvdRule,
};
use crate::kernels::{build_design_matrix, CenterSet, KernelConfig};
use crate::linalg::{CoefficientVector, SvdDomain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k_folds: usize,
    pub seed: u64,
    /// `k_max = ⌊n · num / den⌋`.
    pub k_max_ratio: (usize, usize),
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k_folds: 10,
            seed: 0,
            k_max_ratio: (2, 3),
        }
    }
}

impl CvConfig {
    pub fn k_max(&self, n: usize) -> usize {
        let (num, den) = self.k_max_ratio;
        n * num / den.max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Shuffles `0..n` with `seed` and cuts it into `k_folds` contiguous blocks
/// whose sizes differ by at most one.
pub fn kfold_split(n: usize, k_folds: usize, seed: u64) -> Result<Vec<Fold>> {
    if k_folds < 2 || k_folds > n {
        return Err(Error::Config(format!(
            "need 2 ≤ k_folds ≤ n, got k_folds = {k_folds}, n = {n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let (base, extra) = (n / k_folds, n % k_folds);
    let mut folds = Vec::with_capacity(k_folds);
    let mut start = 0;
    for f in 0..k_folds {
        let size = base + usize::from(f < extra);
        let mut validation = perm[start..start + size].to_vec();
        let mut train: Vec<usize> = perm[..start]
            .iter()
            .chain(&perm[start + size..])
            .copied()
            .collect();
        validation.sort_unstable();
        train.sort_unstable();
        folds.push(Fold { train, validation });
        start += size;
    }
    Ok(folds)
}

/// Candidate values searched by cross validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub ridge_params: Vec<f64>,
    pub widths: Vec<f64>,
    /// Component counts `0..=k_max` (SSV, SHT).
    pub k_max: usize,
}

fn pow10(q: i32) -> f64 {
    format!("1e{q}").parse().expect("valid float literal")
}

impl Grid {
    /// Ridge parameters `n · 10^{−q}` for q = 0, 2, …, 16.
    pub fn default_ridge_params(n: usize) -> Vec<f64> {
        (0..=16).step_by(2).map(|q| n as f64 * pow10(-q)).collect()
    }

    /// Widths `10^q` for q = −1, …, 6.
    pub fn default_ridge_widths() -> Vec<f64> {
        (-1..=6).map(pow10).collect()
    }

    /// Widths `10^{−q}` for q = −1, …, 10.
    pub fn default_svd_widths() -> Vec<f64> {
        (-1..=10).map(|q| pow10(-q)).collect()
    }

    pub fn ridge_default(n: usize) -> Grid {
        Grid {
            ridge_params: Self::default_ridge_params(n),
            widths: Self::default_ridge_widths(),
            k_max: 0,
        }
    }

    pub fn svd_default(n: usize, cv: &CvConfig) -> Grid {
        Grid {
            ridge_params: Vec::new(),
            widths: Self::default_svd_widths(),
            k_max: cv.k_max(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub width: f64,
    pub ridge_param: Option<f64>,
    pub components: Option<usize>,
    /// Sum of squared validation errors over all folds.
    pub error_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best: Hyperparams,
    pub best_error: f64,
    pub scores: Vec<CandidateScore>,
    pub folds: Vec<Fold>,
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn validate_common(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    centers: &CenterSet,
    widths: &[f64],
) -> Result<()> {
    ensure_len("labeled outputs", x.nrows(), y.len())?;
    ensure_len("input dimension", centers.dim(), x.ncols())?;
    if widths.is_empty() {
        return Err(Error::Config("width grid is empty".into()));
    }
    for &w in widths {
        KernelConfig::new(w)?;
    }
    Ok(())
}

fn sq_err(y: &DVector<f64>, pred: &DVector<f64>) -> f64 {
    y.iter()
        .zip(pred.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn fold_domain(g_all: &DMatrix<f64>, y: &DVector<f64>, fold: &Fold) -> Result<SvdDomain> {
    let g_tr = g_all.select_rows(&fold.train);
    let y_tr = y.select_rows(&fold.train);
    SvdDomain::new(&g_tr)?.with_outputs(&y_tr)
}

fn in_fold<T>(fold: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Fold {
        fold,
        source: Box::new(e),
    })
}

/// Selects (λ, τ) for ridge regression (RR or RRO, depending on `centers`).
/// Ties prefer the larger λ, then the larger τ.
pub fn cv_select_ridge(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    centers: &CenterSet,
    grid: &Grid,
    cv: &CvConfig,
) -> Result<CvResult> {
    validate_common(x, y, centers, &grid.widths)?;
    if grid.ridge_params.is_empty() {
        return Err(Error::Config("ridge parameter grid is empty".into()));
    }
    let ridge: Vec<RidgeConfig> = grid
        .ridge_params
        .iter()
        .map(|&l| RidgeConfig::new(l))
        .collect::<Result<_>>()?;
    let folds = kfold_split(x.nrows(), cv.k_folds, cv.seed)?;

    let mut scores = Vec::with_capacity(grid.widths.len() * ridge.len());
    for &width in &grid.widths {
        let g_all = build_design_matrix(x, centers, &KernelConfig::new(width)?)?.into_inner();
        let mut sums = vec![0.0; ridge.len()];
        for (fi, fold) in folds.iter().enumerate() {
            let svd = in_fold(fi, fold_domain(&g_all, y, fold))?;
            let g_val = g_all.select_rows(&fold.validation);
            let y_val = y.select_rows(&fold.validation);
            for (sum, cfg) in sums.iter_mut().zip(&ridge) {
                let beta = in_fold(fi, ridge_fit_spectral(&svd, cfg))?;
                *sum += sq_err(&y_val, &(&g_val * beta.as_vector()));
            }
        }
        for (&lambda, sum) in grid.ridge_params.iter().zip(sums) {
            scores.push(CandidateScore {
                width,
                ridge_param: Some(lambda),
                components: None,
                error_sum: sum,
            });
        }
    }

    let best = scores
        .iter()
        .min_by(|a, b| {
            finite_or_inf(a.error_sum)
                .total_cmp(&finite_or_inf(b.error_sum))
                .then_with(|| b.ridge_param.unwrap().total_cmp(&a.ridge_param.unwrap()))
                .then_with(|| b.width.total_cmp(&a.width))
        })
        .expect("non-empty grid")
        .clone();
    Ok(CvResult {
        best: Hyperparams {
            width: best.width,
            ridge_param: best.ridge_param,
            ..Default::default()
        },
        best_error: best.error_sum,
        scores,
        folds,
    })
}

/// Selects (τ, k) for SSV or SHT. For each fold the training rows are
/// decomposed and the validation error is tracked as components are added in
/// order (SSV: by singular value, SHT: by `|z_k|`). Ties prefer the smaller
/// k, then the larger τ.
pub fn cv_select_svd(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    centers: &CenterSet,
    grid: &Grid,
    method: Method,
    cv: &CvConfig,
) -> Result<CvResult> {
    if !matches!(method, Method::Ssv | Method::Sht) {
        return Err(Error::Config(format!(
            "{method} is not selected by component count"
        )));
    }
    validate_common(x, y, centers, &grid.widths)?;
    let folds = kfold_split(x.nrows(), cv.k_folds, cv.seed)?;
    let min_train = folds.iter().map(|f| f.train.len()).min().unwrap_or(0);
    if grid.k_max > min_train {
        return Err(Error::Config(format!(
            "k_max = {} exceeds the smallest training fold ({min_train} rows)",
            grid.k_max
        )));
    }
    let k_max = grid.k_max;
    let mut capped = false;

    let mut scores = Vec::with_capacity(grid.widths.len() * (k_max + 1));
    for &width in &grid.widths {
        let g_all = build_design_matrix(x, centers, &KernelConfig::new(width)?)?.into_inner();
        let mut sums = vec![0.0; k_max + 1];
        for (fi, fold) in folds.iter().enumerate() {
            let svd = in_fold(fi, fold_domain(&g_all, y, fold))?;
            let z = svd.z()?;
            let order = match method {
                Method::Ssv => (0..svd.effective_rank()).collect(),
                _ => descending_order(&svd)?,
            };
            let g_val = g_all.select_rows(&fold.validation);
            let y_val = y.select_rows(&fold.validation);
            // Validation predictions of each SVD component: G_val · v_k.
            let proj = &g_val * svd.v();
            let s = svd.singular_values();

            let mut pred = DVector::zeros(y_val.len());
            let mut err = sq_err(&y_val, &pred);
            sums[0] += err;
            for (k, sum) in sums.iter_mut().enumerate().skip(1) {
                if let Some(&j) = order.get(k - 1) {
                    pred.axpy(z[j] / s[j], &proj.column(j), 1.0);
                    err = sq_err(&y_val, &pred);
                } else {
                    capped = true;
                }
                *sum += err;
            }
        }
        for (k, sum) in sums.into_iter().enumerate() {
            scores.push(CandidateScore {
                width,
                ridge_param: None,
                components: Some(k),
                error_sum: sum,
            });
        }
    }
    if capped {
        warn!("{method}: k_max = {k_max} exceeds the effective rank of some folds; larger counts reuse the full-rank fit");
    }

    let best = scores
        .iter()
        .min_by(|a, b| {
            finite_or_inf(a.error_sum)
                .total_cmp(&finite_or_inf(b.error_sum))
                .then_with(|| a.components.cmp(&b.components))
                .then_with(|| b.width.total_cmp(&a.width))
        })
        .expect("non-empty grid")
        .clone();
    Ok(CvResult {
        best: Hyperparams {
            width: best.width,
            components: best.components,
            ..Default::default()
        },
        best_error: best.error_sum,
        scores,
        folds,
    })
}

/// Selects τ for SUT or SBT; the threshold level is chosen inside each fold
/// from the data. Ties prefer the larger τ.
pub fn cv_select_width_only(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    centers: &CenterSet,
    grid: &Grid,
    method: Method,
    cv: &CvConfig,
    settings: &FitSettings,
) -> Result<CvResult> {
    let rule = match method {
        Method::Sut => SvdRule::Sut,
        Method::Sbt => SvdRule::Sbt,
        other => {
            return Err(Error::Config(format!(
                "{other} has more than a width to select"
            )));
        }
    };
    validate_common(x, y, centers, &grid.widths)?;
    let folds = kfold_split(x.nrows(), cv.k_folds, cv.seed)?;

    let mut scores = Vec::with_capacity(grid.widths.len());
    for &width in &grid.widths {
        let g_all = build_design_matrix(x, centers, &KernelConfig::new(width)?)?.into_inner();
        let mut sum = 0.0;
        for (fi, fold) in folds.iter().enumerate() {
            let svd = in_fold(fi, fold_domain(&g_all, y, fold))?;
            let fit = in_fold(fi, fit_svd_rule(&svd, rule, settings))?;
            let beta = svd.inverse_transform(&fit.weights)?;
            let g_val = g_all.select_rows(&fold.validation);
            sum += sq_err(
                &y.select_rows(&fold.validation),
                &(&g_val * beta.as_vector()),
            );
        }
        scores.push(CandidateScore {
            width,
            ridge_param: None,
            components: None,
            error_sum: sum,
        });
    }

    let best = scores
        .iter()
        .min_by(|a, b| {
            finite_or_inf(a.error_sum)
                .total_cmp(&finite_or_inf(b.error_sum))
                .then_with(|| b.width.total_cmp(&a.width))
        })
        .expect("non-empty grid")
        .clone();
    Ok(CvResult {
        best: Hyperparams {
            width: best.width,
            ..Default::default()
        },
        best_error: best.error_sum,
        scores,
        folds,
    })
}

/// Everything needed to select and fit any method on one labeled set.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub ridge_grid: Grid,
    pub svd_grid: Grid,
    pub cv: CvConfig,
    pub settings: FitSettings,
}

impl SelectionConfig {
    /// Default grids for `n` labeled samples.
    pub fn for_labeled(n: usize, cv: CvConfig, settings: FitSettings) -> Self {
        SelectionConfig {
            ridge_grid: Grid::ridge_default(n),
            svd_grid: Grid::svd_default(n, &cv),
            cv,
            settings,
        }
    }
}

/// Refits `method` on all labeled rows with fixed hyper-parameters. The
/// returned hyper-parameters carry the data-driven θ and σ̂² for SUT/SBT.
pub fn fit_with_hyperparams(
    method: Method,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    centers: &CenterSet,
    hyper: &Hyperparams,
    settings: &FitSettings,
) -> Result<(CoefficientVector, Hyperparams)> {
    let kernel = KernelConfig::new(hyper.width)?;
    let g = build_design_matrix(x, centers, &kernel)?.into_inner();
    let svd = SvdDomain::new(&g)?.with_outputs(y)?;
    let mut out = *hyper;
    let beta = match method {
        Method::Rr | Method::Rro => {
            let lambda = hyper
                .ridge_param
                .ok_or_else(|| Error::Config("ridge parameter missing".into()))?;
            ridge_fit_spectral(&svd, &RidgeConfig::new(lambda)?)?
        }
        Method::Ssv | Method::Sht => {
            let k = hyper
                .components
                .ok_or_else(|| Error::Config("component count missing".into()))?;
            if k > svd.effective_rank() {
                warn!(
                    "{method}: selected k = {k} exceeds effective rank {} of the full fit",
                    svd.effective_rank()
                );
            }
            let rule = if method == Method::Ssv {
                SvdRule::Ssv { k }
            } else {
                SvdRule::Sht { k }
            };
            let fit = fit_svd_rule(&svd, rule, settings)?;
            svd.inverse_transform(&fit.weights)?
        }
        Method::Sut | Method::Sbt => {
            let rule = if method == Method::Sut {
                SvdRule::Sut
            } else {
                SvdRule::Sbt
            };
            let fit = fit_svd_rule(&svd, rule, settings)?;
            out.theta = fit.theta;
            out.sigma2 = fit.sigma2;
            svd.inverse_transform(&fit.weights)?
        }
    };
    Ok((beta, out))
}

/// Runs the method's selection protocol and refits on all labeled rows.
///
/// `centers` must hold labeled and unlabeled inputs; RR uses only the labeled
/// prefix.
pub fn select_and_fit(
    method: Method,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    centers: &CenterSet,
    config: &SelectionConfig,
) -> Result<(CoefficientVector, Hyperparams, CvResult, CenterSet)> {
    let centers = if method == Method::Rr {
        centers.labeled_only()
    } else {
        centers.clone()
    };
    let cv = match method {
        Method::Rr | Method::Rro => {
            cv_select_ridge(x, y, &centers, &config.ridge_grid, &config.cv)?
        }
        Method::Ssv | Method::Sht => {
            cv_select_svd(x, y, &centers, &config.svd_grid, method, &config.cv)?
        }
        Method::Sut | Method::Sbt => cv_select_width_only(
            x,
            y,
            &centers,
            &config.svd_grid,
            method,
            &config.cv,
            &config.settings,
        )?,
    };
    let (beta, hyper) = fit_with_hyperparams(method, x, y, &centers, &cv.best, &config.settings)?;
    Ok((beta, hyper, cv, centers))
}
