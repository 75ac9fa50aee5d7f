//! Semi-supervised regression with over-parameterized Gaussian-kernel models.
//!
//! Kernels are centered on both labeled and unlabeled inputs, so the model has
//! more coefficients than labeled samples. Fitting is done either by ridge
//! regression or in the SVD domain of the n×p design matrix, where the
//! minimum-norm least-squares solution is modified by one of four thresholding
//! rules:
//!
//! | rule | components kept | level chosen by |
//! |------|-----------------|-----------------|
//! | SSV  | largest singular values | cross validation |
//! | SHT  | largest \|z_k\| (hard threshold) | cross validation |
//! | SUT  | \|z_k\| ≥ universal level | noise-variance estimate |
//! | SBT  | bridge shrinkage of \|z_k\| > θ | Stein's unbiased risk estimate |
//!
//! The [`experiment`] module runs the full trial protocol (split, normalize,
//! cross-validate, fit, score with 1−R²) and writes result tables.

pub mod data;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod kernels;
pub mod linalg;
pub mod model_selection;
pub mod selftest;

pub use error::{Error, Result};
pub use estimators::{
    bridge_shrink, bridge_threshold_weights, estimate_noise_variance, hard_threshold_top_k,
    hard_threshold_weights, ridge_fit, ridge_fit_dual, ridge_fit_primal, ridge_fit_spectral,
    select_theta_sbt, ssv_weights, sure_risk, universal_threshold_level, ActiveSet, FittedModel,
    Hyperparams, Method, RidgeConfig, RiskEstimate, SvdRule, ThresholdRule, VarianceEstimate,
};
pub use kernels::{
    build_design_matrix, gaussian_kernel, normalize_features, CenterSet, DesignMatrix,
    KernelConfig, NormalizationParams, NormalizationScope,
};
pub use linalg::{CoefficientVector, SvdDomain, WeightVector};

pub use nalgebra::{DMatrix, DVector};
