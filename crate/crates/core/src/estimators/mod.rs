//! Fitting rules: ridge regression and the SVD-domain thresholding estimators.

mod model;
mod ridge;
mod threshold;

pub use model::{
    fit_svd_rule, predict, FitSettings, FittedModel, Hyperparams, Method, SvdFit, SvdRule,
};
pub use ridge::{ridge_fit, ridge_fit_dual, ridge_fit_primal, ridge_fit_spectral, RidgeConfig};
pub use threshold::{
    bridge_shrink, bridge_threshold_weights, descending_order, estimate_noise_variance,
    hard_threshold_top_k, hard_threshold_weights, select_theta_sbt, ssv_weights, sure_risk,
    universal_threshold_level, ActiveSet, RiskEstimate, ThresholdRule, VarianceEstimate,
    DEFAULT_GAMMA, DEFAULT_STABILIZER,
};
