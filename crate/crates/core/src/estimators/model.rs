use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::threshold::{
    bridge_threshold_weights, check_gamma, estimate_noise_variance, hard_threshold_top_k,
    hard_threshold_weights, select_theta_sbt, ssv_weights, universal_threshold_level, ActiveSet,
    RiskEstimate, DEFAULT_GAMMA, DEFAULT_STABILIZER,
};
use crate::error::{ensure_len, Error, Result};
use crate::kernels::{build_design_matrix, CenterSet, KernelConfig, NormalizationParams};
use crate::linalg::{CoefficientVector, SvdDomain, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Ridge regression, labeled centers only.
    #[serde(rename = "RR")]
    Rr,
    /// Ridge regression over labeled and unlabeled centers.
    #[serde(rename = "RRO")]
    Rro,
    #[serde(rename = "SSV")]
    Ssv,
    #[serde(rename = "SHT")]
    Sht,
    #[serde(rename = "SUT")]
    Sut,
    #[serde(rename = "SBT")]
    Sbt,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Rr,
        Method::Rro,
        Method::Ssv,
        Method::Sht,
        Method::Sut,
        Method::Sbt,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Rr => "RR",
            Method::Rro => "RRO",
            Method::Ssv => "SSV",
            Method::Sht => "SHT",
            Method::Sut => "SUT",
            Method::Sbt => "SBT",
        }
    }

    pub fn is_ridge(&self) -> bool {
        matches!(self, Method::Rr | Method::Rro)
    }

    /// Whether the method places kernels on unlabeled inputs.
    pub fn uses_unlabeled(&self) -> bool {
        !matches!(self, Method::Rr)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Settings shared by the data-driven SVD rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub gamma: u32,
    pub stabilizer: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            gamma: DEFAULT_GAMMA,
            stabilizer: DEFAULT_STABILIZER,
        }
    }
}

/// Method-level SVD rule. SUT and SBT pick their level from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SvdRule {
    Ssv { k: usize },
    Sht { k: usize },
    Sut,
    Sbt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdFit {
    pub weights: WeightVector,
    pub active: ActiveSet,
    pub theta: Option<f64>,
    pub sigma2: Option<f64>,
    pub risk: Option<RiskEstimate>,
}

/// Runs an SVD rule on a domain with outputs set. Component counts above the
/// effective rank are capped.
pub fn fit_svd_rule(svd: &SvdDomain, rule: SvdRule, settings: &FitSettings) -> Result<SvdFit> {
    let plain = |(weights, active): (WeightVector, ActiveSet)| SvdFit {
        weights,
        active,
        theta: None,
        sigma2: None,
        risk: None,
    };
    match rule {
        SvdRule::Ssv { k } => Ok(plain(ssv_weights(svd, k.min(svd.effective_rank()))?)),
        SvdRule::Sht { k } => Ok(plain(hard_threshold_top_k(svd, k)?)),
        SvdRule::Sut => {
            let var = estimate_noise_variance(svd, settings.stabilizer)?;
            let theta = universal_threshold_level(var.sigma2_hat, svd.n())?;
            let (weights, active) = hard_threshold_weights(svd, theta)?;
            Ok(SvdFit {
                weights,
                active,
                theta: Some(theta),
                sigma2: Some(var.sigma2_hat),
                risk: None,
            })
        }
        SvdRule::Sbt => {
            check_gamma(settings.gamma)?;
            let var = estimate_noise_variance(svd, settings.stabilizer)?;
            let (theta, risk) = select_theta_sbt(svd, settings.gamma, var.sigma2_hat)?;
            let (weights, active) = bridge_threshold_weights(svd, theta, settings.gamma)?;
            Ok(SvdFit {
                weights,
                active,
                theta: Some(theta),
                sigma2: Some(var.sigma2_hat),
                risk: Some(risk),
            })
        }
    }
}

/// Hyper-parameters a fitted model was built with.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hyperparams {
    pub width: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ridge_param: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub components: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma2: Option<f64>,
}

/// `f(x) = Σ_k β_k exp(−‖x − c_k‖² / τ)` together with everything needed to
/// evaluate it on raw inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub method: Method,
    pub beta: CoefficientVector,
    /// Centers in normalized feature space.
    pub centers: CenterSet,
    pub kernel: KernelConfig,
    pub normalization: NormalizationParams,
    pub hyperparams: Hyperparams,
    #[serde(default)]
    pub feature_names: Vec<String>,
}

impl FittedModel {
    pub fn new(
        method: Method,
        beta: CoefficientVector,
        centers: CenterSet,
        kernel: KernelConfig,
        normalization: NormalizationParams,
        hyperparams: Hyperparams,
    ) -> Result<Self> {
        ensure_len("coefficients", centers.len(), beta.len())?;
        if beta.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficients"));
        }
        ensure_len("normalization", centers.dim(), normalization.dim())?;
        Ok(FittedModel {
            method,
            beta,
            centers,
            kernel,
            normalization,
            hyperparams,
            feature_names: Vec::new(),
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = names;
        self
    }

    /// Predictions for raw (unnormalized) inputs.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let xn = self.normalization.apply(x)?;
        self.predict_normalized(&xn)
    }

    /// Predictions for inputs already in normalized feature space.
    pub fn predict_normalized(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let g = build_design_matrix(x, &self.centers, &self.kernel)?;
        Ok(g.matrix() * self.beta.as_vector())
    }
}

/// Free-function form of [`FittedModel::predict`].
pub fn predict(model: &FittedModel, x_test: &DMatrix<f64>) -> Result<DVector<f64>> {
    model.predict(x_test)
}
