//! Thresholding rules on the SVD-domain weights `ŵ_k = z_k / λ_k`.
//!
//! Every rule only zeroes or shrinks components, so `‖β̃‖ ≤ ‖β̂‖` for the
//! resulting coefficients. Components beyond the effective rank are never
//! active.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SvdDomain, WeightVector};

/// Indices (0-based, ascending) of the components that survive a threshold.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActiveSet {
    indices: Vec<usize>,
}

impl ActiveSet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        ActiveSet { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    pub fn is_subset_of(&self, other: &ActiveSet) -> bool {
        self.indices.iter().all(|&k| other.contains(k))
    }
}

/// A thresholding rule with its level fully specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThresholdRule {
    /// Keep the `k` components with the largest singular values.
    Ssv { k: usize },
    /// Keep the `k` components with the largest `|z_k|`.
    Sht { k: usize },
    /// Hard threshold at the universal level from the estimated noise variance.
    Sut,
    /// Bridge threshold at level `theta` with odd exponent `gamma`.
    Sbt { theta: f64, gamma: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub sigma2_hat: f64,
    pub stabilizer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub theta: f64,
    pub active_size: usize,
}

/// Stabilizing ridge parameter used inside the noise-variance estimate.
pub const DEFAULT_STABILIZER: f64 = 1e-12;

/// Bridge exponent used by the SBT pipeline.
pub const DEFAULT_GAMMA: u32 = 7;

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta >= 0.0 && !theta.is_nan() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "threshold level must be ≥ 0, got {theta}"
        )))
    }
}

pub(crate) fn check_gamma(gamma: u32) -> Result<()> {
    if gamma % 2 == 1 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "bridge exponent γ must be odd, got {gamma}"
        )))
    }
}

fn weights_for(svd: &SvdDomain, z: &DVector<f64>, active: &ActiveSet) -> WeightVector {
    let s = svd.singular_values();
    let mut w = DVector::zeros(svd.n());
    for &k in active.indices() {
        w[k] = z[k] / s[k];
    }
    WeightVector(w)
}

/// Keeps the `k` leading components (largest singular values).
pub fn ssv_weights(svd: &SvdDomain, k: usize) -> Result<(WeightVector, ActiveSet)> {
    let z = svd.z()?;
    if k > svd.effective_rank() {
        return Err(Error::Config(format!(
            "cannot keep {k} components, effective rank is {}",
            svd.effective_rank()
        )));
    }
    let active = ActiveSet::new((0..k).collect());
    Ok((weights_for(svd, z, &active), active))
}

/// Hard threshold on the outputs: component k is kept iff `|z_k| ≥ θ`.
///
/// Equivalent to thresholding `ŵ_k` at the component-wise level `θ / λ_k`.
pub fn hard_threshold_weights(svd: &SvdDomain, theta: f64) -> Result<(WeightVector, ActiveSet)> {
    check_theta(theta)?;
    let z = svd.z()?;
    let active = ActiveSet::new(
        (0..svd.effective_rank())
            .filter(|&k| z[k].abs() >= theta)
            .collect(),
    );
    Ok((weights_for(svd, z, &active), active))
}

/// Components within the effective rank, ordered by decreasing `|z_k|`
/// (ties by index).
pub fn descending_order(svd: &SvdDomain) -> Result<Vec<usize>> {
    let z = svd.z()?;
    let mut order: Vec<usize> = (0..svd.effective_rank()).collect();
    order.sort_by(|&a, &b| z[b].abs().total_cmp(&z[a].abs()).then(a.cmp(&b)));
    Ok(order)
}

/// Hard threshold keeping the `k` largest `|z_k|`, i.e. θ set to the k-th
/// order statistic. `k` is capped at the effective rank.
pub fn hard_threshold_top_k(svd: &SvdDomain, k: usize) -> Result<(WeightVector, ActiveSet)> {
    let z = svd.z()?;
    let order = descending_order(svd)?;
    let active = ActiveSet::new(order.into_iter().take(k).collect());
    Ok((weights_for(svd, z, &active), active))
}

/// `√(2 σ² ln n)`.
pub fn universal_threshold_level(sigma2_hat: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Empty("universal threshold needs n ≥ 1"));
    }
    if !(sigma2_hat >= 0.0 && sigma2_hat.is_finite()) {
        return Err(Error::Config(format!(
            "noise variance must be finite and ≥ 0, got {sigma2_hat}"
        )));
    }
    Ok((2.0 * sigma2_hat * (n as f64).ln()).sqrt())
}

/// Residual-based noise variance with leverages `h_i = λ_i / (λ_i + λ)`:
/// `σ̂² = Σ(1−h_i)² z_i² / Σ(1−h_i)²`.
pub fn estimate_noise_variance(svd: &SvdDomain, stabilizer: f64) -> Result<VarianceEstimate> {
    if !(stabilizer > 0.0 && stabilizer.is_finite()) {
        return Err(Error::Config(format!(
            "variance stabilizer must be positive, got {stabilizer}"
        )));
    }
    let z = svd.z()?;
    let s = svd.singular_values();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..svd.n() {
        // 1 − h_i written without cancellation.
        let one_minus_h = stabilizer / (s[i] + stabilizer);
        let weight = one_minus_h * one_minus_h;
        num += weight * z[i] * z[i];
        den += weight;
    }
    if !(den > 0.0 && den.is_finite() && num.is_finite()) {
        return Err(Error::DegenerateVariance(format!(
            "residual weights sum to {den:e} (largest singular value {:e}, stabilizer {stabilizer:e})",
            s.get(0).copied().unwrap_or(0.0)
        )));
    }
    Ok(VarianceEstimate {
        sigma2_hat: num / den,
        stabilizer,
    })
}

/// Scalar bridge function `(1 − (θ/|w|)^{1+γ})₊ w`.
///
/// γ = 0 is soft thresholding, γ = 1 the non-negative garrote, and large γ
/// approaches hard thresholding.
pub fn bridge_shrink(w: f64, theta: f64, gamma: u32) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let factor = 1.0 - (theta / w.abs()).powi(gamma as i32 + 1);
    factor.max(0.0) * w
}

/// Bridge threshold in the output domain: kept iff `|z_k| > θ`, with weight
/// `(1 − (θ/z_k)^{γ+1}) z_k / λ_k`. `gamma` must be odd.
pub fn bridge_threshold_weights(
    svd: &SvdDomain,
    theta: f64,
    gamma: u32,
) -> Result<(WeightVector, ActiveSet)> {
    check_gamma(gamma)?;
    check_theta(theta)?;
    Ok(bridge_unchecked(svd, svd.z()?, theta, gamma))
}

fn bridge_unchecked(
    svd: &SvdDomain,
    z: &DVector<f64>,
    theta: f64,
    gamma: u32,
) -> (WeightVector, ActiveSet) {
    let s = svd.singular_values();
    let mut w = DVector::zeros(svd.n());
    let mut active = Vec::new();
    for k in 0..svd.effective_rank() {
        let az = z[k].abs();
        if az > theta {
            let shrink = 1.0 - (theta / az).powi(gamma as i32 + 1);
            w[k] = shrink * z[k] / s[k];
            active.push(k);
        }
    }
    (WeightVector(w), ActiveSet { indices: active })
}

fn sure_unchecked(
    svd: &SvdDomain,
    z: &DVector<f64>,
    theta: f64,
    gamma: u32,
    sigma2: f64,
) -> RiskEstimate {
    let n = svd.n() as f64;
    let s = svd.singular_values();
    let (w, active) = bridge_unchecked(svd, z, theta, gamma);
    let rss: f64 = (0..svd.n())
        .map(|i| {
            let r = z[i] - s[i] * w.0[i];
            r * r
        })
        .sum();
    let divergence: f64 = active
        .indices()
        .iter()
        .map(|&i| 1.0 + gamma as f64 * (theta / z[i].abs()).powi(gamma as i32 + 1))
        .sum();
    RiskEstimate {
        value: rss / n - sigma2 + 2.0 * sigma2 / n * divergence,
        theta,
        active_size: active.len(),
    }
}

/// Stein's unbiased estimate of `(1/n) E‖z̄ − Λ₁w̃₁‖²` for the bridge rule.
pub fn sure_risk(svd: &SvdDomain, theta: f64, gamma: u32, sigma2: f64) -> Result<RiskEstimate> {
    check_gamma(gamma)?;
    check_theta(theta)?;
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::Config(format!(
            "noise variance must be finite and ≥ 0, got {sigma2}"
        )));
    }
    Ok(sure_unchecked(svd, svd.z()?, theta, gamma, sigma2))
}

/// Minimizes the SURE over θ ∈ {|z_1|, …, |z_n|}. Equal risks resolve to
/// the larger θ.
pub fn select_theta_sbt(svd: &SvdDomain, gamma: u32, sigma2: f64) -> Result<(f64, RiskEstimate)> {
    check_gamma(gamma)?;
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::Config(format!(
            "noise variance must be finite and ≥ 0, got {sigma2}"
        )));
    }
    let z = svd.z()?;
    if z.is_empty() {
        return Err(Error::Empty("SVD domain"));
    }
    let mut candidates: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    candidates.sort_by(|a, b| b.total_cmp(a));
    candidates.dedup();

    let mut best: Option<RiskEstimate> = None;
    for &theta in &candidates {
        let risk = sure_unchecked(svd, z, theta, gamma, sigma2);
        if best.is_none_or(|b| risk.value < b.value) {
            best = Some(risk);
        }
    }
    let best = best.expect("at least one candidate");
    Ok((best.theta, best))
}

impl ThresholdRule {
    /// Applies the rule. `stabilizer` is only used by SUT.
    pub fn apply(&self, svd: &SvdDomain, stabilizer: f64) -> Result<(WeightVector, ActiveSet)> {
        match *self {
            ThresholdRule::Ssv { k } => ssv_weights(svd, k),
            ThresholdRule::Sht { k } => {
                if k > svd.effective_rank() {
                    return Err(Error::Config(format!(
                        "cannot keep {k} components, effective rank is {}",
                        svd.effective_rank()
                    )));
                }
                hard_threshold_top_k(svd, k)
            }
            ThresholdRule::Sut => {
                let var = estimate_noise_variance(svd, stabilizer)?;
                let theta = universal_threshold_level(var.sigma2_hat, svd.n())?;
                hard_threshold_weights(svd, theta)
            }
            ThresholdRule::Sbt { theta, gamma } => bridge_threshold_weights(svd, theta, gamma),
        }
    }
}
