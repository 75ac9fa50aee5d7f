use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::linalg::{CoefficientVector, SvdDomain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig {
    ridge_param: f64,
}

impl RidgeConfig {
    pub fn new(ridge_param: f64) -> Result<Self> {
        if ridge_param > 0.0 && ridge_param.is_finite() {
            Ok(RidgeConfig { ridge_param })
        } else {
            Err(Error::Config(format!(
                "ridge parameter must be positive and finite, got {ridge_param}"
            )))
        }
    }

    pub fn ridge_param(&self) -> f64 {
        self.ridge_param
    }
}

fn check_inputs(g: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    ensure_len("ridge outputs", g.nrows(), y.len())?;
    if g.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge inputs"));
    }
    Ok(())
}

fn add_diagonal(mut m: DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    for i in 0..m.nrows() {
        m[(i, i)] += lambda;
    }
    m
}

/// `(GᵀG + λI_p)⁻¹ Gᵀy`.
///
/// For p > n the system has p − n eigenvalues equal to λ, so rounding errors
/// off the row space of G are amplified by 1/λ. Two refinement steps with the
/// residual written as `Gᵀ(y − Gβ) − λβ` remove most of that error.
pub fn ridge_fit_primal(
    g: &DMatrix<f64>,
    y: &DVector<f64>,
    config: &RidgeConfig,
) -> Result<CoefficientVector> {
    check_inputs(g, y)?;
    let lambda = config.ridge_param();
    let system = add_diagonal(g.tr_mul(g), lambda);
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::Numerical("primal ridge system is not positive definite".into()))?;
    let mut beta = chol.solve(&g.tr_mul(y));
    for _ in 0..2 {
        let residual = g.tr_mul(&(y - g * &beta)) - &beta * lambda;
        beta += chol.solve(&residual);
    }
    Ok(CoefficientVector(beta))
}

/// `Gᵀ(GGᵀ + λI_n)⁻¹ y`, the same estimator solved in the n×n dual space.
pub fn ridge_fit_dual(
    g: &DMatrix<f64>,
    y: &DVector<f64>,
    config: &RidgeConfig,
) -> Result<CoefficientVector> {
    check_inputs(g, y)?;
    let system = add_diagonal(g * g.transpose(), config.ridge_param());
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::Numerical("dual ridge system is not positive definite".into()))?;
    Ok(CoefficientVector(g.tr_mul(&chol.solve(y))))
}

/// Ridge estimate, solved in whichever of the primal or dual spaces is smaller.
pub fn ridge_fit(
    g: &DMatrix<f64>,
    y: &DVector<f64>,
    config: &RidgeConfig,
) -> Result<CoefficientVector> {
    if g.ncols() > g.nrows() {
        ridge_fit_dual(g, y, config)
    } else {
        ridge_fit_primal(g, y, config)
    }
}

/// Ridge estimate from an SVD domain with outputs set:
/// `β = V diag(λ_k / (λ_k² + λ)) z`.
///
/// Stable for ridge parameters far below the squared condition number, where
/// the Cholesky routes break down.
pub fn ridge_fit_spectral(svd: &SvdDomain, config: &RidgeConfig) -> Result<CoefficientVector> {
    let z = svd.z()?;
    let lambda = config.ridge_param();
    let s = svd.singular_values();
    let w = DVector::from_fn(svd.n(), |k, _| s[k] * z[k] / (s[k] * s[k] + lambda));
    Ok(CoefficientVector(svd.v() * w))
}
