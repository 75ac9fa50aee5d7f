//! SVD domain of a Gram-type design matrix.
//!
//! For an n×p design matrix `G = U Λ Vᵀ` (n ≤ p) the least-squares problem
//! `‖y − Gβ‖²` becomes the orthogonal problem `Σ (z_k − λ_k w_k)²` with
//! `z = Uᵀy` and `w = Vᵀβ`. Only the first n columns of V are kept; the
//! remaining p − n columns always multiply a zero block.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};

/// Default relative rank tolerance, `max(n, p) · 2⁻⁵²`.
pub fn default_rank_tol(n: usize, p: usize) -> f64 {
    n.max(p) as f64 * f64::EPSILON
}

/// Weights in the SVD domain (length n). The trailing p − n block is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(pub DVector<f64>);

impl WeightVector {
    pub fn zeros(n: usize) -> Self {
        WeightVector(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// Kernel coefficients β in the original domain (length p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector(pub DVector<f64>);

impl CoefficientVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct SvdDomain {
    u: DMatrix<f64>,
    singular_values: DVector<f64>,
    v: DMatrix<f64>,
    z: Option<DVector<f64>>,
    effective_rank: usize,
    rank_tol: f64,
}

impl SvdDomain {
    /// Decomposes `g` with the default rank tolerance.
    pub fn new(g: &DMatrix<f64>) -> Result<Self> {
        Self::decompose(g, default_rank_tol(g.nrows(), g.ncols()))
    }

    /// Thin SVD of an n×p matrix with n ≤ p.
    ///
    /// Singular values below `rank_tol · λ₁` are excluded from the effective
    /// rank; the estimators give those components zero weight.
    pub fn decompose(g: &DMatrix<f64>, rank_tol: f64) -> Result<Self> {
        let (n, p) = g.shape();
        if n == 0 {
            return Err(Error::Empty("design matrix"));
        }
        if n > p {
            return Err(Error::Config(format!(
                "design matrix must have at least as many columns as rows, got {n}×{p}"
            )));
        }
        if !(rank_tol >= 0.0 && rank_tol.is_finite()) {
            return Err(Error::Config(format!(
                "rank tolerance must be finite and ≥ 0, got {rank_tol}"
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix"));
        }

        let svd = g
            .clone()
            .try_svd(true, true, f64::EPSILON, 10_000 * p.max(1))
            .ok_or_else(|| Error::Numerical(format!("SVD of {n}×{p} matrix did not converge")))?;
        let u_raw = svd.u.expect("requested U");
        let vt_raw = svd.v_t.expect("requested Vᵀ");
        let s_raw = svd.singular_values;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s_raw[b].total_cmp(&s_raw[a]));

        let mut u = DMatrix::zeros(n, n);
        let mut v = DMatrix::zeros(p, n);
        let mut singular_values = DVector::zeros(n);
        for (dst, &src) in order.iter().enumerate() {
            u.set_column(dst, &u_raw.column(src));
            v.set_column(dst, &vt_raw.row(src).transpose());
            singular_values[dst] = s_raw[src].max(0.0);
        }

        Self::from_parts(u, singular_values, v, rank_tol)
    }

    /// Builds a domain from precomputed factors. `u` is n×n, `v` is p×n and
    /// `singular_values` must be non-increasing.
    pub fn from_parts(
        u: DMatrix<f64>,
        singular_values: DVector<f64>,
        v: DMatrix<f64>,
        rank_tol: f64,
    ) -> Result<Self> {
        let n = singular_values.len();
        ensure_len("U rows", n, u.nrows())?;
        ensure_len("U columns", n, u.ncols())?;
        ensure_len("V columns", n, v.ncols())?;
        if v.nrows() < n {
            return Err(Error::Config(format!(
                "V must have at least {n} rows, got {}",
                v.nrows()
            )));
        }
        if singular_values.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::NonFinite("singular values"));
        }
        if singular_values.as_slice().windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "singular values must be non-increasing".into(),
            ));
        }
        let cutoff = rank_tol * singular_values.get(0).copied().unwrap_or(0.0);
        let effective_rank = singular_values
            .iter()
            .take_while(|&&s| s > 0.0 && s >= cutoff)
            .count();
        Ok(SvdDomain {
            u,
            singular_values,
            v,
            z: None,
            effective_rank,
            rank_tol,
        })
    }

    /// Number of labeled rows n.
    pub fn n(&self) -> usize {
        self.singular_values.len()
    }

    /// Number of centers p.
    pub fn p(&self) -> usize {
        self.v.nrows()
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// First n columns of V.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    pub fn effective_rank(&self) -> usize {
        self.effective_rank
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// `z = Uᵀy`, once set by [`SvdDomain::set_outputs`].
    pub fn z(&self) -> Result<&DVector<f64>> {
        self.z.as_ref().ok_or(Error::OutputsMissing)
    }

    /// Returns `Uᵀy` without storing it.
    pub fn transform_outputs(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_len("outputs", self.n(), y.len())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("outputs"));
        }
        Ok(self.u.tr_mul(y))
    }

    pub fn set_outputs(&mut self, y: &DVector<f64>) -> Result<()> {
        self.z = Some(self.transform_outputs(y)?);
        Ok(())
    }

    pub fn with_outputs(mut self, y: &DVector<f64>) -> Result<Self> {
        self.set_outputs(y)?;
        Ok(self)
    }

    /// Sets z directly, for models posed in the SVD domain.
    pub fn with_z(mut self, z: DVector<f64>) -> Result<Self> {
        ensure_len("z", self.n(), z.len())?;
        self.z = Some(z);
        Ok(self)
    }

    /// Minimum-norm least-squares weights `ŵ_k = z_k / λ_k` over the
    /// effective rank, zero beyond it.
    pub fn mnls(&self) -> Result<WeightVector> {
        let z = self.z()?;
        let r = self.effective_rank;
        let w = DVector::from_fn(self.n(), |k, _| {
            if k < r {
                z[k] / self.singular_values[k]
            } else {
                0.0
            }
        });
        Ok(WeightVector(w))
    }

    /// `β = V [w; 0]`.
    pub fn inverse_transform(&self, w: &WeightVector) -> Result<CoefficientVector> {
        ensure_len("weight vector", self.n(), w.len())?;
        Ok(CoefficientVector(&self.v * &w.0))
    }

    /// `U · diag(λ) · Vᵀ` restricted to the first `k` components.
    pub fn reconstruct(&self, k: usize) -> DMatrix<f64> {
        let k = k.min(self.n());
        let mut scaled = self.u.columns(0, k).into_owned();
        for j in 0..k {
            scaled.column_mut(j).scale_mut(self.singular_values[j]);
        }
        scaled * self.v.columns(0, k).transpose()
    }
}
