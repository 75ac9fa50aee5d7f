//! Fast numerical sanity checks, runnable from the CLI on any machine.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::estimators::{
    bridge_shrink, bridge_threshold_weights, hard_threshold_weights, ridge_fit_dual,
    ridge_fit_primal, ridge_fit_spectral, ssv_weights, RidgeConfig,
};
use crate::kernels::{build_design_matrix, CenterSet, KernelConfig};
use crate::linalg::SvdDomain;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult {
            name,
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs all checks with a fixed seed.
pub fn run_selftest() -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = normal_matrix(&mut rng, 20, 50);
    let y = normal_vector(&mut rng, 20);
    let mut rng2 = ChaCha8Rng::seed_from_u64(8);
    vec![
        check("min-norm solution interpolates", || {
            let svd = SvdDomain::new(&g)?.with_outputs(&y)?;
            let beta = svd.inverse_transform(&svd.mnls()?)?;
            let r = (&g * beta.as_vector() - &y).norm() / y.norm();
            Ok((r < 1e-10, format!("relative residual {r:.3e}")))
        }),
        check("min-norm matches dual system", || {
            let svd = SvdDomain::new(&g)?.with_outputs(&y)?;
            let beta = svd.inverse_transform(&svd.mnls()?)?;
            let gram = &g * g.transpose();
            let a = gram
                .lu()
                .solve(&y)
                .ok_or_else(|| crate::error::Error::Numerical("singular Gram matrix".into()))?;
            let oracle = g.transpose() * a;
            let d = (beta.as_vector() - &oracle).norm() / oracle.norm();
            Ok((d < 1e-8, format!("relative difference {d:.3e}")))
        }),
        check("truncated weights never exceed min-norm weights", || {
            let svd = SvdDomain::new(&g)?.with_outputs(&y)?;
            let full = svd.mnls()?;
            let mut ok = true;
            for k in 0..=svd.effective_rank() {
                let (w, _) = ssv_weights(&svd, k)?;
                ok &= w.norm() <= full.norm() * (1.0 + 1e-12);
            }
            for theta in [0.1, 0.5, 1.0, 2.0] {
                let (w, _) = hard_threshold_weights(&svd, theta)?;
                ok &= w.norm() <= full.norm() * (1.0 + 1e-12);
                let (w, _) = bridge_threshold_weights(&svd, theta, 7)?;
                ok &= w.norm() <= full.norm() * (1.0 + 1e-12);
            }
            Ok((ok, "SSV, SHT and SBT checked".into()))
        }),
        check("bridge rule endpoints", || {
            let soft = bridge_shrink(3.0, 1.0, 0);
            let hard = bridge_shrink(3.0, 1.0, 401);
            let below = bridge_shrink(0.5, 1.0, 7);
            let ok = (soft - 2.0).abs() < 1e-15 && (hard - 3.0).abs() < 1e-12 && below == 0.0;
            Ok((ok, format!("soft {soft}, near-hard {hard}, below {below}")))
        }),
        check("ridge routes agree", || {
            let cfg = RidgeConfig::new(0.3)?;
            let p = ridge_fit_primal(&g, &y, &cfg)?;
            let d = ridge_fit_dual(&g, &y, &cfg)?;
            let s = ridge_fit_spectral(&SvdDomain::new(&g)?.with_outputs(&y)?, &cfg)?;
            let e1 = (p.as_vector() - d.as_vector()).norm() / d.norm();
            let e2 = (s.as_vector() - d.as_vector()).norm() / d.norm();
            Ok((
                e1 < 1e-8 && e2 < 1e-8,
                format!("primal {e1:.2e}, spectral {e2:.2e}"),
            ))
        }),
        check("kernel matrix is symmetric PSD", || {
            let x = normal_matrix(&mut rng2, 15, 3);
            let centers = CenterSet::new(x.clone(), 15)?;
            let k = build_design_matrix(&x, &centers, &KernelConfig::new(1.0)?)?.into_inner();
            let asym = (&k - k.transpose()).amax();
            let min_eig = k.symmetric_eigenvalues().min();
            Ok((
                asym == 0.0 && min_eig > -1e-10,
                format!("min eigenvalue {min_eig:.3e}"),
            ))
        }),
    ]
}
