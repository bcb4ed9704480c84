//! Step length, centering and corrector right-hand side.

use nalgebra::DVector;

use super::newton::{Direction, NewtonRhs};
use crate::kkt::{PrimalDualPoint, Residuals};

/// Largest `t ≥ 0` keeping `z + t·dz ≥ 0` and `s + t·ds ≥ 0`.
///
/// Returns `f64::INFINITY` when no component of `dz` or `ds` is negative.
pub fn max_step(pt: &PrimalDualPoint, dir: &Direction) -> f64 {
    ratio_test(&pt.z, &dir.dz).min(ratio_test(&pt.s, &dir.ds))
}

fn ratio_test(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

/// `σ = clamp((μᵃ/μ)³, 0, 1)`; zero when `μ = 0`.
pub fn centering_sigma(mu: f64, mu_affine: f64) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    (mu_affine / mu).powi(3).clamp(0.0, 1.0)
}

/// Complementarity `⟨z + t·dz, s + t·ds⟩ / 2p` at the trial point.
pub fn affine_mu(pt: &PrimalDualPoint, dir: &Direction, t_affine: f64) -> f64 {
    let m = pt.z.len();
    if m == 0 {
        return 0.0;
    }
    let z = &pt.z + &dir.dz * t_affine;
    let s = &pt.s + &dir.ds * t_affine;
    z.dot(&s) / m as f64
}

/// Right-hand side of the corrector system: only the complementarity block
/// is nonzero, `−dzᵃ ∘ dsᵃ + σμe`.
pub fn corrector_rhs(res: &Residuals, dir_affine: &Direction, sigma: f64, mu: f64) -> NewtonRhs {
    let n = res.r1.len();
    let p = res.r4.len();
    let mut rhs = NewtonRhs::zeros(n, p);
    rhs.b3 = (-dir_affine.dz.component_mul(&dir_affine.ds)).add_scalar(sigma * mu);
    rhs
}
