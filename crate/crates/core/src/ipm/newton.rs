//! Newton system of the predictor-corrector iteration.
//!
//! Given an interior point `(x, z, u, s)` and right-hand sides `b1..b4`, the
//! direction `(dx, dz, du, ds)` solves
//!
//! ```text
//!  Q dx − D du       = b1
//! −ds − Ĩ* du        = b2
//!  S dz + Z ds       = b3
//!  D* dx + Ĩ dz      = b4
//! ```
//!
//! `ds` and `dz` are eliminated, leaving the `(n+p)×(n+p)` system
//!
//! ```text
//! [ Q    −D ] [dx]   [ b1                        ]
//! [ D*    W ] [du] = [ b4 − Ĩ S⁻¹ (b3 + Z b2)     ]
//! ```
//!
//! with the positive diagonal `W = Ĩ S⁻¹ Z Ĩ*`.

use std::ops::{Add, Mul};

use nalgebra::{DMatrix, DVector};

use super::IpmError;
use crate::kkt::{PrimalDualPoint, Residuals};
use crate::model::{i_tilde, i_tilde_adjoint, AugmentedQP};

/// Search direction in all four blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub dx: DVector<f64>,
    pub dz: DVector<f64>,
    pub du: DVector<f64>,
    pub ds: DVector<f64>,
}

impl Direction {
    pub fn zeros(n: usize, p: usize) -> Self {
        Self {
            dx: DVector::zeros(n),
            dz: DVector::zeros(2 * p),
            du: DVector::zeros(p),
            ds: DVector::zeros(2 * p),
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.dx, &self.dz, &self.du, &self.ds]
            .iter()
            .all(|v| v.iter().all(|e| e.is_finite()))
    }
}

impl Add for &Direction {
    type Output = Direction;

    fn add(self, rhs: &Direction) -> Direction {
        Direction {
            dx: &self.dx + &rhs.dx,
            dz: &self.dz + &rhs.dz,
            du: &self.du + &rhs.du,
            ds: &self.ds + &rhs.ds,
        }
    }
}

impl Mul<f64> for &Direction {
    type Output = Direction;

    fn mul(self, t: f64) -> Direction {
        Direction {
            dx: &self.dx * t,
            dz: &self.dz * t,
            du: &self.du * t,
            ds: &self.ds * t,
        }
    }
}

/// Right-hand sides `(b1, b2, b3, b4)` of the four block equations.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonRhs {
    pub b1: DVector<f64>,
    pub b2: DVector<f64>,
    pub b3: DVector<f64>,
    pub b4: DVector<f64>,
}

impl NewtonRhs {
    pub fn zeros(n: usize, p: usize) -> Self {
        Self {
            b1: DVector::zeros(n),
            b2: DVector::zeros(2 * p),
            b3: DVector::zeros(2 * p),
            b4: DVector::zeros(p),
        }
    }

    /// Affine-scaling right-hand side `(−r1, −r2, −r3, −r4)`.
    pub fn affine(res: &Residuals) -> Self {
        Self {
            b1: -&res.r1,
            b2: -&res.r2,
            b3: -&res.r3,
            b4: -&res.r4,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.b1.norm_squared()
            + self.b2.norm_squared()
            + self.b3.norm_squared()
            + self.b4.norm_squared())
        .sqrt()
    }
}

impl Add for &NewtonRhs {
    type Output = NewtonRhs;

    fn add(self, rhs: &NewtonRhs) -> NewtonRhs {
        NewtonRhs {
            b1: &self.b1 + &rhs.b1,
            b2: &self.b2 + &rhs.b2,
            b3: &self.b3 + &rhs.b3,
            b4: &self.b4 + &rhs.b4,
        }
    }
}

/// Applies the left-hand side of the block system to `dir`.
pub fn apply_newton_operator(
    qp: &AugmentedQP,
    d: &DMatrix<f64>,
    pt: &PrimalDualPoint,
    dir: &Direction,
) -> NewtonRhs {
    NewtonRhs {
        b1: &qp.q_mat * &dir.dx - d * &dir.du,
        b2: -&dir.ds - i_tilde_adjoint(&dir.du),
        b3: pt.s.component_mul(&dir.dz) + pt.z.component_mul(&dir.ds),
        b4: d.tr_mul(&dir.dx) + i_tilde(&dir.dz),
    }
}

/// `‖A·dir − rhs‖ / (1 + ‖rhs‖)` over all four blocks.
pub fn newton_residual(
    qp: &AugmentedQP,
    d: &DMatrix<f64>,
    pt: &PrimalDualPoint,
    rhs: &NewtonRhs,
    dir: &Direction,
) -> f64 {
    let lhs = apply_newton_operator(qp, d, pt, dir);
    let diff = NewtonRhs {
        b1: &lhs.b1 - &rhs.b1,
        b2: &lhs.b2 - &rhs.b2,
        b3: &lhs.b3 - &rhs.b3,
        b4: &lhs.b4 - &rhs.b4,
    };
    diff.norm() / (1.0 + rhs.norm())
}

fn reduced_matrix(
    qp: &AugmentedQP,
    d: &DMatrix<f64>,
    w: &DVector<f64>,
    delta: f64,
) -> DMatrix<f64> {
    let (n, p) = (qp.n, qp.p);
    let mut k = DMatrix::zeros(n + p, n + p);
    k.view_mut((0, 0), (n, n)).copy_from(&qp.q_mat);
    k.view_mut((0, n), (n, p)).copy_from(&(-d));
    k.view_mut((n, 0), (p, n)).copy_from(&d.transpose());
    for i in 0..p {
        k[(n + i, n + i)] = w[i];
    }
    if delta > 0.0 {
        for i in 0..n + p {
            k[(i, i)] += delta;
        }
    }
    k
}

fn solve_reduced(k: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let lu = k.clone().lu();
    let mut sol = lu.solve(rhs)?;
    // one step of iterative refinement
    let r = rhs - k * &sol;
    if let Some(corr) = lu.solve(&r) {
        sol += corr;
    }
    sol.iter().all(|v| v.is_finite()).then_some(sol)
}

/// Solves the block Newton system at an interior point.
///
/// The reduced system is factorized without regularization first; on
/// failure `reg` and then `1e-8` are added to both diagonal blocks.
pub fn newton_solve(
    qp: &AugmentedQP,
    d: &DMatrix<f64>,
    pt: &PrimalDualPoint,
    rhs: &NewtonRhs,
    reg: f64,
) -> Result<Direction, IpmError> {
    let (n, p) = (qp.n, qp.p);
    if !pt.is_interior() {
        return Err(IpmError::NotInterior);
    }
    let w = DVector::from_fn(p, |i, _| pt.z[i] / pt.s[i] + pt.z[i + p] / pt.s[i + p]);

    // Ĩ S⁻¹ (b3 + Z b2)
    let t = (&rhs.b3 + pt.z.component_mul(&rhs.b2)).component_div(&pt.s);
    let mut reduced_rhs = DVector::zeros(n + p);
    reduced_rhs.rows_mut(0, n).copy_from(&rhs.b1);
    reduced_rhs
        .rows_mut(n, p)
        .copy_from(&(&rhs.b4 - i_tilde(&t)));

    for delta in [0.0, reg, 1e-8] {
        let Some(sol) = solve_reduced(&reduced_matrix(qp, d, &w, delta), &reduced_rhs) else {
            continue;
        };
        let dx = sol.rows(0, n).into_owned();
        let du = sol.rows(n, p).into_owned();
        let ds = -&rhs.b2 - i_tilde_adjoint(&du);
        let dz = (&rhs.b3 - pt.z.component_mul(&ds)).component_div(&pt.s);
        let dir = Direction { dx, dz, du, ds };
        if dir.is_finite() && newton_residual(qp, d, pt, rhs, &dir) <= 1e-8 {
            return Ok(dir);
        }
    }
    Err(IpmError::SingularNewtonSystem)
}
