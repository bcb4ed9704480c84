//! KKT residuals and duality gap of the lifted problem.
//!
//! For a primal-dual point `(x, z, u, s)` the optimality system reads
//!
//! ```text
//! r1 = Qx − c − Du        (stationarity in x)
//! r2 = λe − s − Ĩ*u       (stationarity in z)
//! r3 = Zs                 (complementarity)
//! r4 = D*x + Ĩz           (coupling constraint)
//! ```

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::model::{i_tilde, i_tilde_adjoint, AugmentedQP};

/// Iterate `(x, z, u, s)`: `x ∈ ℝⁿ`, `z, s ∈ ℝ^{2p}`, `u ∈ ℝ^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    pub u: DVector<f64>,
    pub s: DVector<f64>,
}

impl PrimalDualPoint {
    pub fn new(x: DVector<f64>, z: DVector<f64>, u: DVector<f64>, s: DVector<f64>) -> Self {
        Self { x, z, u, s }
    }

    /// Strictly positive `z` and `s`, all entries finite.
    pub fn is_interior(&self) -> bool {
        self.is_finite() && self.z.iter().all(|v| *v > 0.0) && self.s.iter().all(|v| *v > 0.0)
    }

    pub fn is_finite(&self) -> bool {
        [&self.x, &self.z, &self.u, &self.s]
            .iter()
            .all(|v| v.iter().all(|e| e.is_finite()))
    }

    /// `⟨z, s⟩ / 2p`.
    pub fn complementarity(&self) -> f64 {
        let m = self.z.len();
        if m == 0 {
            0.0
        } else {
            self.z.dot(&self.s) / m as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub r1: DVector<f64>,
    pub r2: DVector<f64>,
    pub r3: DVector<f64>,
    pub r4: DVector<f64>,
    pub mu: f64,
}

/// Euclidean norm of each residual block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualNorms {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub mu: f64,
}

impl ResidualNorms {
    pub fn max_block(&self) -> f64 {
        self.r1.max(self.r2).max(self.r3).max(self.r4)
    }
}

impl Residuals {
    pub fn norms(&self) -> ResidualNorms {
        ResidualNorms {
            r1: self.r1.norm(),
            r2: self.r2.norm(),
            r3: self.r3.norm(),
            r4: self.r4.norm(),
            mu: self.mu,
        }
    }
}

pub fn residuals(qp: &AugmentedQP, d: &DMatrix<f64>, pt: &PrimalDualPoint) -> Residuals {
    let r1 = &qp.q_mat * &pt.x - &qp.c - d * &pt.u;
    let r2 = DVector::from_element(2 * qp.p, qp.lambda) - &pt.s - i_tilde_adjoint(&pt.u);
    let r3 = pt.z.component_mul(&pt.s);
    let r4 = d.tr_mul(&pt.x) + i_tilde(&pt.z);
    Residuals {
        r1,
        r2,
        r3,
        r4,
        mu: pt.complementarity(),
    }
}

/// `f(x, z) − g(x, s, u) = xᵀQx − cᵀx + λ⟨e, z⟩`, where `g = −½⟨Qx, x⟩` is
/// the dual objective on its feasible set.
///
/// Expanding with the residuals gives
/// `gap = ⟨z, s⟩ + ⟨x, r1⟩ + ⟨z, r2⟩ + ⟨u, r4⟩`, so on points where
/// `r1 = r2 = r4 = 0` the gap is exactly `⟨z, s⟩`.
pub fn duality_gap(qp: &AugmentedQP, _d: &DMatrix<f64>, pt: &PrimalDualPoint) -> f64 {
    let qx = &qp.q_mat * &pt.x;
    let primal = 0.5 * pt.x.dot(&qx) - qp.c.dot(&pt.x) + qp.lambda * pt.z.sum();
    let dual = -0.5 * pt.x.dot(&qx);
    primal - dual
}

/// The coupling operator `(D*  Ĩ)` of size `p × (n + 2p)`.
pub fn coupling_matrix(d: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = d.shape();
    let mut m = DMatrix::zeros(p, n + 2 * p);
    m.columns_mut(0, n).copy_from(&d.transpose());
    for i in 0..p {
        m[(i, n + i)] = 1.0;
        m[(i, n + p + i)] = -1.0;
    }
    m
}

/// The operator `(D; Ĩ*)` of size `(n + 2p) × p` whose range is the
/// orthogonal complement of `Ker (D*  Ĩ)`.
pub fn coupling_adjoint(d: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = d.shape();
    let mut m = DMatrix::zeros(n + 2 * p, p);
    m.rows_mut(0, n).copy_from(d);
    for i in 0..p {
        m[(n + i, i)] = 1.0;
        m[(n + p + i, i)] = -1.0;
    }
    m
}
