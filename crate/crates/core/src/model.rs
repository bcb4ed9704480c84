//! Problem definition, well-posedness checks and the lifted quadratic program.
//!
//! The analysis-Lasso objective is
//!
//! ```text
//! h(x) = ½‖y − Φx‖₂² + λ‖D*x‖₁
//! ```
//!
//! with `Φ` of size q×n and the dictionary `D` of size n×p. Lifting the
//! analysis coefficients `D*x` into a nonnegative split variable `z ∈ ℝ^{2p}`
//! gives the smooth problem
//!
//! ```text
//! min ½⟨Qx, x⟩ − ⟨c, x⟩ + λ⟨e, z⟩   s.t.   D*x + Ĩz = 0,  z ≥ 0
//! ```
//!
//! where `Q = Φ*Φ`, `c = Φ*y`, `Ĩ = (I_p  −I_p)` and `z = (negative parts;
//! positive parts)` of `D*x`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("lambda must be positive and finite, got {0}")]
    Lambda(f64),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("restricted injectivity violated: Ker D* ∩ Ker Φ = {{0}} fails (rank [Φ; D*] = {rank} < n = {n})")]
    RestrictedInjectivity { rank: usize, n: usize },
    #[error("Q is not symmetric positive semidefinite: {0}")]
    NotPsd(String),
}

/// The quadruple `(Φ, D, y, λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    phi: DMatrix<f64>,
    d: DMatrix<f64>,
    y: DVector<f64>,
    lambda: f64,
}

impl Problem {
    /// Builds a problem after structural checks. Restricted injectivity is
    /// checked separately by [`validate`].
    pub fn new(
        phi: DMatrix<f64>,
        d: DMatrix<f64>,
        y: DVector<f64>,
        lambda: f64,
    ) -> Result<Self, ModelError> {
        if phi.ncols() != d.nrows() {
            return Err(ModelError::Dimension(format!(
                "phi has {} columns but d has {} rows",
                phi.ncols(),
                d.nrows()
            )));
        }
        if y.len() != phi.nrows() {
            return Err(ModelError::Dimension(format!(
                "y has length {} but phi has {} rows",
                y.len(),
                phi.nrows()
            )));
        }
        if phi.ncols() == 0 {
            return Err(ModelError::Dimension("n must be at least 1".into()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ModelError::Lambda(lambda));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("phi"));
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("d"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("y"));
        }
        Ok(Self { phi, d, y, lambda })
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Signal dimension.
    pub fn n(&self) -> usize {
        self.phi.ncols()
    }

    /// Number of atoms in the dictionary.
    pub fn p(&self) -> usize {
        self.d.ncols()
    }

    /// Number of observations.
    pub fn q(&self) -> usize {
        self.phi.nrows()
    }

    /// Analysis coefficients `D*x`.
    pub fn analysis(&self, x: &DVector<f64>) -> DVector<f64> {
        self.d.tr_mul(x)
    }

    /// `h(x) = ½‖y − Φx‖² + λ‖D*x‖₁`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let r = &self.y - &self.phi * x;
        0.5 * r.norm_squared() + self.lambda * self.analysis(x).lp_norm(1)
    }

    /// Minimum-norm least-squares solution of `Φx = y`.
    pub fn least_squares_x(&self) -> DVector<f64> {
        let svd = self.phi.clone().svd(true, true);
        let tol = svd.singular_values.max() * (self.q().max(self.n()) as f64) * f64::EPSILON;
        svd.solve(&self.y, tol)
            .unwrap_or_else(|_| DVector::zeros(self.n()))
    }
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    /// Numerical rank of the stacked `(q+p)×n` matrix `[Φ; D*]`.
    pub rank: usize,
    /// Threshold used for the rank decision.
    pub rank_tol: f64,
    pub restricted_injectivity: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.restricted_injectivity
    }

    pub fn into_result(self) -> Result<Self, ModelError> {
        if self.restricted_injectivity {
            Ok(self)
        } else {
            Err(ModelError::RestrictedInjectivity {
                rank: self.rank,
                n: self.n,
            })
        }
    }
}

/// Stacks `[Φ; D*]`.
pub fn stacked_operator(problem: &Problem) -> DMatrix<f64> {
    let (q, n, p) = (problem.q(), problem.n(), problem.p());
    let mut m = DMatrix::zeros(q + p, n);
    m.rows_mut(0, q).copy_from(&problem.phi);
    m.rows_mut(q, p).copy_from(&problem.d.transpose());
    m
}

/// Checks `Ker D* ∩ Ker Φ = {0}` through a column-pivoted QR rank test on
/// `[Φ; D*]`.
pub fn validate(problem: &Problem) -> ValidationReport {
    let (q, n, p) = (problem.q(), problem.n(), problem.p());
    let m = stacked_operator(problem);
    let max_col = m.column_iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    let rank_tol = ((q + p).max(n) as f64) * f64::EPSILON * max_col;
    let rank = if m.nrows() == 0 || max_col == 0.0 {
        0
    } else {
        let r = m.col_piv_qr().r();
        (0..r.nrows().min(r.ncols()))
            .filter(|&i| r[(i, i)].abs() > rank_tol)
            .count()
    };
    ValidationReport {
        n,
        p,
        q,
        rank,
        rank_tol,
        restricted_injectivity: rank == n,
    }
}

/// Data of the lifted quadratic program. `Ĩ` and `e` are implicit; see
/// [`i_tilde`] and [`i_tilde_adjoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedQP {
    pub q_mat: DMatrix<f64>,
    pub c: DVector<f64>,
    pub lambda: f64,
    pub n: usize,
    pub p: usize,
    /// `½‖y‖²`, the constant dropped when expanding the data term.
    pub half_norm_y_sq: f64,
}

impl AugmentedQP {
    /// Builds a lifted QP from raw parts, checking symmetry and
    /// semidefiniteness of `q_mat`.
    pub fn from_parts(
        q_mat: DMatrix<f64>,
        c: DVector<f64>,
        lambda: f64,
        p: usize,
        half_norm_y_sq: f64,
    ) -> Result<Self, ModelError> {
        let n = c.len();
        if q_mat.nrows() != n || q_mat.ncols() != n {
            return Err(ModelError::Dimension(format!(
                "Q is {}x{} but c has length {n}",
                q_mat.nrows(),
                q_mat.ncols()
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ModelError::Lambda(lambda));
        }
        let scale = q_mat.amax();
        let asym = (&q_mat - q_mat.transpose()).amax();
        if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(ModelError::NotPsd(format!("asymmetry {asym:e}")));
        }
        if n > 0 {
            let min_eig = q_mat.clone().symmetric_eigenvalues().min();
            if min_eig < -1e-10 * q_mat.norm() {
                return Err(ModelError::NotPsd(format!("eigenvalue {min_eig:e}")));
            }
        }
        Ok(Self {
            q_mat,
            c,
            lambda,
            n,
            p,
            half_norm_y_sq,
        })
    }

    /// `f(x, z) = ½⟨Qx, x⟩ − ⟨c, x⟩ + λ⟨e, z⟩`, ignoring the coupling
    /// constraint.
    pub fn f_value(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q_mat * x)) - self.c.dot(x) + self.lambda * z.sum()
    }
}

/// `Q = Φ*Φ`, `c = Φ*y`.
pub fn lift(problem: &Problem) -> AugmentedQP {
    let q_mat = problem.phi.tr_mul(&problem.phi);
    let c = problem.phi.tr_mul(&problem.y);
    AugmentedQP {
        q_mat,
        c,
        lambda: problem.lambda,
        n: problem.n(),
        p: problem.p(),
        half_norm_y_sq: 0.5 * problem.y.norm_squared(),
    }
}

/// Splits analysis coefficients into `z = (negative parts; positive parts)`
/// so that `D*x + Ĩz = 0` and `⟨e, z⟩ = ‖D*x‖₁`.
pub fn split_variable(d_adj_x: &DVector<f64>) -> DVector<f64> {
    let p = d_adj_x.len();
    DVector::from_fn(2 * p, |i, _| {
        if i < p {
            (-d_adj_x[i]).max(0.0)
        } else {
            d_adj_x[i - p].max(0.0)
        }
    })
}

/// `Ĩz = z[..p] − z[p..]`.
pub fn i_tilde(z: &DVector<f64>) -> DVector<f64> {
    let p = z.len() / 2;
    DVector::from_fn(p, |i, _| z[i] - z[i + p])
}

/// `Ĩ*u = (u; −u)`.
pub fn i_tilde_adjoint(u: &DVector<f64>) -> DVector<f64> {
    let p = u.len();
    DVector::from_fn(2 * p, |i, _| if i < p { u[i] } else { -u[i - p] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_point_example() -> Problem {
        Problem::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0]),
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn validate_two_point_example_full_rank() {
        let report = validate(&two_point_example());
        assert!(report.passed());
        assert_eq!(report.rank, 2);
    }

    #[test]
    fn validate_handles_wide_stack() {
        // q + p < n: the rank is at most q + p, so injectivity fails
        let pb = Problem::new(
            DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]),
            DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 1.0]),
            DVector::from_vec(vec![1.0]),
            1.0,
        )
        .unwrap();
        let report = validate(&pb);
        assert_eq!(report.rank, 2);
        assert!(!report.passed());
    }

    #[test]
    fn validate_detects_common_kernel() {
        let pb = Problem::new(
            DMatrix::zeros(1, 2),
            DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
            DVector::from_vec(vec![0.0]),
            1.0,
        )
        .unwrap();
        let report = validate(&pb);
        assert!(!report.passed());
        assert_eq!(report.rank, 1);
        assert_eq!(
            report.into_result().unwrap_err(),
            ModelError::RestrictedInjectivity { rank: 1, n: 2 }
        );
    }

    #[test]
    fn identity_dictionary_always_valid() {
        for phi in [DMatrix::zeros(2, 3), DMatrix::from_element(1, 3, 7.0)] {
            let y = DVector::zeros(phi.nrows());
            let pb = Problem::new(phi, DMatrix::identity(3, 3), y, 0.3).unwrap();
            assert!(validate(&pb).passed());
        }
    }

    #[test]
    fn structural_errors() {
        let err = Problem::new(
            DMatrix::zeros(1, 2),
            DMatrix::identity(3, 3),
            DVector::zeros(1),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Dimension(_)));
        let err = Problem::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DVector::zeros(1),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Dimension(_)));
        let err = Problem::new(
            DMatrix::zeros(1, 2),
            DMatrix::identity(2, 2),
            DVector::zeros(1),
            0.0,
        )
        .unwrap_err();
        assert_eq!(err, ModelError::Lambda(0.0));
    }

    #[test]
    fn objective_values() {
        let pb = two_point_example();
        // ½(1 − ½)² + ½·½ = 3/8
        assert_relative_eq!(pb.objective(&DVector::from_vec(vec![0.5, 0.0])), 0.375);
        assert_relative_eq!(pb.objective(&DVector::from_vec(vec![0.25, 0.25])), 0.375);
        assert_relative_eq!(pb.objective(&DVector::zeros(2)), 0.5);
    }

    #[test]
    fn lift_examples() {
        let qp = lift(&two_point_example());
        assert_eq!(qp.q_mat, DMatrix::from_element(2, 2, 1.0));
        assert_eq!(qp.c, DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(qp.half_norm_y_sq, 0.5);

        let pb = Problem::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.5, -4.0]),
            1.0,
        )
        .unwrap();
        let qp = lift(&pb);
        assert_eq!(qp.q_mat, DMatrix::identity(2, 2));
        assert_eq!(qp.c, DVector::from_vec(vec![1.5, -4.0]));

        let pb = Problem::new(
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![3.0]),
            1.0,
        )
        .unwrap();
        let qp = lift(&pb);
        assert_eq!(qp.q_mat[(0, 0)], 4.0);
        assert_eq!(qp.c[0], 6.0);
    }

    #[test]
    fn lift_is_deterministic() {
        let pb = two_point_example();
        assert_eq!(lift(&pb), lift(&pb));
    }

    #[test]
    fn split_examples() {
        let z = split_variable(&DVector::from_vec(vec![3.0, -2.0]));
        assert_eq!(z.as_slice(), &[0.0, 2.0, 3.0, 0.0]);
        assert_eq!(split_variable(&DVector::zeros(3)), DVector::zeros(6));
        let z = split_variable(&DVector::from_vec(vec![0.25, 0.25]));
        assert_eq!(z.as_slice(), &[0.0, 0.0, 0.25, 0.25]);
        assert_eq!(z.sum(), 0.5);
    }

    #[test]
    fn from_parts_rejects_indefinite() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let err = AugmentedQP::from_parts(q, DVector::zeros(2), 1.0, 1, 0.0).unwrap_err();
        assert!(matches!(err, ModelError::NotPsd(_)));
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(AugmentedQP::from_parts(q, DVector::zeros(2), 1.0, 1, 0.0).is_err());
    }

    fn small_problem() -> impl Strategy<Value = (Problem, DVector<f64>)> {
        (1usize..4, 1usize..4, 1usize..5).prop_flat_map(|(q, n, p)| {
            (
                prop::collection::vec(-3.0..3.0f64, q * n),
                prop::collection::vec(-3.0..3.0f64, n * p),
                prop::collection::vec(-3.0..3.0f64, q),
                0.01..2.0f64,
                prop::collection::vec(-5.0..5.0f64, n),
            )
                .prop_map(move |(phi, d, y, lambda, x)| {
                    let pb = Problem::new(
                        DMatrix::from_vec(q, n, phi),
                        DMatrix::from_vec(n, p, d),
                        DVector::from_vec(y),
                        lambda,
                    )
                    .unwrap();
                    (pb, DVector::from_vec(x))
                })
        })
    }

    proptest! {
        #[test]
        fn lifted_objective_matches((pb, x) in small_problem()) {
            let qp = lift(&pb);
            let z = split_variable(&pb.analysis(&x));
            let h = pb.objective(&x);
            let lifted = qp.f_value(&x, &z) + qp.half_norm_y_sq;
            prop_assert!((h - lifted).abs() <= 1e-10 * (1.0 + h.abs()));
        }

        #[test]
        fn split_satisfies_coupling((pb, x) in small_problem()) {
            let dx = pb.analysis(&x);
            let z = split_variable(&dx);
            prop_assert!(z.iter().all(|v| *v >= 0.0));
            let r = &dx + i_tilde(&z);
            prop_assert!(r.amax() <= 1e-12);
            prop_assert!((z.sum() - dx.lp_norm(1)).abs() <= 1e-12 * (1.0 + z.sum()));
        }
    }
}
