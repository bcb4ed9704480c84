//! Brute-force oracle for small instances: the optimal value, the vertices of
//! the solution polytope and its analytic center, computed without the
//! interior-point solver.

mod center;
mod enumeration;
pub(crate) mod linalg;
mod vertices;

use nalgebra::DVector;
use thiserror::Error;

use crate::model::{validate, ModelError, Problem};

pub use enumeration::{candidates, Candidate};

/// Largest analysis dimension the enumeration accepts (`3^p` patterns).
pub const P_MAX: usize = 10;
/// Largest signal dimension the enumeration accepts.
pub const N_MAX: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(
        "instance too large for the oracle: n = {n}, p = {p} (limits n ≤ {N_MAX}, p ≤ {P_MAX})"
    )]
    TooLarge { n: usize, p: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("witness objective {value} differs from the optimal value {optimal}")]
    NotOptimal { value: f64, optimal: f64 },
    #[error("witness has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub optimal_value: f64,
    pub witness: DVector<f64>,
    /// Sorted lexicographically.
    pub vertices: Vec<DVector<f64>>,
    pub analytic_center: DVector<f64>,
}

fn check_limits(problem: &Problem) -> Result<(), OracleError> {
    if problem.p() > P_MAX || problem.n() > N_MAX {
        return Err(OracleError::TooLarge {
            n: problem.n(),
            p: problem.p(),
        });
    }
    validate(problem).into_result()?;
    Ok(())
}

/// Optimal objective value and an optimal witness in the relative interior
/// of the solution set (the centroid of the optimal vertices).
pub fn optimal_value_by_sign_enumeration(
    problem: &Problem,
) -> Result<(f64, DVector<f64>), OracleError> {
    check_limits(problem)?;
    let (alpha, best) = enumeration::optimal_candidates(problem);
    let n = problem.n();
    let witness = best.iter().fold(DVector::zeros(n), |acc, v| acc + v) / best.len() as f64;
    Ok((alpha, witness))
}

/// Vertices of the solution polytope through an optimal `witness`.
pub fn enumerate_vertices(
    problem: &Problem,
    witness: &DVector<f64>,
    optimal_value: f64,
) -> Result<Vec<DVector<f64>>, OracleError> {
    check_limits(problem)?;
    if witness.len() != problem.n() {
        return Err(OracleError::Dimension {
            got: witness.len(),
            expected: problem.n(),
        });
    }
    let value = problem.objective(witness);
    if (value - optimal_value).abs() > 1e-9 * (1.0 + optimal_value.abs()) {
        return Err(OracleError::NotOptimal {
            value,
            optimal: optimal_value,
        });
    }
    Ok(vertices::vertices_through(problem, witness, optimal_value))
}

/// Analytic center of the polytope spanned by `vertices`.
pub fn analytic_center_bruteforce(problem: &Problem, vertices: &[DVector<f64>]) -> DVector<f64> {
    center::analytic_center(problem, vertices)
}

/// Runs the full oracle pipeline.
pub fn run_oracle(problem: &Problem) -> Result<OracleResult, OracleError> {
    let (optimal_value, witness) = optimal_value_by_sign_enumeration(problem)?;
    let vertices = enumerate_vertices(problem, &witness, optimal_value)?;
    let analytic_center = analytic_center_bruteforce(problem, &vertices);
    Ok(OracleResult {
        optimal_value,
        witness,
        vertices,
        analytic_center,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn vec(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    fn diag_problem(y: &[f64], lambda: f64) -> Problem {
        Problem::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            vec(y),
            lambda,
        )
        .unwrap()
    }

    #[test]
    fn two_point_solution_set() {
        let pb = Problem::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DMatrix::identity(2, 2),
            vec(&[1.0]),
            0.5,
        )
        .unwrap();
        let r = run_oracle(&pb).unwrap();
        assert!((r.optimal_value - 0.375).abs() < 1e-12);
        assert_eq!(r.vertices.len(), 2);
        assert!((&r.vertices[0] - vec(&[0.0, 0.5])).amax() < 1e-12);
        assert!((&r.vertices[1] - vec(&[0.5, 0.0])).amax() < 1e-12);
        assert!((&r.analytic_center - vec(&[0.25, 0.25])).amax() < 1e-10);
        assert!((&r.witness - vec(&[0.25, 0.25])).amax() < 1e-12);
    }

    #[test]
    fn strict_solution() {
        let r = run_oracle(&diag_problem(&[2.0, -2.0], 1.0)).unwrap();
        assert!((r.optimal_value - 3.0).abs() < 1e-12);
        assert_eq!(r.vertices.len(), 1);
        assert!((&r.vertices[0] - vec(&[1.0, -1.0])).amax() < 1e-12);
        assert_eq!(r.analytic_center, r.vertices[0]);
    }

    #[test]
    fn zero_data_gives_zero() {
        let r = run_oracle(&diag_problem(&[0.0, 0.0], 1.0)).unwrap();
        assert_eq!(r.optimal_value, 0.0);
        assert_eq!(r.vertices.len(), 1);
        assert!(r.vertices[0].amax() < 1e-14);
    }

    #[test]
    fn kernel_solution_is_alone() {
        let r = run_oracle(&diag_problem(&[0.1, 0.1], 1.0)).unwrap();
        assert_eq!(r.vertices.len(), 1);
        assert!(r.vertices[0].amax() < 1e-14);
        assert!((r.optimal_value - 0.01).abs() < 1e-14);
    }

    #[test]
    fn limits_are_enforced() {
        let pb = Problem::new(
            DMatrix::identity(2, 2),
            DMatrix::from_element(2, 11, 1.0),
            vec(&[1.0, 1.0]),
            1.0,
        )
        .unwrap();
        assert!(matches!(
            run_oracle(&pb),
            Err(OracleError::TooLarge { p: 11, .. })
        ));
    }

    #[test]
    fn suboptimal_witness_is_rejected() {
        let pb = diag_problem(&[2.0, -2.0], 1.0);
        assert!(matches!(
            enumerate_vertices(&pb, &vec(&[0.0, 0.0]), 3.0),
            Err(OracleError::NotOptimal { .. })
        ));
    }

    #[test]
    fn non_injective_is_rejected() {
        let pb = Problem::new(
            DMatrix::zeros(1, 2),
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            vec(&[1.0]),
            1.0,
        )
        .unwrap();
        assert!(matches!(run_oracle(&pb), Err(OracleError::Model(_))));
    }
}
