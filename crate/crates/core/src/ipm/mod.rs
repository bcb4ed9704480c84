//! Mehrotra predictor-corrector interior-point method on the lifted problem.
//!
//! Each iteration computes an affine-scaling (predictor) direction from the
//! current KKT residuals, measures how much complementarity the affine step
//! would remove, derives the centering weight `σ = (μᵃ/μ)³`, and adds a
//! corrector direction that compensates the second-order term `dzᵃ ∘ dsᵃ`
//! while pulling toward the central path. All four blocks move with the same
//! step length.
//!
//! The central path converges to the analytic center of the optimal face,
//! which is a relative-interior point of the solution set and therefore a
//! solution of maximal D-support. Mehrotra's adaptive centering drives `μ`
//! down so quickly that the products `z_i s_i` can freeze out of balance, so
//! after the stopping test holds a short centering phase restores them before
//! the point is returned.

mod newton;
mod step;

pub use newton::{apply_newton_operator, newton_residual, newton_solve, Direction, NewtonRhs};
pub use step::{affine_mu, centering_sigma, corrector_rhs, max_step};

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::kkt::{residuals, PrimalDualPoint, ResidualNorms};
use crate::model::{i_tilde_adjoint, lift, split_variable, validate, ModelError, Problem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IpmError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("invalid starting point: {0}")]
    Start(String),
    #[error("iterate is not strictly interior")]
    NotInterior,
    #[error("Newton system is singular even after regularization")]
    SingularNewtonSystem,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stopping tolerance on every residual block and on `μ`.
    pub eps: f64,
    /// Fraction of the maximal step actually taken, in `(0, 1)`.
    pub eta: f64,
    pub max_iters: usize,
    /// Upper bound on the step length.
    pub t_cap: f64,
    /// First diagonal regularization tried when the Newton system is singular.
    pub reg: f64,
    /// After the predictor-corrector loop meets the stopping test, take pure
    /// centering steps at a fixed small `μ` so that the returned iterate lies
    /// on the central path rather than on a weighted version of it.
    pub recenter: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            eta: 0.95,
            max_iters: 200,
            t_cap: 1.0,
            reg: 1e-12,
            recenter: true,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<(), IpmError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(IpmError::Config(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(IpmError::Config(format!(
                "eta must lie in (0, 1), got {}",
                self.eta
            )));
        }
        if self.max_iters == 0 {
            return Err(IpmError::Config("max_iters must be positive".into()));
        }
        if self.t_cap.is_nan() || self.t_cap <= 0.0 {
            return Err(IpmError::Config(format!(
                "t_cap must be positive, got {}",
                self.t_cap
            )));
        }
        if !(self.reg >= 0.0 && self.reg.is_finite()) {
            return Err(IpmError::Config(format!(
                "reg must be nonnegative, got {}",
                self.reg
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "converged")]
    Converged,
    #[serde(rename = "max-iters")]
    MaxIterations,
    #[serde(rename = "numerical-failure")]
    NumericalFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max-iters",
            Status::NumericalFailure => "numerical-failure",
        }
    }
}

/// One row of the iteration log. Iteration 0 is the starting point, for
/// which `step`, `sigma` and `direction_residual` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub point: PrimalDualPoint,
    pub residuals: ResidualNorms,
    pub step: f64,
    pub sigma: f64,
    pub mu_affine: f64,
    /// Relative block residual of the combined direction that produced this
    /// iterate.
    pub direction_residual: f64,
    /// Whether this step belongs to the terminal centering phase.
    pub centering: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    pub status: Status,
    /// Largest relative deviation `|z_i s_i / μ − 1|` at the returned point.
    pub centrality: f64,
}

impl SolveTrace {
    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("trace always holds the starting point")
    }
}

/// Builds an interior starting point around a given primal `x`:
/// `z = split(D*x) + ½`, `u = 0`, `s = λe` (floored at `λ/2`, or at 1 for
/// tiny `λ`).
pub fn start_from_x(problem: &Problem, x: &DVector<f64>) -> Result<PrimalDualPoint, IpmError> {
    if x.len() != problem.n() {
        return Err(IpmError::Start(format!(
            "x has length {} but n = {}",
            x.len(),
            problem.n()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(IpmError::Start("x has non-finite entries".into()));
    }
    let p = problem.p();
    let lambda = problem.lambda();
    let z = split_variable(&problem.analysis(x)).add_scalar(0.5);
    let u = DVector::zeros(p);
    let floor = if lambda < 1e-8 { 1.0 } else { 0.5 * lambda };
    let s = (DVector::from_element(2 * p, lambda) - i_tilde_adjoint(&u)).map(|v| v.max(floor));
    Ok(PrimalDualPoint::new(x.clone(), z, u, s))
}

/// Default start: `x⁰` solves the ridge system `(Q + I)x = c`.
pub fn default_start(problem: &Problem) -> PrimalDualPoint {
    let qp = lift(problem);
    let n = problem.n();
    let a = &qp.q_mat + nalgebra::DMatrix::<f64>::identity(n, n);
    let x = a
        .cholesky()
        .map(|ch| ch.solve(&qp.c))
        .unwrap_or_else(|| DVector::zeros(n));
    start_from_x(problem, &x).expect("ridge solution has the right shape")
}

/// Runs the predictor-corrector iteration.
///
/// Returns the final iterate and the full trace. If the iteration limit is
/// hit, the iterate with the smallest residual is returned; on a numerical
/// failure the last accepted iterate is returned. The status in the trace
/// tells which case occurred.
pub fn solve(
    problem: &Problem,
    config: &SolverConfig,
    start: Option<PrimalDualPoint>,
) -> Result<(PrimalDualPoint, SolveTrace), IpmError> {
    config.check()?;
    validate(problem).into_result()?;
    let (n, p) = (problem.n(), problem.p());
    let mut pt = match start {
        Some(pt) => {
            if pt.x.len() != n || pt.z.len() != 2 * p || pt.u.len() != p || pt.s.len() != 2 * p {
                return Err(IpmError::Start(
                    "block dimensions do not match the problem".into(),
                ));
            }
            if !pt.is_interior() {
                return Err(IpmError::Start("z and s must be strictly positive".into()));
            }
            pt
        }
        None => default_start(problem),
    };

    let qp = lift(problem);
    let d = problem.d();
    let mut res = residuals(&qp, d, &pt);
    let mut records = vec![IterationRecord {
        iter: 0,
        point: pt.clone(),
        residuals: res.norms(),
        step: 0.0,
        sigma: 0.0,
        mu_affine: 0.0,
        direction_residual: 0.0,
        centering: false,
    }];
    let mut best = (res.norms().max_block().max(res.mu), pt.clone());

    let status = loop {
        let norms = res.norms();
        if norms.max_block() <= config.eps && norms.mu <= config.eps {
            break Status::Converged;
        }
        if records.len() > config.max_iters {
            break Status::MaxIterations;
        }

        let affine_rhs = NewtonRhs::affine(&res);
        let Ok(dir_aff) = newton_solve(&qp, d, &pt, &affine_rhs, config.reg) else {
            break Status::NumericalFailure;
        };
        let t_aff = match max_step(&pt, &dir_aff) {
            t if t.is_finite() => t,
            _ => config.t_cap,
        };
        let mu_aff = affine_mu(&pt, &dir_aff, t_aff);
        let sigma = centering_sigma(res.mu, mu_aff);

        let corr_rhs = corrector_rhs(&res, &dir_aff, sigma, res.mu);
        let Ok(dir_corr) = newton_solve(&qp, d, &pt, &corr_rhs, config.reg) else {
            break Status::NumericalFailure;
        };
        let dir = &dir_aff + &dir_corr;
        let direction_residual = newton_residual(&qp, d, &pt, &(&affine_rhs + &corr_rhs), &dir);

        let step = (config.eta * max_step(&pt, &dir)).min(config.t_cap);
        let next = PrimalDualPoint::new(
            &pt.x + &dir.dx * step,
            &pt.z + &dir.dz * step,
            &pt.u + &dir.du * step,
            &pt.s + &dir.ds * step,
        );
        if !next.is_interior() {
            break Status::NumericalFailure;
        }
        pt = next;
        res = residuals(&qp, d, &pt);
        let norms = res.norms();
        let score = norms.max_block().max(norms.mu);
        if score <= best.0 {
            best = (score, pt.clone());
        }
        records.push(IterationRecord {
            iter: records.len(),
            point: pt.clone(),
            residuals: norms,
            step,
            sigma,
            mu_affine: mu_aff,
            direction_residual,
            centering: false,
        });
    };

    if status == Status::Converged && config.recenter && p > 0 {
        if let Some(centered) = recenter(&qp, d, &pt, config, &mut records) {
            pt = centered;
        }
    }

    let final_point = match status {
        Status::MaxIterations => best.1,
        _ => pt,
    };
    let centrality = centrality(&final_point);
    Ok((
        final_point,
        SolveTrace {
            records,
            status,
            centrality,
        },
    ))
}

/// `max_i |z_i s_i / μ − 1|` with `μ = ⟨z, s⟩ / 2p`.
pub fn centrality(pt: &PrimalDualPoint) -> f64 {
    let mu = pt.complementarity();
    if mu <= 0.0 {
        return 0.0;
    }
    pt.z.iter()
        .zip(pt.s.iter())
        .map(|(z, s)| (z * s / mu - 1.0).abs())
        .fold(0.0, f64::max)
}

const CENTERING_TOL: f64 = 1e-10;
const CENTERING_MAX_STEPS: usize = 60;
/// Tenfold reductions of the centering target after the first. Going deeper
/// stops paying off: the active slacks `s_i = λ ∓ u_i` shrink like `μ/z_i`
/// and carry an absolute rounding error near `ε_mach·λ`, which moves the
/// point along the optimal face.
const CENTERING_STAGES: usize = 1;

/// Terminal centering. Once the stopping test holds, the iterate may sit
/// anywhere in a neighborhood of the solution set where the products
/// `z_i s_i` are unbalanced, which biases `x` toward one side of the optimal
/// face. This phase takes Newton steps toward the central point `Zs = μ_t e`
/// and then follows the path to a tenfold smaller target.
///
/// The first target is small enough that `⟨z, s⟩`, which bounds λ times the
/// excess of `‖D*x‖₁` over its optimal value, stays below ε. Returns the last
/// point that was centered to tolerance, or `None` if even the first target
/// fails, in which case the caller keeps its iterate.
fn recenter(
    qp: &crate::model::AugmentedQP,
    d: &nalgebra::DMatrix<f64>,
    start: &PrimalDualPoint,
    config: &SolverConfig,
    records: &mut Vec<IterationRecord>,
) -> Option<PrimalDualPoint> {
    let m = start.z.len() as f64;
    let mut target = start
        .complementarity()
        .min(0.5 * config.eps * qp.lambda.min(1.0) / m);
    let mut best = None;
    for _ in 0..=CENTERING_STAGES {
        let from = best.as_ref().unwrap_or(start);
        match center_at(qp, d, from, target, config, records.len()) {
            Some((pt, phase)) => {
                records.extend(phase);
                best = Some(pt);
            }
            None => break,
        }
        target *= 0.1;
    }
    best
}

/// Newton steps toward `Zs = target·e` keeping the stopping test's
/// feasibility. Returns the centered point and the records of the steps.
fn center_at(
    qp: &crate::model::AugmentedQP,
    d: &nalgebra::DMatrix<f64>,
    start: &PrimalDualPoint,
    target: f64,
    config: &SolverConfig,
    first_iter: usize,
) -> Option<(PrimalDualPoint, Vec<IterationRecord>)> {
    let mut pt = start.clone();
    let mut phase = Vec::new();
    for _ in 0..CENTERING_MAX_STEPS {
        let res = residuals(qp, d, &pt);
        let norms = res.norms();
        let off_center =
            pt.z.iter()
                .zip(pt.s.iter())
                .map(|(z, s)| (z * s / target - 1.0).abs())
                .fold(0.0, f64::max);
        let feasible = norms.r1.max(norms.r2).max(norms.r4) <= config.eps;
        if off_center <= CENTERING_TOL && feasible {
            return Some((pt, phase));
        }
        let mut rhs = NewtonRhs::affine(&res);
        rhs.b3 = rhs.b3.add_scalar(target);
        let dir = newton_solve(qp, d, &pt, &rhs, config.reg).ok()?;
        let direction_residual = newton_residual(qp, d, &pt, &rhs, &dir);
        let step = (config.eta * max_step(&pt, &dir)).min(1.0);
        let next = PrimalDualPoint::new(
            &pt.x + &dir.dx * step,
            &pt.z + &dir.dz * step,
            &pt.u + &dir.du * step,
            &pt.s + &dir.ds * step,
        );
        if !next.is_interior() {
            return None;
        }
        pt = next;
        let norms = residuals(qp, d, &pt).norms();
        phase.push(IterationRecord {
            iter: first_iter + phase.len(),
            point: pt.clone(),
            residuals: norms,
            step,
            sigma: 1.0,
            mu_affine: 0.0,
            direction_residual,
            centering: true,
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

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
    fn config_validation() {
        assert!(SolverConfig::default().check().is_ok());
        for cfg in [
            SolverConfig {
                eta: 1.0,
                ..Default::default()
            },
            SolverConfig {
                eta: 0.0,
                ..Default::default()
            },
            SolverConfig {
                eps: 0.0,
                ..Default::default()
            },
            SolverConfig {
                max_iters: 0,
                ..Default::default()
            },
        ] {
            assert!(matches!(cfg.check(), Err(IpmError::Config(_))));
        }
    }

    #[test]
    fn start_is_interior_and_coupled() {
        let pb = two_point_example();
        let pt = start_from_x(&pb, &DVector::from_vec(vec![0.7, 0.0])).unwrap();
        assert!(pt.is_interior());
        let res = residuals(&lift(&pb), pb.d(), &pt);
        assert!(res.r4.amax() <= 1e-15);
        assert!(res.r2.amax() <= 1e-15);
        assert!(default_start(&pb).is_interior());
        assert!(start_from_x(&pb, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn refuses_non_injective_problem() {
        let pb = Problem::new(
            DMatrix::zeros(1, 2),
            DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
            DVector::from_vec(vec![0.0]),
            1.0,
        )
        .unwrap();
        let err = solve(&pb, &SolverConfig::default(), None).unwrap_err();
        assert!(matches!(
            err,
            IpmError::Model(ModelError::RestrictedInjectivity { .. })
        ));
    }

    #[test]
    fn rejects_boundary_start() {
        let pb = two_point_example();
        let mut pt = default_start(&pb);
        pt.s[1] = 0.0;
        assert!(matches!(
            solve(&pb, &SolverConfig::default(), Some(pt)),
            Err(IpmError::Start(_))
        ));
    }

    #[test]
    fn two_point_example_converges_to_center() {
        let pb = two_point_example();
        let start = start_from_x(&pb, &DVector::from_vec(vec![0.7, 0.0])).unwrap();
        let (pt, trace) = solve(&pb, &SolverConfig::default(), Some(start)).unwrap();
        assert_eq!(trace.status, Status::Converged);
        let err = (&pt.x - DVector::from_vec(vec![0.25, 0.25])).amax();
        assert!(err <= 1e-6, "x = {}, err = {err:e}", pt.x);
    }

    #[test]
    fn trace_invariants_hold_each_iteration() {
        let pb = two_point_example();
        let start = start_from_x(&pb, &DVector::from_vec(vec![0.7, 0.0])).unwrap();
        let (_, trace) = solve(&pb, &SolverConfig::default(), Some(start)).unwrap();
        for rec in &trace.records {
            assert!(rec.point.is_interior(), "iteration {}", rec.iter);
            assert!(rec.direction_residual <= 1e-8, "iteration {}", rec.iter);
            assert!((0.0..=1.0).contains(&rec.sigma));
        }
        let last = trace.last();
        assert!(last.residuals.max_block() <= 1e-8);
        assert!(last.residuals.mu <= 1e-8);
    }

    #[test]
    fn soft_threshold_instance() {
        let pb = Problem::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![2.0, -2.0]),
            1.0,
        )
        .unwrap();
        let (pt, trace) = solve(&pb, &SolverConfig::default(), None).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert!((&pt.x - DVector::from_vec(vec![1.0, -1.0])).amax() <= 1e-6);
    }

    #[test]
    fn iteration_limit_reports_best_iterate() {
        let pb = two_point_example();
        let cfg = SolverConfig {
            max_iters: 2,
            ..Default::default()
        };
        let (pt, trace) = solve(&pb, &cfg, None).unwrap();
        assert_eq!(trace.status, Status::MaxIterations);
        assert_eq!(trace.iterations(), 2);
        assert!(pt.is_interior());
    }
}
