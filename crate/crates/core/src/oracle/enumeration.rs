//! Optimal value by exhaustive enumeration of analysis sign patterns.
//!
//! For a pattern `σ ∈ {−1,0,+1}^p` with zero set `Z`, the objective restricted
//! to `{x : (D*x)_Z = 0}` and the closed orthant selected by `σ` agrees with
//! the smooth function `½‖y − Φx‖² + λ⟨σ, D*x⟩`. Parameterizing the subspace
//! as `x = Bw`, that function has a unique stationary point exactly when `ΦB`
//! is injective. Every vertex of the solution set arises this way from its
//! own sign pattern, and each candidate is a feasible point whose true
//! objective we evaluate directly, so the minimum over sign-consistent
//! candidates is the optimal value.

use nalgebra::{DMatrix, DVector};

use super::linalg::{full_rank_solve, null_space};
use crate::model::Problem;

const RANK_TOL: f64 = 1e-10;
const SIGN_SLACK: f64 = 1e-9;

/// A sign-consistent stationary point of one pattern.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub x: DVector<f64>,
    pub value: f64,
}

/// All sign-consistent candidates, in pattern order.
pub fn candidates(problem: &Problem) -> Vec<Candidate> {
    let n = problem.n();
    let p = problem.p();
    let phi = problem.phi();
    let d = problem.d();
    let d_adj = d.transpose();
    let phi_t_y = phi.tr_mul(problem.y());
    let lambda = problem.lambda();

    let mut out = Vec::new();
    let mut sigma = vec![-1i8; p];
    loop {
        let zeros: Vec<usize> = (0..p).filter(|&i| sigma[i] == 0).collect();
        let mut dz = DMatrix::zeros(zeros.len(), n);
        for (r, &i) in zeros.iter().enumerate() {
            dz.set_row(r, &d_adj.row(i));
        }
        let basis = null_space(&dz, n, RANK_TOL);
        let m = phi * &basis;
        let sig = DVector::from_iterator(p, sigma.iter().map(|&s| f64::from(s)));
        let rhs = basis.tr_mul(&(&phi_t_y - d * &sig * lambda));
        let gram = m.tr_mul(&m);
        if let Some(w) = full_rank_solve(&gram, &rhs, RANK_TOL) {
            let x = &basis * w;
            let dx = &d_adj * &x;
            let slack = SIGN_SLACK * (1.0 + dx.amax());
            if (0..p).all(|i| sigma[i] == 0 || f64::from(sigma[i]) * dx[i] >= -slack) {
                let value = problem.objective(&x);
                out.push(Candidate { x, value });
            }
        }
        if !advance(&mut sigma) {
            break;
        }
    }
    out
}

fn advance(sigma: &mut [i8]) -> bool {
    for s in sigma.iter_mut() {
        if *s < 1 {
            *s += 1;
            return true;
        }
        *s = -1;
    }
    false
}

/// Minimum of the objective over all candidates, with the candidates
/// attaining it (within `1e-9·(1 + |α|)`), deduplicated.
pub fn optimal_candidates(problem: &Problem) -> (f64, Vec<DVector<f64>>) {
    let all = candidates(problem);
    let alpha = all.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * (1.0 + alpha.abs());
    let mut best: Vec<DVector<f64>> = Vec::new();
    for c in all.into_iter().filter(|c| c.value <= alpha + tol) {
        if !best
            .iter()
            .any(|b| (b - &c.x).amax() <= 1e-7 * (1.0 + b.amax()))
        {
            best.push(c.x);
        }
    }
    (alpha, best)
}
