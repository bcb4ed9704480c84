//! Vertex enumeration of the solution polytope.
//!
//! Given an optimal witness `x̄` the solution set is
//! `{x : Φx = Φx̄, ε∘D*x ≥ 0, ⟨ε, D*x⟩ = ‖D*x̄‖₁}` for the sign vector `ε` of
//! any relative-interior point. Off the witness support that sign is unknown,
//! so both closures are tried for each such index and the results merged.

use nalgebra::{DMatrix, DVector};

use super::linalg::full_rank_solve;
use crate::geometry::default_support_tol;
use crate::model::Problem;

const RANK_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const DEDUPE_TOL: f64 = 1e-7;

/// Vertices of one sign-closed polytope, possibly with duplicates.
fn vertices_for_signs(
    problem: &Problem,
    eps: &[f64],
    fiber: &DVector<f64>,
    l1: f64,
) -> Vec<DVector<f64>> {
    let n = problem.n();
    let p = problem.p();
    let q = problem.q();
    let d_adj = problem.d().transpose();
    let mut signed = d_adj.clone();
    for (i, e) in eps.iter().enumerate() {
        signed.row_mut(i).scale_mut(*e);
    }
    let norm_row = signed.row_sum();

    let eq_rows = q + 1;
    let scale = 1.0 + fiber.amax() + l1;
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(n);
    subsets(p, n, 0, &mut chosen, &mut |active: &[usize]| {
        let rows = eq_rows + active.len();
        if rows < n {
            return;
        }
        let mut a = DMatrix::zeros(rows, n);
        let mut b = DVector::zeros(rows);
        a.view_mut((0, 0), (q, n)).copy_from(problem.phi());
        b.rows_mut(0, q).copy_from(fiber);
        a.set_row(q, &norm_row);
        b[q] = l1;
        for (r, &i) in active.iter().enumerate() {
            a.set_row(eq_rows + r, &signed.row(i));
        }
        let Some(x) = full_rank_solve(&a, &b, RANK_TOL) else {
            return;
        };
        if (&a * &x - &b).amax() > FEAS_TOL * scale {
            return;
        }
        if (&signed * &x).min() < -FEAS_TOL * scale {
            return;
        }
        out.push(x);
    });
    out
}

/// Calls `f` on every subset of `0..p` with at most `max_len` elements.
fn subsets(
    p: usize,
    max_len: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]),
) {
    f(chosen);
    if chosen.len() == max_len {
        return;
    }
    for i in start..p {
        chosen.push(i);
        subsets(p, max_len, i + 1, chosen, f);
        chosen.pop();
    }
}

/// All vertices of the solution polytope through `witness`, filtered to
/// objective within `1e-9·(1 + |α|)` of `alpha`, deduplicated and sorted
/// lexicographically.
pub fn vertices_through(
    problem: &Problem,
    witness: &DVector<f64>,
    alpha: f64,
) -> Vec<DVector<f64>> {
    let dx = problem.analysis(witness);
    let tol = default_support_tol(&dx);
    let fiber = problem.phi() * witness;
    let l1 = dx.lp_norm(1);
    let base: Vec<f64> = dx
        .iter()
        .map(|v| if v.abs() <= tol { 0.0 } else { v.signum() })
        .collect();
    let free: Vec<usize> = (0..base.len()).filter(|&i| base[i] == 0.0).collect();
    // with ‖D*x̄‖₁ = 0 every sign choice describes the same polytope
    let combos: u64 = if l1 <= tol { 1 } else { 1 << free.len() };

    let obj_tol = 1e-9 * (1.0 + alpha.abs());
    let mut found: Vec<DVector<f64>> = Vec::new();
    for mask in 0..combos {
        let mut eps = base.clone();
        for (bit, &i) in free.iter().enumerate() {
            eps[i] = if mask >> bit & 1 == 1 { -1.0 } else { 1.0 };
        }
        for v in vertices_for_signs(problem, &eps, &fiber, l1) {
            if (problem.objective(&v) - alpha).abs() > obj_tol {
                continue;
            }
            if !found
                .iter()
                .any(|w| (w - &v).amax() <= DEDUPE_TOL * (1.0 + w.amax()))
            {
                found.push(v);
            }
        }
    }
    found.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_counts() {
        let mut count = 0;
        subsets(4, 2, 0, &mut Vec::new(), &mut |_| count += 1);
        assert_eq!(count, 1 + 4 + 6);
    }
}
