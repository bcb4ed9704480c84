//! Analytic center of the solution polytope from its vertices.
//!
//! On the affine hull of the vertices, the coefficients of `D*x` outside the
//! union support vanish identically, and those inside keep a fixed sign. The
//! center maximizes `Σ log |(D*x)_i|` over the union support. That function
//! is strictly concave on the hull because a direction fixing every union
//! coefficient lies in `Ker D* ∩ Ker Φ`.

use nalgebra::{DMatrix, DVector};

use super::linalg::null_space;
use crate::geometry::{default_support_tol, SupportPattern};
use crate::model::Problem;

/// Union support and signs of `D*v` over all vertices.
fn union_signs(problem: &Problem, vertices: &[DVector<f64>]) -> Vec<(usize, f64)> {
    let p = problem.p();
    let mut sign = vec![0.0; p];
    for v in vertices {
        let dv = problem.analysis(v);
        let pat = SupportPattern::from_values(&dv, default_support_tol(&dv));
        for &i in &pat.indices {
            sign[i] = f64::from(pat.signs[i]);
        }
    }
    (0..p)
        .filter(|&i| sign[i] != 0.0)
        .map(|i| (i, sign[i]))
        .collect()
}

fn log_barrier(rows: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let l = rows * x;
    if l.iter().any(|v| *v <= 0.0) {
        return f64::NEG_INFINITY;
    }
    l.iter().map(|v| v.ln()).sum()
}

/// Analytic center of the polytope whose vertices are given.
pub fn analytic_center(problem: &Problem, vertices: &[DVector<f64>]) -> DVector<f64> {
    let k = vertices.len();
    if k == 1 {
        return vertices[0].clone();
    }
    let union = union_signs(problem, vertices);
    let d_adj = problem.d().transpose();
    let mut rows = DMatrix::zeros(union.len(), problem.n());
    for (r, &(i, s)) in union.iter().enumerate() {
        rows.set_row(r, &(d_adj.row(i) * s));
    }
    if k == 2 {
        return segment_center(&rows, &vertices[0], &vertices[1]);
    }
    hull_center(&rows, vertices)
}

/// Bisection on the sign of the derivative along `[a, b]`.
///
/// The derivative `Σ ⟨r_i, b − a⟩ / ⟨r_i, x(t)⟩` is decreasing, so its sign
/// pins the maximizer to machine precision, unlike comparing barrier values,
/// which stalls near `√ε` because the maximum is flat.
fn segment_center(rows: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let point = |t: f64| a * (1.0 - t) + b * t;
    let slope = rows * (b - a);
    let derivative = |t: f64| {
        let l = rows * point(t);
        slope.iter().zip(l.iter()).map(|(s, l)| s / l).sum::<f64>()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if derivative(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    point(0.5 * (lo + hi))
}

/// Damped Newton on the affine hull, started at the vertex centroid.
fn hull_center(rows: &DMatrix<f64>, vertices: &[DVector<f64>]) -> DVector<f64> {
    let n = vertices[0].len();
    let centroid =
        vertices.iter().fold(DVector::zeros(n), |acc, v| acc + v) / vertices.len() as f64;
    let mut spread = DMatrix::zeros(vertices.len(), n);
    for (r, v) in vertices.iter().enumerate() {
        spread.set_row(r, &(v - &centroid).transpose());
    }
    // basis of the row space of `spread` = complement of its null space
    let kernel = null_space(&spread, n, 1e-9);
    let basis = null_space(&kernel.transpose(), n, 1e-9);
    let a = rows * &basis;
    let mut x = centroid;
    for _ in 0..200 {
        let l = rows * &x;
        let inv = l.map(|v| 1.0 / v);
        let grad = a.tr_mul(&inv);
        let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * inv[i]);
        let hess = scaled.tr_mul(&scaled);
        let Some(step) = hess.clone().cholesky().map(|c| c.solve(&grad)) else {
            break;
        };
        let decrement = grad.dot(&step);
        if decrement < 1e-26 {
            break;
        }
        let current = log_barrier(rows, &x);
        let dir = &basis * &step;
        let mut t = 1.0;
        while t > 1e-16 {
            let trial = &x + &dir * t;
            if log_barrier(rows, &trial) >= current + 0.25 * t * decrement {
                break;
            }
            t *= 0.5;
        }
        if t <= 1e-16 {
            break;
        }
        x += dir * t;
    }
    x
}
