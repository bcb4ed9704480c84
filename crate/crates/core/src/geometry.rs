//! Geometry of the solution set: analysis supports, sign consistency, the
//! signed permutation `Γ = ΛΣ`, and the maximal-support certificate.
//!
//! All minimizers share the same image `Φx` and the same `‖D*x‖₁`, and their
//! analysis coefficients never have opposite signs. A minimizer has maximal
//! D-support exactly when it lies in the relative interior of the solution
//! polytope; [`certify_maximal`] checks this against a list of vertices.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::model::Problem;

/// Scale-aware support threshold `1e-7·(1 + ‖D*x‖∞)`.
pub fn default_support_tol(d_adj_x: &DVector<f64>) -> f64 {
    1e-7 * (1.0 + d_adj_x.amax())
}

/// Support and sign vector of `D*x`. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportPattern {
    pub indices: Vec<usize>,
    pub signs: Vec<i8>,
    #[serde(skip)]
    tol_bits: u64,
}

impl SupportPattern {
    pub fn from_values(values: &DVector<f64>, tol: f64) -> Self {
        let signs: Vec<i8> = values
            .iter()
            .map(|v| {
                if v.abs() <= tol {
                    0
                } else if *v > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let indices = signs
            .iter()
            .enumerate()
            .filter(|(_, s)| **s != 0)
            .map(|(i, _)| i)
            .collect();
        Self {
            indices,
            signs,
            tol_bits: tol.to_bits(),
        }
    }

    pub fn tol(&self) -> f64 {
        f64::from_bits(self.tol_bits)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.signs.get(i).is_some_and(|s| *s != 0)
    }

    pub fn is_subset_of(&self, other: &SupportPattern) -> bool {
        self.indices.iter().all(|i| other.contains(*i))
    }

    /// Indices one-based, as used in reports.
    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }
}

pub fn d_support(x: &DVector<f64>, d: &DMatrix<f64>, tol: f64) -> SupportPattern {
    SupportPattern::from_values(&d.tr_mul(x), tol)
}

/// `(D*x¹)_i (D*x²)_i ≥ −tol²` for every `i`.
pub fn sign_consistent(x1: &DVector<f64>, x2: &DVector<f64>, d: &DMatrix<f64>, tol: f64) -> bool {
    let (a, b) = (d.tr_mul(x1), d.tr_mul(x2));
    a.iter().zip(b.iter()).all(|(u, v)| u * v >= -tol * tol)
}

/// Same image under `Φ` and same analysis ℓ¹ norm, both within `tol`.
pub fn same_image(x1: &DVector<f64>, x2: &DVector<f64>, problem: &Problem, tol: f64) -> bool {
    let phi = problem.phi();
    let image_gap = if phi.nrows() == 0 {
        0.0
    } else {
        (phi * x1 - phi * x2).amax()
    };
    let l1_gap = (problem.analysis(x1).lp_norm(1) - problem.analysis(x2).lp_norm(1)).abs();
    image_gap <= tol && l1_gap <= tol
}

/// Signed permutation `Γ = ΛΣ` built from a maximal-support solution.
///
/// `perm[i]` is the position that original index `i` is sent to: the support
/// (in ascending order) fills positions `0..m`, the rest follows in ascending
/// order. `lambda_diag` is indexed by position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrthantTransform {
    pub perm: Vec<usize>,
    pub lambda_diag: Vec<i8>,
    pub m: usize,
}

impl OrthantTransform {
    /// Applies `Γ` to a vector of analysis coefficients.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (i, &pos) in self.perm.iter().enumerate() {
            out[pos] = f64::from(self.lambda_diag[pos]) * v[i];
        }
        out
    }

    /// Whether `ΓD*x ∈ (ℝ₊)^m × {0}^{p−m}` up to `tol`.
    pub fn in_orthant(&self, d_adj_x: &DVector<f64>, tol: f64) -> bool {
        let g = self.apply(d_adj_x);
        g.iter().enumerate().all(|(i, v)| {
            if i < self.m {
                *v >= -tol
            } else {
                v.abs() <= tol
            }
        })
    }
}

pub fn orthant_transform(x_plus: &DVector<f64>, d: &DMatrix<f64>, tol: f64) -> OrthantTransform {
    let pattern = d_support(x_plus, d, tol);
    let p = pattern.signs.len();
    let m = pattern.len();
    let mut perm = vec![0; p];
    let mut lambda_diag = vec![0; p];
    let mut on = 0;
    let mut off = m;
    for (i, &sign) in pattern.signs.iter().enumerate() {
        if sign != 0 {
            perm[i] = on;
            lambda_diag[on] = sign;
            on += 1;
        } else {
            perm[i] = off;
            off += 1;
        }
    }
    OrthantTransform {
        perm,
        lambda_diag,
        m,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("no vertices supplied")]
    NoVertices,
    #[error("input point {index} is not optimal: objective {value} vs candidate {reference}")]
    NotOptimal {
        index: usize,
        value: f64,
        reference: f64,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Result of [`certify_maximal`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    /// `supp(D*v) ⊆ supp(D*candidate)` for every vertex `v`.
    pub support_inclusion: bool,
    /// No pair of points has opposite analysis signs.
    pub sign_consistency: bool,
    /// Every pair shares `Φx` and `‖D*x‖₁`.
    pub same_image: bool,
    /// `ΓD*v` lies in `(ℝ₊)^m × {0}^{p−m}` for every vertex.
    pub orthant: bool,
    pub pass: bool,
    /// Vertices (zero-based) whose support escapes the candidate's.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub uncovered_vertices: Vec<usize>,
}

/// Checks that `candidate` has maximal D-support relative to `vertices`.
///
/// Every input must be optimal: objective values farther than
/// `tol·(1 + |h(candidate)|)` from the candidate's are rejected as invalid
/// input rather than reported as a failed certificate.
pub fn certify_maximal(
    candidate: &DVector<f64>,
    vertices: &[DVector<f64>],
    problem: &Problem,
    tol: f64,
) -> Result<CertificateReport, CertifyError> {
    if vertices.is_empty() {
        return Err(CertifyError::NoVertices);
    }
    let n = problem.n();
    if candidate.len() != n || vertices.iter().any(|v| v.len() != n) {
        return Err(CertifyError::Dimension(format!(
            "points must have length {n}"
        )));
    }
    let reference = problem.objective(candidate);
    for (index, v) in vertices.iter().enumerate() {
        let value = problem.objective(v);
        if (value - reference).abs() > tol * (1.0 + reference.abs()) {
            return Err(CertifyError::NotOptimal {
                index,
                value,
                reference,
            });
        }
    }

    let d = problem.d();
    let cand_support = d_support(candidate, d, tol);
    let uncovered_vertices: Vec<usize> = vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| !d_support(v, d, tol).is_subset_of(&cand_support))
        .map(|(i, _)| i)
        .collect();

    let points: Vec<&DVector<f64>> = std::iter::once(candidate).chain(vertices.iter()).collect();
    let mut sign_ok = true;
    let mut image_ok = true;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            sign_ok &= sign_consistent(a, b, d, tol);
            image_ok &= same_image(a, b, problem, tol);
        }
    }

    let gamma = orthant_transform(candidate, d, tol);
    let orthant = vertices
        .iter()
        .all(|v| gamma.in_orthant(&problem.analysis(v), tol));

    let support_inclusion = uncovered_vertices.is_empty();
    Ok(CertificateReport {
        support_inclusion,
        sign_consistency: sign_ok,
        same_image: image_ok,
        orthant,
        pass: support_inclusion && sign_ok && image_ok && orthant,
        uncovered_vertices,
    })
}

/// True when `D*x = 0` up to `tol`; such a minimizer is the only one.
pub fn kernel_singleton_check(x: &DVector<f64>, problem: &Problem, tol: f64) -> bool {
    problem.analysis(x).amax() <= tol
}
