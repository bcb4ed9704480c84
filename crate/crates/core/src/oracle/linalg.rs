use nalgebra::{DMatrix, DVector};

/// Orthonormal basis (as columns) of the null space of `a`, which has
/// `ncols` columns. Singular values below `rel_tol·σ_max` count as zero.
pub(crate) fn null_space(a: &DMatrix<f64>, ncols: usize, rel_tol: f64) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return DMatrix::identity(ncols, ncols);
    }
    // pad to at least ncols rows so that the thin SVD yields a full V
    let rows = a.nrows().max(ncols);
    let mut padded = DMatrix::zeros(rows, ncols);
    padded.view_mut((0, 0), (a.nrows(), ncols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let s_max = svd.singular_values.max();
    let tol = rel_tol * s_max.max(f64::MIN_POSITIVE);
    let kept: Vec<usize> = (0..ncols)
        .filter(|&i| svd.singular_values[i] <= tol || s_max == 0.0)
        .collect();
    let mut basis = DMatrix::zeros(ncols, kept.len());
    for (j, &i) in kept.iter().enumerate() {
        basis.set_column(j, &v_t.row(i).transpose());
    }
    basis
}

/// Solves `a x = b` in the least-squares sense when `a` has full column
/// rank (relative to `rel_tol`); `None` otherwise.
pub(crate) fn full_rank_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    rel_tol: f64,
) -> Option<DVector<f64>> {
    let ncols = a.ncols();
    if ncols == 0 {
        return Some(DVector::zeros(0));
    }
    if a.nrows() < ncols {
        return None;
    }
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let s_max = s.max();
    if s_max == 0.0 || s.min() <= rel_tol * s_max {
        return None;
    }
    svd.solve(b, 0.0).ok()
}
