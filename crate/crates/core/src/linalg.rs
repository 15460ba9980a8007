//! Thin helpers over `nalgebra` shared by the algebra, frame and checker code.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold: a matrix is degenerate when
/// `sigma_min <= RANK_TOL * sigma_max`.
pub const RANK_TOL: f64 = 1e-10;

pub(crate) fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    a.clone().singular_values().iter().copied().collect()
}

/// `true` when the square matrix `a` is numerically singular.
pub fn is_degenerate(a: &DMatrix<f64>) -> bool {
    let sv = singular_values(a);
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    !(max > 0.0 && min > RANK_TOL * max)
}

/// Largest singular value (operator 2-norm).
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
pub(crate) fn rank(a: &DMatrix<f64>) -> usize {
    let sv = singular_values(a);
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Solve `a x = b`, returning `None` for degenerate `a`.
pub(crate) fn solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    if is_degenerate(a) {
        return None;
    }
    let rhs = DVector::from_column_slice(b);
    a.clone().lu().solve(&rhs).map(|x| x.iter().copied().collect())
}

pub(crate) fn inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if is_degenerate(a) {
        return None;
    }
    a.clone().try_inverse()
}

/// Orthonormal basis (as columns) of the null space of `a`, plus its rank.
///
/// The matrix is zero-padded to square so the SVD yields a complete right
/// singular basis.
pub(crate) fn null_space(a: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let cols = a.ncols();
    if cols == 0 {
        return (DMatrix::zeros(0, 0), 0);
    }
    let size = cols.max(a.nrows());
    let mut padded = DMatrix::zeros(size, cols);
    padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let max = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let mut kernel_rows = Vec::new();
    let mut rank = 0;
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if max > 0.0 && s > RANK_TOL * max {
            rank += 1;
        } else {
            kernel_rows.push(idx);
        }
    }
    let mut basis = DMatrix::zeros(cols, kernel_rows.len());
    for (c, &row) in kernel_rows.iter().enumerate() {
        for r in 0..cols {
            basis[(r, c)] = v_t[(row, r)];
        }
    }
    (basis, rank)
}

/// Smallest eigenpair of a symmetric matrix. `None` for an empty matrix.
pub(crate) fn min_eigenpair(a: &DMatrix<f64>) -> Option<(f64, DVector<f64>)> {
    if a.nrows() == 0 {
        return None;
    }
    let eig = a.clone().symmetric_eigen();
    let (idx, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    Some((val, eig.eigenvectors.column(idx).into_owned()))
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
