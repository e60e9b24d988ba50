//! Small dense helpers on top of `nalgebra`.

use alloc::vec::Vec;
use nalgebra::DMatrix;

/// `max |RᵀR − I|`, the orthogonality residual used throughout the crate.
pub fn orthogonality_residual(r: &DMatrix<f64>) -> f64 {
    if r.nrows() != r.ncols() {
        return f64::INFINITY;
    }
    let rtr = r.transpose() * r;
    let mut worst = 0.0f64;
    for i in 0..rtr.nrows() {
        for j in 0..rtr.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((rtr[(i, j)] - target).abs());
        }
    }
    worst
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
///
/// Eigenvector signs are fixed so that the largest-magnitude component of
/// each vector is positive, which makes downstream loadings reproducible.
pub fn symmetric_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, dst)] = sign * col[i];
        }
    }
    (values, vectors)
}

/// Nearest orthogonal matrix in Frobenius norm (`U Vᵀ` from the SVD).
pub fn polar_orthogonal(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let svd = m.clone().svd(true, true);
    let u = svd.u?;
    let v_t = svd.v_t?;
    Some(u * v_t)
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}
