//! Small dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn max_hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).camax()
}

/// Rotates `v` so its largest-magnitude component (first one on ties) is
/// real and positive.
pub fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|c| c.norm() >= max - 1e-12).unwrap_or(0);
    let ph = v[pivot].conj() / v[pivot].norm();
    v.iter_mut().for_each(|c| *c *= ph);
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues ascending, with
/// eigenvectors as columns in the same order under the [`fix_phase`] convention.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    // symmetrize to remove rounding-level anti-Hermitian parts
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v: Vec<Complex64> = eig.eigenvectors.column(i).iter().copied().collect();
        fix_phase(&mut v);
        vecs.set_column(col, &DVector::from_vec(v));
    }
    (vals, vecs)
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum()
}
