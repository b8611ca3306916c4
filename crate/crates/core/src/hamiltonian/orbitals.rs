use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, max_hermitian_defect};

pub const LOWDIN_THRESHOLD: f64 = 1e-8;
const PSD_TOL: f64 = 1e-8;

/// Natural orbitals kept by [`fno_select`].
#[derive(Clone, Debug)]
pub struct FnoSelection {
    /// Columns are the kept natural orbitals, most occupied first.
    pub rotation: DMatrix<Complex64>,
    pub occupations: Vec<f64>,
    pub discarded: Vec<f64>,
}

/// Diagonalizes a one-particle density matrix and keeps the `n_keep`
/// eigenvectors with the largest occupation numbers.
pub fn fno_select(density: &DMatrix<Complex64>, n_keep: usize) -> Result<FnoSelection> {
    let n = density.nrows();
    if density.ncols() != n {
        return Err(Error::Dimension("density matrix must be square".into()));
    }
    if n_keep > n {
        return Err(Error::Argument(format!("cannot keep {n_keep} of {n} orbitals")));
    }
    let defect = max_hermitian_defect(density);
    if defect > PSD_TOL {
        return Err(Error::Validation(format!("density matrix not Hermitian (defect {defect:e})")));
    }
    let (vals, vecs) = hermitian_eigen(density);
    // hermitian_eigen sorts ascending; natural orbitals go most occupied first
    if let Some(&min) = vals.first() {
        if min < -PSD_TOL {
            return Err(Error::Validation(format!(
                "density matrix not positive semidefinite (eigenvalue {min:e})"
            )));
        }
    }
    let order: Vec<usize> = (0..n).rev().collect();
    let occupations: Vec<f64> = order[..n_keep].iter().map(|&i| vals[i]).collect();
    let discarded = order[n_keep..].iter().map(|&i| vals[i]).collect();
    let mut rotation = DMatrix::zeros(n, n_keep);
    for (col, &i) in order[..n_keep].iter().enumerate() {
        rotation.set_column(col, &vecs.column(i));
    }
    Ok(FnoSelection {
        rotation,
        occupations,
        discarded,
    })
}

pub fn lowdin(overlap: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    lowdin_with_threshold(overlap, LOWDIN_THRESHOLD)
}

/// Symmetric orthogonalization `T = S^{-1/2}`, so that `T† S T = I`.
pub fn lowdin_with_threshold(overlap: &DMatrix<Complex64>, threshold: f64) -> Result<DMatrix<Complex64>> {
    let n = overlap.nrows();
    if overlap.ncols() != n {
        return Err(Error::Dimension("overlap matrix must be square".into()));
    }
    let defect = max_hermitian_defect(overlap);
    if defect > 1e-10 {
        return Err(Error::Validation(format!("overlap matrix not Hermitian (defect {defect:e})")));
    }
    let (vals, vecs) = hermitian_eigen(overlap);
    let min = vals.first().copied().unwrap_or(1.0);
    if min < threshold {
        return Err(Error::Conditioning {
            min_eigenvalue: min,
            threshold,
        });
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        vals.iter().map(|v| Complex64::new(v.powf(-0.5), 0.0)),
    ));
    Ok(&vecs * d * vecs.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::to_complex;

    #[test]
    fn identity_density() {
        let sel = fno_select(&DMatrix::identity(3, 3), 3).unwrap();
        assert!(sel.occupations.iter().all(|o| (o - 1.0).abs() < 1e-14));
        let gram = sel.rotation.adjoint() * &sel.rotation;
        assert!((gram - DMatrix::<Complex64>::identity(3, 3)).camax() < 1e-14);
    }

    #[test]
    fn keeps_largest_occupations() {
        let d = to_complex(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.9, 0.05, 1e-9])));
        let sel = fno_select(&d, 2).unwrap();
        assert!((sel.occupations[0] - 0.9).abs() < 1e-14);
        assert!((sel.occupations[1] - 0.05).abs() < 1e-14);
        assert_eq!(sel.discarded.len(), 1);
        assert!(sel.rotation[(0, 0)].norm() > 0.999_999);
        assert!(sel.rotation[(1, 1)].norm() > 0.999_999);
    }

    #[test]
    fn rejects_indefinite_density() {
        let d = to_complex(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]));
        assert!(matches!(fno_select(&d, 1), Err(Error::Validation(_))));
        assert!(fno_select(&DMatrix::identity(2, 2), 3).is_err());
    }

    #[test]
    fn lowdin_examples() {
        let t = lowdin(&DMatrix::identity(2, 2)).unwrap();
        assert!((t - DMatrix::<Complex64>::identity(2, 2)).camax() < 1e-14);

        let s = to_complex(&DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
        let t = lowdin(&s).unwrap();
        let check = t.adjoint() * &s * &t;
        assert!((check - DMatrix::<Complex64>::identity(2, 2)).camax() < 1e-10);
        assert!((t.clone() - t.transpose()).camax() < 1e-12);

        let eps = 1e-12;
        let near = to_complex(&DMatrix::from_row_slice(2, 2, &[0.5 + eps / 2.0, 0.5 - eps / 2.0, 0.5 - eps / 2.0, 0.5 + eps / 2.0]));
        match lowdin(&near) {
            Err(Error::Conditioning { min_eigenvalue, .. }) => assert!(min_eigenvalue < 1e-8),
            other => panic!("expected conditioning error, got {other:?}"),
        }
    }
}
