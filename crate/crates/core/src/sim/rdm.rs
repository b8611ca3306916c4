use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{expectation_complex, StateVector};
use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner, FermionTerm, Ladder, ModeLayout, Species};
use crate::linalg::{hermitian_eigen, max_hermitian_defect};

const TRACE_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-10;

/// Mixed state on `n_qubits`, basis ordered like [`StateVector`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    n_qubits: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::Dimension(format!("{}x{} is not a qubit density matrix", dim, matrix.ncols())));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Validation(format!("density matrix trace {tr} differs from 1")));
        }
        let defect = max_hermitian_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::Validation(format!("density matrix not Hermitian (defect {defect:e})")));
        }
        Ok(DensityOperator {
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        DensityOperator {
            n_qubits: psi.n_qubits(),
            matrix: &v * v.adjoint(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr ρ²`
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// Von Neumann entropy `−Tr ρ ln ρ`; eigenvalues below `1e-14` count as zero.
    pub fn entropy(&self) -> f64 {
        let s: f64 = self
            .eigenvalues()
            .into_iter()
            .filter(|&l| l > 1e-14)
            .map(|l| -l * l.ln())
            .sum();
        s.max(0.0)
    }
}

/// Partial trace keeping `keep`; `keep[i]` becomes bit `i` of the reduced basis.
pub fn reduced_density(psi: &StateVector, keep: &[usize]) -> Result<DensityOperator> {
    let n = psi.n_qubits();
    if keep.is_empty() {
        return Err(Error::Argument("reduced_density needs at least one qubit to keep".into()));
    }
    let mut seen = vec![false; n];
    for &q in keep {
        if q >= n || std::mem::replace(&mut seen[q], true) {
            return Err(Error::Argument(format!("invalid or repeated qubit {q} in subset")));
        }
    }
    let env: Vec<usize> = (0..n).filter(|q| !seen[*q]).collect();
    let (ds, de) = (1usize << keep.len(), 1usize << env.len());
    let mut a = DMatrix::<Complex64>::zeros(ds, de);
    for (b, amp) in psi.amplitudes().iter().enumerate() {
        let s = keep.iter().enumerate().fold(0, |acc, (i, &q)| acc | (b >> q & 1) << i);
        let e = env.iter().enumerate().fold(0, |acc, (i, &q)| acc | (b >> q & 1) << i);
        a[(s, e)] = *amp;
    }
    let rho = &a * a.adjoint();
    Ok(DensityOperator {
        n_qubits: keep.len(),
        matrix: rho,
    })
}

/// `γ_PQ = ⟨ψ| a†_P a_Q |ψ⟩` over the modes of one species (species-local indices).
pub fn orbital_1rdm(psi: &StateVector, layout: &ModeLayout, species: Species) -> Result<DMatrix<Complex64>> {
    if psi.n_qubits() != layout.n_modes() {
        return Err(Error::Dimension(format!(
            "{}-qubit state for a {}-mode layout",
            psi.n_qubits(),
            layout.n_modes()
        )));
    }
    let m = layout.count(species);
    let mut gamma = DMatrix::zeros(m, m);
    for p in 0..m {
        for q in p..m {
            let term = FermionTerm::real(
                1.0,
                vec![Ladder::create(layout.mode(species, p)), Ladder::annihilate(layout.mode(species, q))],
            );
            let v = expectation_complex(psi.amplitudes(), &jordan_wigner(&term, layout)?);
            gamma[(p, q)] = v;
            gamma[(q, p)] = v.conj();
        }
    }
    Ok(gamma)
}
