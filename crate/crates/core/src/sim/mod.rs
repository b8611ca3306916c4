//! Statevector execution, exact diagonalization and reduced density matrices.

mod exact;
mod io;
mod operator;
mod rdm;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::{Circuit, GateMatrix, Mat2, Mat4};
use crate::error::{Error, Result};
use crate::linalg;
use crate::pauli::PauliSum;

pub use exact::{exact_ground_state, GroundState, Sector, MAX_SECTOR_DIM};
pub use io::{read_state, write_state};
pub use operator::CompiledOperator;
pub use rdm::{orbital_1rdm, reduced_density, DensityOperator};

const NORM_TOL: f64 = 1e-10;
const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = amps.len().trailing_zeros() as usize;
        if !amps.len().is_power_of_two() {
            return Err(Error::Dimension(format!("{} amplitudes is not a power of two", amps.len())));
        }
        let norm = linalg::norm_sqr(&amps).sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!("state norm {norm} differs from 1")));
        }
        Ok(StateVector { n_qubits, amps })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = linalg::norm_sqr(&amps).sqrt();
        if norm == 0.0 {
            return Err(Error::Validation("cannot normalize the zero vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        linalg::norm_sqr(&self.amps).sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies the unitary gates of `c` in place; measurements are ignored.
    pub fn apply_circuit(&mut self, c: &Circuit) -> Result<()> {
        if c.n_qubits() != self.n_qubits {
            return Err(Error::Dimension(format!(
                "{}-qubit circuit on a {}-qubit state",
                c.n_qubits(),
                self.n_qubits
            )));
        }
        apply_circuit_amps(&mut self.amps, c);
        Ok(())
    }
}

pub(crate) fn apply_circuit_amps(amps: &mut [Complex64], c: &Circuit) {
    for g in c.gates() {
        match g.matrix() {
            Some(GateMatrix::One(q, m)) => apply_1q(amps, q, &m),
            Some(GateMatrix::Two(qs, m)) => apply_2q(amps, qs, &m),
            None => {}
        }
    }
    if c.global_phase() != 0.0 {
        let ph = Complex64::from_polar(1.0, c.global_phase());
        amps.iter_mut().for_each(|a| *a *= ph);
    }
}

/// Applies a 2×2 matrix to qubit `q` of a full amplitude vector.
pub fn apply_1q(amps: &mut [Complex64], q: usize, m: &Mat2) {
    let half = 1usize << q;
    let kernel = |chunk: &mut [Complex64]| {
        let (lo, hi) = chunk.split_at_mut(half);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a0, *a1);
            *a0 = m[0] * x + m[1] * y;
            *a1 = m[2] * x + m[3] * y;
        }
    };
    if amps.len() >= PAR_THRESHOLD {
        amps.par_chunks_mut(2 * half).for_each(kernel);
    } else {
        amps.chunks_mut(2 * half).for_each(kernel);
    }
}

/// Applies a 4×4 matrix to `(qa, qb)`, `qa` being the more significant index
/// of the matrix basis.
pub fn apply_2q(amps: &mut [Complex64], [qa, qb]: [usize; 2], m: &Mat4) {
    let hi = qa.max(qb);
    let lo = qa.min(qb);
    let (ma, mb) = (1usize << qa, 1usize << qb);
    let kernel = |chunk: &mut [Complex64]| {
        for base in 0..chunk.len() {
            if base & (ma | mb) != 0 {
                continue;
            }
            let idx = [base, base | mb, base | ma, base | ma | mb];
            let v = idx.map(|i| chunk[i]);
            for r in 0..4 {
                chunk[idx[r]] = m[r * 4] * v[0] + m[r * 4 + 1] * v[1] + m[r * 4 + 2] * v[2] + m[r * 4 + 3] * v[3];
            }
        }
    };
    let block = 2usize << hi;
    debug_assert!(lo < hi);
    if amps.len() >= PAR_THRESHOLD && block < amps.len() {
        amps.par_chunks_mut(block).for_each(kernel);
    } else {
        amps.chunks_mut(block).for_each(kernel);
    }
}

/// Executes `c` on `psi0`.
pub fn run(c: &Circuit, psi0: &StateVector) -> Result<StateVector> {
    let mut psi = psi0.clone();
    psi.apply_circuit(c)?;
    Ok(psi)
}

/// Dense unitary of a circuit (columns are images of basis states).
pub fn unitary(c: &Circuit) -> Result<DMatrix<Complex64>> {
    let n = c.n_qubits();
    if n > crate::pauli::DEFAULT_DENSE_LIMIT {
        return Err(Error::Resource(format!("dense unitary of {n} qubits")));
    }
    let dim = 1usize << n;
    let cols: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|b| {
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            v[b] = Complex64::new(1.0, 0.0);
            apply_circuit_amps(&mut v, c);
            v
        })
        .collect();
    Ok(DMatrix::from_fn(dim, dim, |r, col| cols[col][r]))
}

/// `⟨ψ|H|ψ⟩` for Hermitian `H`.
pub fn expectation(psi: &StateVector, h: &PauliSum) -> Result<f64> {
    if h.n_qubits() != psi.n_qubits {
        return Err(Error::Dimension(format!(
            "{}-qubit operator on a {}-qubit state",
            h.n_qubits(),
            psi.n_qubits
        )));
    }
    if !h.is_hermitian(1e-10) {
        return Err(Error::Validation("expectation requires a Hermitian operator".into()));
    }
    let v = expectation_complex(&psi.amps, h);
    if v.im.abs() > 1e-10 {
        log::debug!("expectation has imaginary residue {:e}", v.im);
    }
    Ok(v.re)
}

/// `⟨ψ|O|ψ⟩` on raw amplitudes without checks.
pub fn expectation_complex(amps: &[Complex64], op: &PauliSum) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, c) in op.iter() {
        let mut s = Complex64::new(0.0, 0.0);
        for (b, a) in amps.iter().enumerate() {
            let (ph, b2) = k.apply_to_basis(b);
            s += amps[b2].conj() * ph * a;
        }
        acc += c * s;
    }
    acc
}

/// `|⟨ψ|φ⟩|²`
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    if psi.n_qubits != phi.n_qubits {
        return Err(Error::Dimension("fidelity between states of different size".into()));
    }
    Ok(linalg::inner(&psi.amps, &phi.amps).norm_sqr().min(1.0))
}
