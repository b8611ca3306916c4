use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::StateVector;
use crate::error::{Error, Result};
use crate::fermion::{ModeLayout, Species};
use crate::linalg::{fix_phase, hermitian_eigen};
use crate::pauli::{PauliSum, DEFAULT_DENSE_LIMIT};

/// Largest Hilbert-space block handed to the dense eigensolver.
pub const MAX_SECTOR_DIM: usize = 4096;

/// Joint particle-number sector of the electron and proton modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sector {
    pub layout: ModeLayout,
    pub n_electrons: usize,
    pub n_protons: usize,
}

impl Sector {
    pub fn contains(&self, basis: usize) -> bool {
        let count = |s: Species| self.layout.modes(s).filter(|&q| basis >> q & 1 == 1).count();
        count(Species::Electron) == self.n_electrons && count(Species::Proton) == self.n_protons
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    /// Dimension of the diagonalized block.
    pub dimension: usize,
}

/// Lowest eigenpair of `h`, optionally restricted to a particle-number sector.
pub fn exact_ground_state(h: &PauliSum, sector: Option<&Sector>) -> Result<GroundState> {
    let n = h.n_qubits();
    if n > DEFAULT_DENSE_LIMIT {
        return Err(Error::Resource(format!(
            "{n} qubits exceeds the dense limit of {DEFAULT_DENSE_LIMIT}"
        )));
    }
    if let Some(s) = sector {
        if s.layout.n_modes() != n {
            return Err(Error::Dimension(format!(
                "sector layout has {} modes, operator has {n} qubits",
                s.layout.n_modes()
            )));
        }
    }
    let full = 1usize << n;
    let basis: Vec<usize> = match sector {
        Some(s) => (0..full).filter(|&b| s.contains(b)).collect(),
        None => (0..full).collect(),
    };
    if basis.is_empty() {
        let s = sector.expect("only sector filtering can empty the basis");
        return Err(Error::Sector(format!(
            "no determinants with {} electrons in {} modes and {} protons in {} modes",
            s.n_electrons, s.layout.n_electron, s.n_protons, s.layout.n_proton
        )));
    }
    let dim = basis.len();
    if dim > MAX_SECTOR_DIM {
        return Err(Error::Resource(format!(
            "block dimension {dim} exceeds {MAX_SECTOR_DIM}; restrict to a particle-number sector"
        )));
    }
    let mut position = vec![usize::MAX; full];
    for (i, &b) in basis.iter().enumerate() {
        position[b] = i;
    }
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (k, c) in h.iter() {
        for (col, &b) in basis.iter().enumerate() {
            let (ph, b2) = k.apply_to_basis(b);
            let row = position[b2];
            if row != usize::MAX {
                m[(row, col)] += c * ph;
            }
        }
    }
    let (vals, vecs) = hermitian_eigen(&m);
    let mut amps = vec![Complex64::new(0.0, 0.0); full];
    for (i, &b) in basis.iter().enumerate() {
        amps[b] = vecs[(i, 0)];
    }
    fix_phase(&mut amps);
    Ok(GroundState {
        energy: vals[0],
        state: StateVector::normalized(amps)?,
        dimension: dim,
    })
}
