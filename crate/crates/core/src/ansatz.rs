//! Products of Pauli rotations `exp(-i φ/2 · P)` with parameters shared
//! across rotations, evaluated on statevectors with reverse-mode gradients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{pauli_evolution_into, Circuit};
use crate::linalg::inner;
use crate::pauli::PauliKey;
use crate::sim::CompiledOperator;

/// One factor `exp(-i (scale · θ[param]) / 2 · P)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub key: PauliKey,
    pub param: usize,
    pub scale: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub n_qubits: usize,
    pub rotations: Vec<Rotation>,
    pub n_params: usize,
}

/// In-place `exp(-iφ/2 · P)` on a full amplitude vector.
pub fn apply_pauli_rotation(amps: &mut [Complex64], key: PauliKey, phi: f64) {
    let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
    let ms = Complex64::new(0.0, -s);
    let x = key.x_mask() as usize;
    if x == 0 {
        for (b, a) in amps.iter_mut().enumerate() {
            let (ph, _) = key.apply_to_basis(b);
            *a *= c + ms * ph;
        }
        return;
    }
    let top = 1usize << (usize::BITS - 1 - x.leading_zeros());
    for b in 0..amps.len() {
        if b & top != 0 {
            continue;
        }
        let b2 = b ^ x;
        // P|b⟩ = p1|b2⟩, P|b2⟩ = p2|b⟩
        let (p1, _) = key.apply_to_basis(b);
        let (p2, _) = key.apply_to_basis(b2);
        let (a, a2) = (amps[b], amps[b2]);
        amps[b] = c * a + ms * p2 * a2;
        amps[b2] = c * a2 + ms * p1 * a;
    }
}

/// `P · amps`
fn apply_pauli(amps: &[Complex64], key: PauliKey) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for (b, a) in amps.iter().enumerate() {
        let (ph, b2) = key.apply_to_basis(b);
        out[b2] = ph * a;
    }
    out
}

impl Ansatz {
    pub fn new(n_qubits: usize) -> Self {
        Ansatz {
            n_qubits,
            rotations: Vec::new(),
            n_params: 0,
        }
    }

    /// Adds a fresh parameter and returns its index.
    pub fn add_param(&mut self) -> usize {
        self.n_params += 1;
        self.n_params - 1
    }

    pub fn push(&mut self, key: PauliKey, param: usize, scale: f64) {
        debug_assert!(param < self.n_params);
        self.rotations.push(Rotation { key, param, scale });
    }

    fn angle(&self, r: &Rotation, theta: &[f64]) -> f64 {
        r.scale * theta[r.param]
    }

    pub fn apply(&self, amps: &mut [Complex64], theta: &[f64]) {
        for r in &self.rotations {
            apply_pauli_rotation(amps, r.key, self.angle(r, theta));
        }
    }

    pub fn state(&self, initial: &[Complex64], theta: &[f64]) -> Vec<Complex64> {
        let mut v = initial.to_vec();
        self.apply(&mut v, theta);
        v
    }

    /// Gate-level circuit; rotations become basis change, CX ladder and RZ.
    pub fn circuit(&self, theta: &[f64]) -> Circuit {
        let mut c = Circuit::new(self.n_qubits);
        for r in &self.rotations {
            pauli_evolution_into(&mut c, r.key, self.angle(r, theta));
        }
        c
    }

    /// Walks the rotations backwards, calling `visit(k, ⟨λ|P_k|φ⟩)` with
    /// `φ` the state after rotation `k` and `λ` the co-state pulled back to it.
    fn backward(&self, theta: &[f64], mut phi: Vec<Complex64>, mut lambda: Vec<Complex64>, mut visit: impl FnMut(usize, Complex64)) {
        for (k, r) in self.rotations.iter().enumerate().rev() {
            let p_phi = apply_pauli(&phi, r.key);
            visit(k, inner(&lambda, &p_phi));
            let back = -self.angle(r, theta);
            apply_pauli_rotation(&mut phi, r.key, back);
            apply_pauli_rotation(&mut lambda, r.key, back);
        }
    }

    /// `E(θ) = ⟨ψ(θ)|H|ψ(θ)⟩` and `∂E/∂θ`.
    pub fn energy_and_gradient(&self, h: &CompiledOperator, initial: &[Complex64], theta: &[f64]) -> (f64, Vec<f64>) {
        let psi = self.state(initial, theta);
        let h_psi = h.apply(&psi);
        let energy = inner(&psi, &h_psi).re;
        let mut grad = vec![0.0; self.n_params];
        self.backward(theta, psi, h_psi, |k, w| {
            let r = &self.rotations[k];
            grad[r.param] += r.scale * w.im;
        });
        (energy, grad)
    }

    /// `C(θ) = 1 − |⟨t|ψ(θ)⟩|²` and `∂C/∂θ`.
    pub fn infidelity_and_gradient(&self, target: &[Complex64], initial: &[Complex64], theta: &[f64]) -> (f64, Vec<f64>) {
        let psi = self.state(initial, theta);
        let overlap = inner(target, &psi);
        let cost = 1.0 - overlap.norm_sqr();
        let mut grad = vec![0.0; self.n_params];
        self.backward(theta, psi, target.to_vec(), |k, w| {
            let r = &self.rotations[k];
            grad[r.param] -= r.scale * (overlap.conj() * w).im;
        });
        (cost, grad)
    }
}
