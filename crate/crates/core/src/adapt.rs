//! ADAPT-VQE: grow an ansatz one generator at a time, choosing the pool
//! element with the largest energy gradient and re-optimizing every angle.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::fermion::{ExcitationPool, ModeLayout};
use crate::linalg::inner;
use crate::optimize::{self, minimize};
use crate::pauli::{PauliKey, PauliSum};
use crate::sim::{CompiledOperator, StateVector};

pub const DEFAULT_GRADIENT_FLOOR: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

/// Anti-Hermitian generator `A = i Σ_k a_k P_k`; `e^{θA}` is one ansatz factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub label: String,
    /// `(P_k, a_k)`
    pub terms: Vec<(PauliKey, f64)>,
}

impl Generator {
    /// From a qubit operator whose coefficients are purely imaginary.
    pub fn from_anti_hermitian(label: impl Into<String>, op: &PauliSum) -> Result<Self> {
        let label = label.into();
        let mut terms = Vec::with_capacity(op.len());
        for (k, c) in op.iter() {
            if c.re.abs() > 1e-10 {
                return Err(Error::Validation(format!("generator `{label}` is not anti-Hermitian")));
            }
            terms.push((k, c.im));
        }
        Ok(Generator { label, terms })
    }

    /// `i P` for a single Pauli string.
    pub fn pauli(key: PauliKey, n_qubits: usize) -> Self {
        Generator {
            label: key.to_letters(n_qubits),
            terms: vec![(key, 1.0)],
        }
    }

    /// `A ψ`
    fn apply(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for &(k, a) in &self.terms {
            let ia = Complex64::new(0.0, a);
            for (b, v) in amps.iter().enumerate() {
                let (ph, b2) = k.apply_to_basis(b);
                out[b2] += ia * ph * v;
            }
        }
        out
    }
}

/// Fermionic pool elements mapped to generators, in pool order.
pub fn fermionic_generators(pool: &ExcitationPool, layout: &ModeLayout) -> Result<Vec<Generator>> {
    pool.elements
        .iter()
        .zip(pool.qubit_images(layout)?)
        .map(|(e, img)| Generator::from_anti_hermitian(e.label.clone(), &img))
        .collect()
}

pub fn qubit_generators(keys: &[PauliKey], n_qubits: usize) -> Vec<Generator> {
    keys.iter().map(|&k| Generator::pauli(k, n_qubits)).collect()
}

/// `|⟨ψ|[H, A_μ]|ψ⟩| = |2 Re⟨Hψ|A_μ ψ⟩|` for every pool element, in pool order.
pub fn gradient_screen(h: &CompiledOperator, psi: &[Complex64], pool: &[Generator]) -> Vec<f64> {
    let h_psi = h.apply(psi);
    pool.par_iter().map(|g| (2.0 * inner(&h_psi, &g.apply(psi)).re).abs()).collect()
}

#[derive(Clone, Debug)]
pub struct AdaptOptions {
    pub threshold: f64,
    /// Reference ground-state energy; without it only the gradient floor stops the loop.
    pub exact_energy: Option<f64>,
    pub gradient_floor: f64,
    pub max_iterations: usize,
    pub optimizer: optimize::Options,
}

impl AdaptOptions {
    pub fn new(threshold: f64, exact_energy: Option<f64>) -> Self {
        AdaptOptions {
            threshold,
            exact_energy,
            gradient_floor: DEFAULT_GRADIENT_FLOOR,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            optimizer: optimize::Options {
                grad_tol: 1e-8,
                max_iters: 1000,
                restart: None,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selected {
    pub pool_index: usize,
    pub label: String,
    /// `(letters, a_k)` with qubit 0 first.
    pub terms: Vec<(String, f64)>,
    pub gradient: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptStatus {
    /// Energy error below the threshold.
    Converged,
    /// Largest gradient below the floor with no reference energy given.
    GradientConverged,
    /// Gradient floor reached before the energy threshold.
    Stagnated,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptState {
    pub n_qubits: usize,
    /// Occupied-mode bitmask of the reference determinant.
    pub reference: u64,
    pub selected: Vec<Selected>,
    pub parameters: Vec<f64>,
    /// Energy of the reference followed by the energy after each iteration.
    pub energies: Vec<f64>,
    pub status: AdaptStatus,
}

impl AdaptState {
    pub fn energy(&self) -> f64 {
        *self.energies.last().expect("reference energy always recorded")
    }

    pub fn ansatz(&self) -> Result<Ansatz> {
        let mut a = Ansatz::new(self.n_qubits);
        for s in &self.selected {
            let p = a.add_param();
            for (letters, coeff) in &s.terms {
                a.push(PauliKey::parse(letters)?, p, -2.0 * coeff);
            }
        }
        Ok(a)
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let mut c = self.reference_circuit();
        c.append(&self.ansatz()?.circuit(&self.parameters))?;
        Ok(c)
    }

    /// X gates preparing the reference determinant from `|0…0⟩`.
    pub fn reference_circuit(&self) -> Circuit {
        let mut c = Circuit::new(self.n_qubits);
        for q in 0..self.n_qubits {
            if self.reference >> q & 1 == 1 {
                c.push(crate::circuit::Gate::X(q)).expect("qubit in range");
            }
        }
        c
    }

    pub fn prepare(&self) -> Result<StateVector> {
        let mut amps = StateVector::basis(self.n_qubits, self.reference as usize).into_amplitudes();
        self.ansatz()?.apply(&mut amps, &self.parameters);
        StateVector::normalized(amps)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: AdaptState = serde_json::from_str(text)?;
        if s.parameters.len() != s.selected.len() {
            return Err(Error::Validation("parameter count differs from generator count".into()));
        }
        Ok(s)
    }
}

/// Runs ADAPT-VQE from the determinant `reference` (bitmask over qubits).
pub fn adapt_vqe(h: &PauliSum, pool: &[Generator], reference: u64, opts: &AdaptOptions) -> Result<AdaptState> {
    if opts.threshold <= 0.0 {
        return Err(Error::Argument("ADAPT threshold must be positive".into()));
    }
    if pool.is_empty() {
        return Err(Error::Argument("empty operator pool".into()));
    }
    let n = h.n_qubits();
    if n < 64 && reference >> n != 0 {
        return Err(Error::Dimension(format!("reference {reference:#b} outside {n} qubits")));
    }
    let hc = CompiledOperator::new(h);
    let init = StateVector::basis(n, reference as usize).into_amplitudes();
    let mut state = AdaptState {
        n_qubits: n,
        reference,
        selected: Vec::new(),
        parameters: Vec::new(),
        energies: vec![hc.expectation(&init).re],
        status: AdaptStatus::MaxIterations,
    };
    let mut ansatz = Ansatz::new(n);
    for iteration in 0..=opts.max_iterations {
        let energy = state.energy();
        if let Some(e0) = opts.exact_energy {
            if energy - e0 < opts.threshold {
                state.status = AdaptStatus::Converged;
                break;
            }
        }
        if iteration == opts.max_iterations {
            break;
        }
        let psi = ansatz.state(&init, &state.parameters);
        let grads = gradient_screen(&hc, &psi, pool);
        let (best, gmax) = grads
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc });
        if gmax < opts.gradient_floor {
            state.status = if opts.exact_energy.is_some() {
                AdaptStatus::Stagnated
            } else {
                AdaptStatus::GradientConverged
            };
            break;
        }
        let gen = &pool[best];
        let p = ansatz.add_param();
        for &(k, a) in &gen.terms {
            ansatz.push(k, p, -2.0 * a);
        }
        let mut theta0 = state.parameters.clone();
        theta0.push(0.0);
        let m = minimize(|t| ansatz.energy_and_gradient(&hc, &init, t), theta0, &opts.optimizer);
        log::info!(
            "adapt iteration {}: picked {} (|g| = {gmax:.3e}), E = {:.10}",
            iteration + 1,
            gen.label,
            m.value
        );
        state.parameters = m.x;
        state.energies.push(m.value);
        state.selected.push(Selected {
            pool_index: best,
            label: gen.label.clone(),
            terms: gen.terms.iter().map(|(k, a)| (k.to_letters(n), *a)).collect(),
            gradient: gmax,
        });
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::excitation_pool;
    use crate::hamiltonian::{assemble, toy::toy_integrals};
    use crate::sim::{exact_ground_state, Sector};

    #[test]
    fn diagonal_hamiltonian_needs_no_iterations() {
        let h = PauliSum::from_labels(2, &[(Complex64::new(1.0, 0.0), "ZI"), (Complex64::new(0.5, 0.0), "IZ")]).unwrap();
        let pool = qubit_generators(&[PauliKey::parse("XY").unwrap()], 2);
        let s = adapt_vqe(&h, &pool, 0b11, &AdaptOptions::new(1e-3, Some(-1.5))).unwrap();
        assert!(s.selected.is_empty());
        assert_eq!(s.status, AdaptStatus::Converged);
        let g = gradient_screen(&CompiledOperator::new(&h), StateVector::basis(2, 3).amplitudes(), &pool);
        assert!(g[0].abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let layout = ModeLayout::new(2, 2);
        let h = assemble(&toy_integrals(layout, 3)).unwrap();
        let pool = excitation_pool(&layout, &[0], &[0]).unwrap();
        let gens = fermionic_generators(&pool, &layout).unwrap();
        let hc = CompiledOperator::new(&h);
        let reference = layout.occupation_mask(&[0], &[0]).unwrap();
        let psi = StateVector::basis(4, reference as usize).into_amplitudes();
        let g = gradient_screen(&hc, &psi, &gens);
        for (gen, gi) in gens.iter().zip(&g) {
            let mut a = Ansatz::new(4);
            let p = a.add_param();
            for &(k, c) in &gen.terms {
                a.push(k, p, -2.0 * c);
            }
            let eps = 1e-5;
            let e = |t: f64| a.energy_and_gradient(&hc, &psi, &[t]).0;
            let fd = (e(eps) - e(-eps)) / (2.0 * eps);
            assert!((fd.abs() - gi).abs() < 1e-6, "{}: {fd} vs {gi}", gen.label);
        }
    }

    #[test]
    fn reaches_exact_energy_on_toy_system() {
        let layout = ModeLayout::new(2, 2);
        let h = assemble(&toy_integrals(layout, 5)).unwrap();
        let sector = Sector {
            layout,
            n_electrons: 1,
            n_protons: 1,
        };
        let e0 = exact_ground_state(&h, Some(&sector)).unwrap().energy;
        let pool = excitation_pool(&layout, &[0], &[0]).unwrap();
        let gens = fermionic_generators(&pool, &layout).unwrap();
        let reference = layout.occupation_mask(&[0], &[0]).unwrap();
        let s = adapt_vqe(&h, &gens, reference, &AdaptOptions::new(1e-3, Some(e0))).unwrap();
        assert_eq!(s.status, AdaptStatus::Converged);
        assert!(s.energy() - e0 < 1e-3);
        assert!(s.energies.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        let psi = s.prepare().unwrap();
        let e = crate::sim::expectation(&psi, &h).unwrap();
        assert!((e - s.energy()).abs() < 1e-9);
        let round = AdaptState::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(round, s);
    }
}
