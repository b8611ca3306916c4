use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::pauli::PauliSum;

/// A [`PauliSum`] regrouped by X-mask for repeated application to
/// statevectors: each group is a diagonal followed by a bit-flip.
#[derive(Clone, Debug)]
pub struct CompiledOperator {
    n_qubits: usize,
    groups: Vec<(usize, Vec<Complex64>)>,
}

impl CompiledOperator {
    pub fn new(op: &PauliSum) -> Self {
        let n = op.n_qubits();
        let dim = 1usize << n;
        let mut by_x: BTreeMap<u64, Vec<Complex64>> = BTreeMap::new();
        for (k, c) in op.iter() {
            let diag = by_x.entry(k.x_mask()).or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim]);
            for (b, d) in diag.iter_mut().enumerate() {
                let (ph, _) = k.apply_to_basis(b);
                *d += c * ph;
            }
        }
        CompiledOperator {
            n_qubits: n,
            groups: by_x.into_iter().map(|(x, d)| (x as usize, d)).collect(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `out = O · amps`
    pub fn apply_into(&self, amps: &[Complex64], out: &mut [Complex64]) {
        let fill = |(b2, o): (usize, &mut Complex64)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, d) in &self.groups {
                let b = b2 ^ x;
                acc += d[b] * amps[b];
            }
            *o = acc;
        };
        if amps.len() >= 1 << 12 {
            out.par_iter_mut().enumerate().for_each(fill);
        } else {
            out.iter_mut().enumerate().for_each(fill);
        }
    }

    pub fn apply(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        self.apply_into(amps, &mut out);
        out
    }

    /// `⟨ψ|O|ψ⟩`
    pub fn expectation(&self, amps: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, d) in &self.groups {
            for (b, a) in amps.iter().enumerate() {
                acc += amps[b ^ x].conj() * d[b] * a;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_pauli_sum_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let labels = ["XYZI", "ZZII", "IYYX", "XIIX", "IIIZ", "YXZY"];
        let terms: Vec<(Complex64, &str)> =
            labels.iter().map(|l| (Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5), *l)).collect();
        let op = PauliSum::from_labels(4, &terms).unwrap();
        let psi: Vec<Complex64> = (0..16).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        let fast = CompiledOperator::new(&op);
        let a = fast.apply(&psi);
        let b = op.apply(&psi);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-13));
        let e: Complex64 = psi.iter().zip(&b).map(|(p, q)| p.conj() * q).sum();
        assert!((fast.expectation(&psi) - e).norm() < 1e-13);
    }
}
