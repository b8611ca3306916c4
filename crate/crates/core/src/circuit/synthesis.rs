use std::f64::consts::FRAC_PI_2;

use super::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliKey, PauliString};

/// Circuit for `exp(-iθ/2 · P)`.
///
/// `P` must carry a real phase (`±1`); a negative sign flips `θ`.
pub fn pauli_evolution(generator: &PauliString, theta: f64) -> Result<Circuit> {
    let sign = match generator.phase().power() {
        0 => 1.0,
        2 => -1.0,
        _ => {
            return Err(Error::Argument(format!(
                "generator {generator} is not Hermitian"
            )))
        }
    };
    let mut c = Circuit::new(generator.n_qubits());
    pauli_evolution_into(&mut c, generator.key(), sign * theta);
    Ok(c)
}

/// Appends `exp(-iθ/2 · P)` to `circ`; qubits of `key` must lie inside `circ`.
pub fn pauli_evolution_into(circ: &mut Circuit, key: PauliKey, theta: f64) {
    let support = key.support();
    let Some(&last) = support.last() else {
        log::warn!("identity generator in pauli_evolution; emitting global phase only");
        circ.add_phase(-theta / 2.0);
        return;
    };
    for &q in &support {
        match key.letter(q) {
            Pauli::X => circ.push_unchecked(Gate::H(q)),
            Pauli::Y => circ.push_unchecked(Gate::Rx(q, FRAC_PI_2)),
            _ => {}
        }
    }
    for w in support.windows(2) {
        circ.push_unchecked(Gate::Cx(w[0], w[1]));
    }
    circ.push_unchecked(Gate::Rz(last, theta));
    for w in support.windows(2).rev() {
        circ.push_unchecked(Gate::Cx(w[0], w[1]));
    }
    for &q in &support {
        match key.letter(q) {
            Pauli::X => circ.push_unchecked(Gate::H(q)),
            Pauli::Y => circ.push_unchecked(Gate::Rx(q, -FRAC_PI_2)),
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_z_is_one_rz() {
        let c = pauli_evolution(&PauliString::parse("Z").unwrap(), std::f64::consts::PI).unwrap();
        assert_eq!(c.gates(), &[Gate::Rz(0, std::f64::consts::PI)]);
    }

    #[test]
    fn ladder_structure() {
        let c = pauli_evolution(&PauliString::parse("ZZZ").unwrap(), 0.4).unwrap();
        assert_eq!(c.two_qubit_metrics(), (4, 4));
        assert_eq!(c.len(), 5);
    }

    #[test]
    fn identity_is_phase_only() {
        let c = pauli_evolution(&PauliString::identity(2), 0.6).unwrap();
        assert!(c.is_empty());
        assert!((c.global_phase() + 0.3).abs() < 1e-15);
    }
}
