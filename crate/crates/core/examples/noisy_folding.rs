// Density-matrix simulation under a calibration-derived noise model, with
// two-qubit gate folding to amplify the noise.

use std::path::Path;

use num_complex::Complex64;
use protonpipe::circuit::{Circuit, Gate};
use protonpipe::noise::{fold, noisy_expectation, NoiseModel, Shots};
use protonpipe::pauli::PauliSum;

fn main() -> protonpipe::Result<()> {
    let cal = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/calibration.json");
    let nm = NoiseModel::read(cal)?;
    println!("{} qubits, EPLG {:?}, {} entries without data", nm.n_qubits(), nm.eplg, nm.missing.len());

    // GHZ state on a line; ⟨Z0 Z3⟩ = 1 without noise.
    let mut c = Circuit::new(4);
    c.push(Gate::H(0))?;
    for q in 0..3 {
        c.push(Gate::Cx(q, q + 1))?;
    }
    let zz = PauliSum::from_labels(4, &[(Complex64::new(1.0, 0.0), "ZIIZ")])?;

    for lambda in [1.0, 2.0, 3.0, 4.0] {
        let folded = fold(&c, lambda, 11)?;
        let exact = noisy_expectation(&folded, &zz, &nm, Shots::Exact)?;
        let sampled = noisy_expectation(&folded, &zz, &nm, Shots::Sampled { shots: 4000, seed: 3 })?;
        println!(
            "λ = {lambda}: {:>2} two-qubit gates, ⟨Z0Z3⟩ = {exact:.5} (4000 shots: {sampled:.4})",
            folded.count_two_qubit()
        );
    }
    Ok(())
}
