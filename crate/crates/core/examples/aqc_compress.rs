// Compresses an ADAPT-VQE state into a shallow block circuit with the
// high- and low-fidelity presets, then compares routed two-qubit depths.

use protonpipe::adapt::{adapt_vqe, fermionic_generators, AdaptOptions};
use protonpipe::aqc::{compile, AqcConfig, Preset};
use protonpipe::circuit::{heavy_hex, transpile, Layout};
use protonpipe::fermion::{excitation_pool, ModeLayout};
use protonpipe::hamiltonian::{assemble, toy::toy_lmr};
use protonpipe::sim::{exact_ground_state, Sector};

fn main() -> protonpipe::Result<()> {
    let layout = ModeLayout::new(4, 3);
    let [_, middle, _] = toy_lmr(layout, 0, 0.01);
    let h = assemble(&middle)?;
    let sector = Sector {
        layout,
        n_electrons: 2,
        n_protons: 1,
    };
    let exact = exact_ground_state(&h, Some(&sector))?.energy;
    let pool = fermionic_generators(&excitation_pool(&layout, &[0, 1], &[0])?, &layout)?;
    let reference = layout.occupation_mask(&[0, 1], &[0])?;
    let s = adapt_vqe(&h, &pool, reference, &AdaptOptions::new(1e-3, Some(exact)))?;
    let target = s.prepare()?;

    let map = heavy_hex(1)?;
    let source = transpile(&s.circuit()?, &map, &Layout::Trivial)?;
    println!("ADAPT circuit: 2q (count, depth) = {:?}", source.circuit.two_qubit_metrics());

    for preset in [Preset::High, Preset::Low] {
        let res = compile(&target, &AqcConfig::preset(preset, map.clone(), 7))?;
        let routed = transpile(&res.circuit, &map, &Layout::Explicit(res.layout.clone()))?;
        println!(
            "{preset:?}: fidelity {:.4}, {} blocks, 2q (count, depth) = {:?}, swaps {}",
            res.fidelity(),
            res.blocks.len(),
            routed.circuit.two_qubit_metrics(),
            routed.swaps_inserted
        );
    }
    Ok(())
}
