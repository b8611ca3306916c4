// ADAPT-VQE on a toy system with the fermionic pool, stopping once the
// energy error drops below two thresholds.

use protonpipe::adapt::{adapt_vqe, fermionic_generators, AdaptOptions};
use protonpipe::fermion::{excitation_pool, ModeLayout};
use protonpipe::hamiltonian::{assemble, toy::toy_integrals};
use protonpipe::sim::{exact_ground_state, Sector};

fn main() -> protonpipe::Result<()> {
    let layout = ModeLayout::new(4, 2);
    let (occ_e, occ_p) = ([0, 1], [0]);
    let h = assemble(&toy_integrals(layout, 5))?;
    let sector = Sector {
        layout,
        n_electrons: 2,
        n_protons: 1,
    };
    let exact = exact_ground_state(&h, Some(&sector))?.energy;
    let pool = fermionic_generators(&excitation_pool(&layout, &occ_e, &occ_p)?, &layout)?;
    let reference = layout.occupation_mask(&occ_e, &occ_p)?;

    for threshold in [1e-2, 1e-3] {
        let s = adapt_vqe(&h, &pool, reference, &AdaptOptions::new(threshold, Some(exact)))?;
        let (count, depth) = s.circuit()?.two_qubit_metrics();
        println!(
            "threshold {threshold:.0e}: {} operators, error {:.2e} Ha, 2q count/depth {count}/{depth} ({:?})",
            s.selected.len(),
            s.energy() - exact,
            s.status
        );
        for op in &s.selected {
            println!("    {}", op.label);
        }
    }
    Ok(())
}
