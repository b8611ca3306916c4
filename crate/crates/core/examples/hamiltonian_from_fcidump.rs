// Reads Left, Middle and Right integral files, assembles the qubit
// Hamiltonians and interpolates along the proton-transfer path.

use std::path::Path;

use protonpipe::hamiltonian::{assemble, interpolate, parse_integrals, LmrWeights, TRAJECTORY_LABELS};
use protonpipe::sim::{exact_ground_state, Sector};

fn main() -> protonpipe::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let ints = ["left", "middle", "right"].map(|s| parse_integrals(data.join(format!("toy_2e2p_{s}.fcidump"))));
    let [l, m, r] = ints;
    let (l, m, r) = (l?, m?, r?);
    println!("layout: {} electronic + {} protonic modes", l.layout.n_electron, l.layout.n_proton);

    let [hl, hm, hr] = [assemble(&l)?, assemble(&m)?, assemble(&r)?];
    println!("H_Left has {} Pauli terms", hl.len());

    let sector = Sector {
        layout: l.layout,
        n_electrons: 1,
        n_protons: 1,
    };
    for label in TRAJECTORY_LABELS {
        let h = interpolate(&hl, &hm, &hr, LmrWeights::from_label(label)?)?;
        let g = exact_ground_state(&h, Some(&sector))?;
        println!("  {label}  E0 = {:+.6} Ha", g.energy);
    }
    Ok(())
}
