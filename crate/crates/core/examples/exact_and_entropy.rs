// Exact ground state of a toy electron–proton Hamiltonian in its
// particle-number sector, its proton entanglement entropy and 1-RDMs.

use protonpipe::analysis::proton_entropy;
use protonpipe::fermion::{ModeLayout, Species};
use protonpipe::hamiltonian::{assemble, toy::toy_integrals};
use protonpipe::sim::{exact_ground_state, orbital_1rdm, Sector};

fn main() -> protonpipe::Result<()> {
    let layout = ModeLayout::new(4, 2);
    let h = assemble(&toy_integrals(layout, 5))?;
    let sector = Sector {
        layout,
        n_electrons: 2,
        n_protons: 1,
    };
    let g = exact_ground_state(&h, Some(&sector))?;
    println!("E0 = {:.8} Ha (sector dimension {})", g.energy, g.dimension);
    println!("proton entropy S = {:.5}", proton_entropy(&g.state, &layout)?);

    let gp = orbital_1rdm(&g.state, &layout, Species::Proton)?;
    println!("protonic occupations: {:.5} {:.5}", gp[(0, 0)].re, gp[(1, 1)].re);
    let ge = orbital_1rdm(&g.state, &layout, Species::Electron)?;
    println!("electron count from γ: {:.6}", ge.trace().re);
    Ok(())
}
