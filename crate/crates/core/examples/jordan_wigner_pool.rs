// Jordan–Wigner images of ladder operators and the electron–proton
// excitation pool for a small two-species register.

use protonpipe::fermion::{
    excitation_pool, jordan_wigner_operator, qubit_pool, FermionOperator, FermionTerm, Ladder, ModeLayout,
};

fn main() -> protonpipe::Result<()> {
    let layout = ModeLayout::new(3, 0);
    let hop = FermionOperator::new(vec![
        FermionTerm::real(1.0, vec![Ladder::create(2), Ladder::annihilate(0)]),
        FermionTerm::real(1.0, vec![Ladder::create(0), Ladder::annihilate(2)]),
    ]);
    println!("a†2 a0 + h.c. ->\n{}", jordan_wigner_operator(&hop, &layout)?.to_text());

    // Electrons on modes 0..4, protons on 4..6; qubit index = global mode index.
    let layout = ModeLayout::new(4, 2);
    let pool = excitation_pool(&layout, &[0, 1], &[0])?;
    println!("{} pool elements", pool.len());
    for e in &pool.elements {
        println!("  {:<16} {:?}", e.label, e.kind);
    }
    let strings = qubit_pool(&pool.qubit_images(&layout)?);
    println!("{} distinct qubit-pool strings, e.g. {}", strings.len(), strings[0].to_letters(layout.n_modes()));
    Ok(())
}
