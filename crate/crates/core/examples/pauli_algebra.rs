// Sparse Pauli-sum arithmetic: products with phases, scaled sums, commutators
// and the dense matrix of a small operator.

use num_complex::Complex64;
use protonpipe::pauli::{PauliString, PauliSum};

fn main() -> protonpipe::Result<()> {
    let re = |v: f64| Complex64::new(v, 0.0);

    let x = PauliString::parse("X")?;
    let y = PauliString::parse("Y")?;
    let xy = x.mul(&y)?;
    println!("X·Y = {} {}", xy.phase().to_complex(), xy.key().to_letters(1));

    let a = PauliSum::from_labels(2, &[(re(0.5), "XX")])?;
    let b = PauliSum::from_labels(2, &[(re(2.0), "IZ")])?;
    println!("(0.5 XX)(2 IZ) =\n{}", a.multiply(&b)?.to_text());

    let hop = PauliSum::from_labels(2, &[(re(0.5), "XX"), (re(0.5), "YY")])?;
    let z0 = PauliSum::from_labels(2, &[(re(1.0), "ZI")])?;
    println!("[hop, Z0] =\n{}", hop.commutator(&z0)?.to_text());

    // Hopping only couples |01⟩ and |10⟩.
    let m = hop.to_dense()?;
    for r in 0..4 {
        let row: Vec<String> = (0..4).map(|c| format!("{:5.2}", m[(r, c)].re)).collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
