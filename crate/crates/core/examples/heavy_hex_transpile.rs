// Routes a circuit with long-range CX gates onto a heavy-hex patch and
// reports the inserted SWAPs and two-qubit metrics.

use protonpipe::circuit::{heavy_hex, heavy_hex_counts, transpile, Circuit, Gate, Layout};

fn main() -> protonpipe::Result<()> {
    let map = heavy_hex(2)?;
    let (nodes, edges) = heavy_hex_counts(2);
    println!("heavy-hex d=2: {nodes} qubits, {edges} couplers, degrees {:?}", map.degree_histogram());

    let mut c = Circuit::new(5);
    c.push(Gate::H(0))?;
    for t in 1..5 {
        c.push(Gate::Cx(0, t))?;
    }
    c.push(Gate::Cx(4, 1))?;
    println!("logical: (count, depth) = {:?}", c.two_qubit_metrics());

    let t = transpile(&c, &map, &Layout::Trivial)?;
    println!(
        "routed:  (count, depth) = {:?}, {} swaps, final layout {:?}",
        t.circuit.two_qubit_metrics(),
        t.swaps_inserted,
        t.final_layout
    );
    Ok(())
}
