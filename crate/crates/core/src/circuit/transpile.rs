use num_complex::Complex64;

use super::{kak, Circuit, CouplingMap, Gate};
use crate::error::{Error, Result};

/// Initial assignment of logical to physical qubits.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Layout {
    #[default]
    Trivial,
    /// `physical[logical]`
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct Transpiled {
    /// Circuit on the physical register using only CZ, 1q gates and measurements.
    pub circuit: Circuit,
    pub initial_layout: Vec<usize>,
    /// Where each logical qubit ends up after routing SWAPs.
    pub final_layout: Vec<usize>,
    pub swaps_inserted: usize,
}

impl Transpiled {
    /// Embeds logical amplitudes into the physical register under `layout`,
    /// with unused physical qubits in `|0⟩`.
    pub fn embed(&self, amps: &[Complex64], layout: &[usize]) -> Vec<Complex64> {
        embed_amplitudes(amps, layout, self.circuit.n_qubits())
    }
}

pub fn embed_amplitudes(amps: &[Complex64], layout: &[usize], n_physical: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); 1usize << n_physical];
    for (b, &a) in amps.iter().enumerate() {
        let mut p = 0usize;
        for (l, &phys) in layout.iter().enumerate() {
            if b >> l & 1 == 1 {
                p |= 1 << phys;
            }
        }
        out[p] = a;
    }
    out
}

/// Routes `c` onto `map` with greedy shortest-path SWAP insertion and lowers
/// every two-qubit operation to CZ plus single-qubit rotations.
pub fn transpile(c: &Circuit, map: &CouplingMap, layout: &Layout) -> Result<Transpiled> {
    let n_log = c.n_qubits();
    let n_phys = map.n_qubits();
    if n_log > n_phys {
        return Err(Error::Dimension(format!(
            "{n_log}-qubit circuit does not fit a {n_phys}-qubit coupling map"
        )));
    }
    let initial: Vec<usize> = match layout {
        Layout::Trivial => (0..n_log).collect(),
        Layout::Explicit(v) => {
            if v.len() != n_log {
                return Err(Error::Argument(format!("layout has {} entries for {n_log} qubits", v.len())));
            }
            let mut seen = vec![false; n_phys];
            for &p in v {
                if p >= n_phys || std::mem::replace(&mut seen[p], true) {
                    return Err(Error::Argument(format!("invalid or repeated physical qubit {p} in layout")));
                }
            }
            v.clone()
        }
    };
    // l2p over the full physical register; entries >= n_log are idle wires
    let mut l2p: Vec<usize> = initial.clone();
    let mut spare = (0..n_phys).filter(|p| !initial.contains(p));
    while l2p.len() < n_phys {
        l2p.push(spare.next().expect("enough physical qubits"));
    }
    let mut p2l = vec![0; n_phys];
    for (l, &p) in l2p.iter().enumerate() {
        p2l[p] = l;
    }

    let mut out = Circuit::new(n_phys);
    out.add_phase(c.global_phase());
    let mut swaps = 0;
    for g in c.gates() {
        if !g.is_two_qubit() {
            out.push_unchecked(g.remap(|q| l2p[q]));
            continue;
        }
        let qs = g.qubits();
        let (pa, pb) = (l2p[qs[0]], l2p[qs[1]]);
        if !map.are_coupled(pa, pb) {
            let path = map.shortest_path(pa, pb).ok_or_else(|| {
                Error::Routing(format!("physical qubits {pa} and {pb} are not connected in the coupling map"))
            })?;
            for w in path[..path.len() - 1].windows(2) {
                push_swap(&mut out, w[0], w[1]);
                swaps += 1;
                let (la, lb) = (p2l[w[0]], p2l[w[1]]);
                p2l.swap(w[0], w[1]);
                l2p[la] = w[1];
                l2p[lb] = w[0];
            }
        }
        lower_two_qubit(&mut out, &g.remap(|q| l2p[q]))?;
    }
    Ok(Transpiled {
        circuit: out,
        initial_layout: initial,
        final_layout: l2p[..n_log].to_vec(),
        swaps_inserted: swaps,
    })
}

fn push_cx(c: &mut Circuit, control: usize, target: usize) {
    c.push_unchecked(Gate::H(target));
    c.push_unchecked(Gate::Cz(control, target));
    c.push_unchecked(Gate::H(target));
}

fn push_swap(c: &mut Circuit, a: usize, b: usize) {
    push_cx(c, a, b);
    push_cx(c, b, a);
    push_cx(c, a, b);
}

fn lower_two_qubit(c: &mut Circuit, g: &Gate) -> Result<()> {
    match g {
        Gate::Cz(..) => c.push_unchecked(g.clone()),
        Gate::Cx(a, b) => push_cx(c, *a, *b),
        Gate::Swap(a, b) => push_swap(c, *a, *b),
        Gate::Unitary2([a, b], m) => kak::synthesize(m, *a, *b, c)?,
        _ => unreachable!("single-qubit gate passed to lower_two_qubit"),
    }
    Ok(())
}
