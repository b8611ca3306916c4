//! Adaptive approximate compiling: grow a circuit of general two-qubit blocks
//! on coupled pairs until `V(θ)|0…0⟩` matches a target state.
//!
//! Every circuit opens with one `RZ·RY·RZ` layer on each qubit, started from
//! the target's single-qubit occupations, so that targets orthogonal to
//! `|0…0⟩` (fixed particle-number sectors) still give the probes a gradient.

use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::circuit::{Circuit, CouplingMap, Gate, Mat4};
use crate::error::{Error, Result};
use crate::linalg::inner;
use crate::optimize::{self, minimize};
use crate::pauli::{Pauli, PauliKey};
use crate::sim::{reduced_density, StateVector};

pub const BLOCK_PARAMS: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    High,
    Low,
}

impl Preset {
    pub fn fidelity_target(self) -> f64 {
        match self {
            Preset::High => 0.99,
            Preset::Low => 0.97,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(Preset::High),
            "low" => Ok(Preset::Low),
            other => Err(Error::Argument(format!("unknown AQC preset `{other}` (expected high or low)"))),
        }
    }
}

/// How logical qubits are placed on the coupling map before compiling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Logical qubit `q` on physical qubit `q`.
    Trivial,
    /// Maximize the target's pairwise mutual information across coupled pairs.
    #[default]
    MutualInformation,
}

#[derive(Clone, Debug)]
pub struct AqcConfig {
    pub fidelity_target: f64,
    pub max_blocks: usize,
    pub coupling: CouplingMap,
    pub placement: Placement,
    pub seed: u64,
    /// Re-optimize every block after this many increments.
    pub reoptimize_every: usize,
    /// BFGS iterations for each candidate-pair probe.
    pub probe_iterations: u64,
    /// Half-width of the random start of a probe block.
    pub probe_init_scale: f64,
}

impl AqcConfig {
    pub fn new(fidelity_target: f64, coupling: CouplingMap, seed: u64) -> Self {
        AqcConfig {
            fidelity_target,
            max_blocks: 64,
            coupling,
            placement: Placement::default(),
            seed,
            reoptimize_every: 5,
            probe_iterations: 60,
            probe_init_scale: 0.3,
        }
    }

    pub fn preset(preset: Preset, coupling: CouplingMap, seed: u64) -> Self {
        Self::new(preset.fidelity_target(), coupling, seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub qubits: [usize; 2],
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AqcResult {
    /// Circuit on logical qubits; every block sits on a coupled pair under `layout`.
    #[serde(skip)]
    pub circuit: Circuit,
    /// Physical qubit of each logical qubit.
    pub layout: Vec<usize>,
    /// `[z, y, z]` angles of the opening layer, per qubit.
    pub initial_layer: Vec<[f64; 3]>,
    pub blocks: Vec<Block>,
    /// `1 − |⟨target|V(θ)|0⟩|²`
    pub cost: f64,
    /// Cost before the first block and after every increment.
    pub history: Vec<f64>,
    pub converged: bool,
}

impl AqcResult {
    pub fn fidelity(&self) -> f64 {
        1.0 - self.cost
    }
}

#[derive(Clone, Debug)]
pub struct PairChoice {
    pub pair: [usize; 2],
    /// Cost reduction achieved by the probe.
    pub score: f64,
    pub zero_score: bool,
    pub params: Vec<f64>,
}

/// Appends the 15 rotations of a general two-qubit block on `(a, b)` using
/// parameters `first..first+15`: Euler layers around an `XX·YY·ZZ` core.
/// All-zero parameters give the identity.
fn push_block(ansatz: &mut Ansatz, [a, b]: [usize; 2], first: usize) {
    let single = |q: usize, p: Pauli| PauliKey::single(q, p);
    let pair = |p: Pauli| {
        let mut k = PauliKey::IDENTITY;
        k.set(a, p);
        k.set(b, p);
        k
    };
    let keys = [
        single(a, Pauli::Z),
        single(a, Pauli::Y),
        single(a, Pauli::Z),
        single(b, Pauli::Z),
        single(b, Pauli::Y),
        single(b, Pauli::Z),
        pair(Pauli::X),
        pair(Pauli::Y),
        pair(Pauli::Z),
        single(a, Pauli::Z),
        single(a, Pauli::Y),
        single(a, Pauli::Z),
        single(b, Pauli::Z),
        single(b, Pauli::Y),
        single(b, Pauli::Z),
    ];
    for (i, k) in keys.into_iter().enumerate() {
        ansatz.push(k, first + i, 1.0);
    }
}

fn block_ansatz(n: usize, blocks: &[[usize; 2]]) -> Ansatz {
    let mut a = Ansatz::new(n);
    for (i, &q) in blocks.iter().enumerate() {
        for _ in 0..BLOCK_PARAMS {
            a.add_param();
        }
        push_block(&mut a, q, i * BLOCK_PARAMS);
    }
    a
}

/// Opening layer (`3n` parameters) followed by the blocks.
fn full_ansatz(n: usize, blocks: &[[usize; 2]]) -> Ansatz {
    let mut a = Ansatz::new(n);
    for q in 0..n {
        for (j, p) in [Pauli::Z, Pauli::Y, Pauli::Z].into_iter().enumerate() {
            let k = a.add_param();
            debug_assert_eq!(k, 3 * q + j);
            a.push(PauliKey::single(q, p), k, 1.0);
        }
    }
    let offset = 3 * n;
    for (i, &q) in blocks.iter().enumerate() {
        for _ in 0..BLOCK_PARAMS {
            a.add_param();
        }
        push_block(&mut a, q, offset + i * BLOCK_PARAMS);
    }
    a
}

/// `RY` angles reproducing each qubit's `|1⟩` population in `target`.
fn marginal_layer(target: &[Complex64], n: usize) -> Vec<f64> {
    let mut p1 = vec![0.0; n];
    for (b, a) in target.iter().enumerate() {
        let w = a.norm_sqr();
        for (q, p) in p1.iter_mut().enumerate() {
            if b >> q & 1 == 1 {
                *p += w;
            }
        }
    }
    let mut out = vec![0.0; 3 * n];
    for (q, p) in p1.into_iter().enumerate() {
        let angle = 2.0 * p.clamp(0.0, 1.0).sqrt().asin();
        out[3 * q + 1] = if angle.abs() < 1e-12 { 0.0 } else { angle };
    }
    out
}

/// 4×4 matrix of one block in the `|a b⟩` basis.
pub fn block_matrix(params: &[f64]) -> Mat4 {
    // local register: a is qubit 1 (more significant), b is qubit 0
    let a = block_ansatz(2, &[[1, 0]]);
    let mut m = [Complex64::new(0.0, 0.0); 16];
    for col in 0..4 {
        let mut v = vec![Complex64::new(0.0, 0.0); 4];
        v[col] = Complex64::new(1.0, 0.0);
        a.apply(&mut v, params);
        for row in 0..4 {
            m[row * 4 + col] = v[row];
        }
    }
    m
}

fn register_map(map: &CouplingMap, n: usize) -> Result<CouplingMap> {
    if map.n_qubits() < n {
        return Err(Error::Dimension(format!(
            "coupling map has {} qubits, target needs {n}",
            map.n_qubits()
        )));
    }
    let sub = map.induced(n)?;
    if n > 1 && !sub.is_connected() {
        return Err(Error::Routing(format!("qubits 0..{n} are not connected in the coupling map")));
    }
    Ok(sub)
}

fn register_edges(map: &CouplingMap, n: usize) -> Result<Vec<[usize; 2]>> {
    Ok(register_map(map, n)?.edges().map(|(a, b)| [a, b]).collect())
}

/// Pairwise mutual information `S(i) + S(j) − S(ij)` of a pure state.
pub fn mutual_information(target: &StateVector) -> Result<Vec<Vec<f64>>> {
    let n = target.n_qubits();
    let single: Vec<f64> = (0..n)
        .map(|q| reduced_density(target, &[q]).map(|r| r.entropy()))
        .collect::<Result<_>>()?;
    let mut mi = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = (single[i] + single[j] - reduced_density(target, &[i, j])?.entropy()).max(0.0);
            mi[i][j] = v;
            mi[j][i] = v;
        }
    }
    Ok(mi)
}

fn placement_score(mi: &[Vec<f64>], phys_edges: &[[usize; 2]], logical_at: &[usize]) -> f64 {
    phys_edges.iter().map(|&[a, b]| mi[logical_at[a]][logical_at[b]]).sum()
}

/// Physical qubit for each logical qubit, maximizing total mutual information
/// across coupled pairs. Exhaustive up to 8 qubits, pairwise-swap descent beyond.
/// Keeps the trivial placement unless another is strictly better.
pub fn choose_layout(mi: &[Vec<f64>], sub: &CouplingMap) -> Vec<usize> {
    let n = mi.len();
    let edges: Vec<[usize; 2]> = sub.edges().map(|(a, b)| [a, b]).collect();
    let mut best: Vec<usize> = (0..n).collect();
    let mut best_score = placement_score(mi, &edges, &best);
    let better = |s: f64, b: f64| s > b + 1e-12;
    if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        // Heap's algorithm over logical-at-physical assignments
        let mut c = vec![0usize; n];
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                let s = placement_score(mi, &edges, &perm);
                if better(s, best_score) {
                    best_score = s;
                    best.clone_from(&perm);
                }
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
    } else {
        loop {
            let mut improved = false;
            for a in 0..n {
                for b in a + 1..n {
                    best.swap(a, b);
                    let s = placement_score(mi, &edges, &best);
                    if better(s, best_score) {
                        best_score = s;
                        improved = true;
                    } else {
                        best.swap(a, b);
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
    // `best[p]` is the logical qubit on physical p; invert
    let mut layout = vec![0; n];
    for (p, &l) in best.iter().enumerate() {
        layout[l] = p;
    }
    layout
}

fn probe_seed(seed: u64, increment: usize, edge: usize) -> u64 {
    seed ^ (increment as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (edge as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9)
}

fn probe(current: &[Complex64], target: &[Complex64], pair: [usize; 2], n: usize, seed: u64, iters: u64, scale: f64) -> (f64, Vec<f64>) {
    let a = block_ansatz(n, &[pair]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = optimize::Options {
        grad_tol: 1e-10,
        max_iters: iters,
        restart: None,
    };
    // a near-identity start, then a wide one in case the current state is a
    // local minimum for this pair
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in [scale, std::f64::consts::PI] {
        let x0: Vec<f64> = (0..BLOCK_PARAMS).map(|_| s * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let m = minimize(|t| a.infidelity_and_gradient(target, current, t), x0, &opts);
        if best.as_ref().is_none_or(|b| m.value < b.0) {
            best = Some((m.value, m.x));
        }
    }
    best.expect("two starts")
}

/// Scores every coupled pair inside the register by a short one-block probe
/// from `current` and returns the best; ties go to the lexicographically first pair.
pub fn select_pair(current: &[Complex64], target: &[Complex64], coupling: &CouplingMap, seed: u64) -> Result<PairChoice> {
    let n = current.len().trailing_zeros() as usize;
    let edges = register_edges(coupling, n)?;
    if edges.is_empty() {
        return Err(Error::Argument("coupling map has no edge inside the register".into()));
    }
    select_from(current, target, &edges, n, seed, 0, 60, 0.3)
}

#[allow(clippy::too_many_arguments)]
fn select_from(
    current: &[Complex64],
    target: &[Complex64],
    edges: &[[usize; 2]],
    n: usize,
    seed: u64,
    increment: usize,
    iters: u64,
    scale: f64,
) -> Result<PairChoice> {
    let base = 1.0 - inner(target, current).norm_sqr();
    let probes: Vec<(f64, Vec<f64>)> = edges
        .par_iter()
        .enumerate()
        .map(|(i, &e)| probe(current, target, e, n, probe_seed(seed, increment, i), iters, scale))
        .collect();
    let mut best = 0;
    for (i, p) in probes.iter().enumerate() {
        if p.0 < probes[best].0 - 1e-12 {
            best = i;
        }
    }
    let score = base - probes[best].0;
    let zero_score = score <= 1e-12;
    Ok(PairChoice {
        pair: edges[if zero_score { 0 } else { best }],
        score: score.max(0.0),
        zero_score,
        params: if zero_score { vec![0.0; BLOCK_PARAMS] } else { probes[best].1.clone() },
    })
}

/// Joint re-optimization of the opening layer and all blocks. `params` holds
/// `3n` layer angles followed by 15 per block.
pub fn optimize_blocks(target: &[Complex64], pairs: &[[usize; 2]], params: &[f64], max_iters: u64) -> (f64, Vec<f64>) {
    let n = target.len().trailing_zeros() as usize;
    let a = full_ansatz(n, pairs);
    let zero = StateVector::zero(n).into_amplitudes();
    let opts = optimize::Options {
        grad_tol: 1e-10,
        max_iters,
        restart: None,
    };
    let m = minimize(|t| a.infidelity_and_gradient(target, &zero, t), params.to_vec(), &opts);
    (m.value, m.x)
}

fn build_circuit(n: usize, layer: &[[f64; 3]], blocks: &[Block]) -> Circuit {
    let mut c = Circuit::new(n);
    for (q, &[z0, y, z1]) in layer.iter().enumerate() {
        for g in [Gate::Rz(q, z0), Gate::Ry(q, y), Gate::Rz(q, z1)] {
            if let Gate::Rz(_, t) | Gate::Ry(_, t) = g {
                if t != 0.0 {
                    c.push(g).expect("rotation on an in-range qubit");
                }
            }
        }
    }
    for b in blocks {
        c.push(Gate::Unitary2(b.qubits, Box::new(block_matrix(&b.params))))
            .expect("block matrices are unitary and on distinct in-range qubits");
    }
    c
}

/// Compiles a shallow block circuit preparing `target` from `|0…0⟩`.
pub fn compile(target: &StateVector, cfg: &AqcConfig) -> Result<AqcResult> {
    if !(cfg.fidelity_target > 0.0 && cfg.fidelity_target <= 1.0) {
        return Err(Error::Argument(format!("fidelity target {} outside (0, 1]", cfg.fidelity_target)));
    }
    let n = target.n_qubits();
    let t = target.amplitudes();
    let sub = register_map(&cfg.coupling, n)?;
    let layout: Vec<usize> = match cfg.placement {
        Placement::Trivial => (0..n).collect(),
        Placement::MutualInformation if n > 2 => choose_layout(&mutual_information(target)?, &sub),
        Placement::MutualInformation => (0..n).collect(),
    };
    let mut logical_of = vec![0; n];
    for (l, &p) in layout.iter().enumerate() {
        logical_of[p] = l;
    }
    let mut edges: Vec<[usize; 2]> = sub
        .edges()
        .map(|(a, b)| {
            let (x, y) = (logical_of[a], logical_of[b]);
            [x.min(y), x.max(y)]
        })
        .collect();
    edges.sort_unstable();
    let goal = 1.0 - cfg.fidelity_target;
    let zero = StateVector::zero(n).into_amplitudes();

    let layer0 = marginal_layer(t, n);
    let (c0, layer0) = if layer0.iter().all(|&v| v == 0.0) {
        (1.0 - inner(t, &zero).norm_sqr(), layer0)
    } else {
        optimize_blocks(t, &[], &layer0, 400)
    };
    let offset = 3 * n;
    let mut pairs: Vec<[usize; 2]> = Vec::new();
    let mut params: Vec<f64> = layer0;
    let mut cost = c0;
    let mut history = vec![cost];
    let mut converged = cost <= goal;
    while !converged && pairs.len() < cfg.max_blocks && !edges.is_empty() {
        let current = full_ansatz(n, &pairs).state(&zero, &params);
        let choice = select_from(&current, t, &edges, n, cfg.seed, pairs.len(), cfg.probe_iterations, cfg.probe_init_scale)?;
        if choice.zero_score {
            log::warn!("AQC stalled at cost {cost:.3e}: no coupled pair lowers the cost");
            break;
        }
        pairs.push(choice.pair);
        params.extend_from_slice(&choice.params);
        // polish the new block, then periodically everything
        let n_blocks = pairs.len();
        let last = offset + (n_blocks - 1) * BLOCK_PARAMS;
        let (c1, p1) = if n_blocks % cfg.reoptimize_every.max(1) == 0 {
            optimize_blocks(t, &pairs, &params, 400)
        } else {
            let a_new = block_ansatz(n, &pairs[n_blocks - 1..]);
            let opts = optimize::Options {
                grad_tol: 1e-10,
                max_iters: 200,
                restart: None,
            };
            let m = minimize(|x| a_new.infidelity_and_gradient(t, &current, x), params[last..].to_vec(), &opts);
            let mut all = params.clone();
            all[last..].copy_from_slice(&m.x);
            (m.value, all)
        };
        params = p1;
        cost = c1.min(cost);
        log::info!("AQC block {n_blocks} on {:?}: cost {cost:.3e}", choice.pair);
        history.push(cost);
        converged = cost <= goal;
        if !converged && pairs.len() == cfg.max_blocks {
            let (c2, p2) = optimize_blocks(t, &pairs, &params, 1000);
            params = p2;
            cost = c2.min(cost);
            *history.last_mut().expect("non-empty") = cost;
            converged = cost <= goal;
        }
    }
    let initial_layer: Vec<[f64; 3]> = (0..n).map(|q| [params[3 * q], params[3 * q + 1], params[3 * q + 2]]).collect();
    let blocks: Vec<Block> = pairs
        .iter()
        .enumerate()
        .map(|(i, &q)| Block {
            qubits: q,
            params: params[offset + i * BLOCK_PARAMS..offset + (i + 1) * BLOCK_PARAMS].to_vec(),
        })
        .collect();
    let circuit = build_circuit(n, &initial_layer, &blocks);
    let mut prepared = zero;
    crate::sim::apply_circuit_amps(&mut prepared, &circuit);
    let exact_cost = 1.0 - inner(t, &prepared).norm_sqr();
    Ok(AqcResult {
        circuit,
        layout,
        initial_layer,
        blocks,
        cost: exact_cost,
        history,
        converged: exact_cost <= goal + 1e-12,
    })
}
