//! Worked examples checked against independent dense computations.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use protonpipe::adapt::{adapt_vqe, fermionic_generators, gradient_screen, AdaptOptions};
use protonpipe::analysis::{entanglement_entropy, proton_density, rate_constant_ratio, OrbitalGrid};
use protonpipe::ansatz::Ansatz;
use protonpipe::aqc::{compile, select_pair, AqcConfig};
use protonpipe::circuit::{heavy_hex, pauli_evolution, transpile, Circuit, CouplingMap, Gate, Layout};
use protonpipe::fermion::{
    excitation_pool, jordan_wigner_operator, qubit_pool, ExcitationKind, FermionOperator, FermionTerm, Ladder, ModeLayout,
};
use protonpipe::hamiltonian::toy::toy_integrals;
use protonpipe::hamiltonian::{assemble, fno_select, lowdin, NeoIntegrals};
use protonpipe::noise::{depolarizing_parameter, evolve, fold, noisy_expectation, NoiseModel, QubitNoise, Shots};
use protonpipe::pauli::{PauliKey, PauliString, PauliSum};
use protonpipe::sim::{
    exact_ground_state, expectation, fidelity, orbital_1rdm, reduced_density, run, CompiledOperator, Sector, StateVector,
};
use protonpipe::zne::{barrier_diff_first, barrier_fit_first, FitOptions, ZneDataset};
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn sum(n: usize, terms: &[(f64, &str)]) -> PauliSum {
    let t: Vec<(Complex64, &str)> = terms.iter().map(|&(v, l)| (c(v, 0.0), l)).collect();
    PauliSum::from_labels(n, &t).unwrap()
}

fn dense_of(ops: &FermionOperator, n: usize) -> CMat {
    let a: Vec<_> = (0..n).map(|p| to_c(&annihilator(p, n))).collect();
    let mut m = CMat::zeros(1 << n, 1 << n);
    for t in &ops.terms {
        let mut f = CMat::identity(1 << n, 1 << n) * t.coeff;
        for l in &t.ops {
            f *= if l.creation { a[l.mode].adjoint() } else { a[l.mode].clone() };
        }
        m += f;
    }
    m
}

/// `exp(iθG)` for Hermitian `G` by eigen-decomposition.
fn expm_i(g: &CMat, theta: f64) -> CMat {
    let e = g.clone().symmetric_eigen();
    let d = CMat::from_diagonal(&e.eigenvalues.map(|l| Complex64::from_polar(1.0, theta * l)));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

/// Pauli decomposition by trace projection over all `4ⁿ` strings.
fn pauli_support(m: &CMat, n: usize) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for idx in 0..4usize.pow(n as u32) {
        let letters: String = (0..n).map(|q| ['I', 'X', 'Y', 'Z'][idx / 4usize.pow(q as u32) % 4]).collect();
        if (pauli_matrix(&letters) * m).trace().norm() > 1e-10 {
            out.insert(letters);
        }
    }
    out
}

fn state(amps: Vec<Complex64>) -> StateVector {
    StateVector::from_amplitudes(amps).unwrap()
}

/// Logical amplitudes of a physical state whose ancillas are all `|0⟩`.
fn unembed(amps: &[Complex64], layout: &[usize]) -> Vec<Complex64> {
    (0..1usize << layout.len())
        .map(|b| amps[layout.iter().enumerate().map(|(q, &p)| (b >> q & 1) << p).sum::<usize>()])
        .collect()
}

fn random_circuit(r: &mut rand_chacha::ChaCha8Rng, n: usize, len: usize) -> Circuit {
    let mut circ = Circuit::new(n);
    for _ in 0..len {
        let a = r.random_range(0..n);
        let b = (a + r.random_range(1..n)) % n;
        let t = r.random_range(-3.0..3.0);
        let g = match r.random_range(0..8) {
            0 => Gate::Rx(a, t),
            1 => Gate::Ry(a, t),
            2 => Gate::Rz(a, t),
            3 => Gate::H(a),
            4 => Gate::Sx(a),
            5 => Gate::Cz(a, b),
            6 => Gate::Cx(a, b),
            _ => Gate::Swap(a, b),
        };
        circ.push(g).unwrap();
    }
    circ
}

// ---------------------------------------------------------------- pauli

#[test]
fn product_of_weighted_strings() {
    let got = sum(2, &[(0.5, "XX")]).multiply(&sum(2, &[(2.0, "IZ")])).unwrap();
    let want = PauliSum::from_labels(2, &[(c(0.0, -1.0), "XY")]).unwrap();
    assert!(got.max_abs_diff(&want) < 1e-15);
    assert!(max_diff(&got.to_dense().unwrap(), &(pauli_matrix("XX") * pauli_matrix("IZ"))) < 1e-15);
}

#[test]
fn scaled_addition_merges_terms() {
    let got = sum(1, &[(1.0, "Z")]).add_scaled(c(0.5, 0.0), &sum(1, &[(1.0, "Z"), (1.0, "X")])).unwrap();
    assert!(got.max_abs_diff(&sum(1, &[(1.5, "Z"), (0.5, "X")])) < 1e-15);
    assert_eq!(got.len(), 2);
}

#[test]
fn hopping_block_is_a_swap_of_single_excitations() {
    let m = sum(2, &[(0.5, "XX"), (0.5, "YY")]).to_dense().unwrap();
    let mut want = CMat::zeros(4, 4);
    want[(1, 2)] = c(1.0, 0.0);
    want[(2, 1)] = c(1.0, 0.0);
    assert!(max_diff(&m, &want) < 1e-15);
}

#[test]
fn string_products_track_phase() {
    let x = PauliString::parse("X").unwrap();
    let y = PauliString::parse("Y").unwrap();
    let xy = x.mul(&y).unwrap();
    assert_eq!(xy.key(), PauliKey::parse("Z").unwrap());
    assert_eq!(xy.phase().to_complex(), c(0.0, 1.0));
}

// -------------------------------------------------------------- fermion

#[test]
fn hopping_images_match_fock_matrices() {
    for (n, p, want) in [(2, 1, vec![(0.5, "XX"), (0.5, "YY")]), (3, 2, vec![(0.5, "XZX"), (0.5, "YZY")])] {
        let layout = ModeLayout::new(n, 0);
        let op = FermionOperator::new(vec![
            FermionTerm::real(1.0, vec![Ladder::create(p), Ladder::annihilate(0)]),
            FermionTerm::real(1.0, vec![Ladder::create(0), Ladder::annihilate(p)]),
        ]);
        let img = jordan_wigner_operator(&op, &layout).unwrap();
        assert!(img.max_abs_diff(&sum(n, &want)) < 1e-15);
        assert!(max_diff(&img.to_dense().unwrap(), &dense_of(&op, n)) < 1e-14);
    }
}

#[test]
fn electronic_pool_matches_enumeration() {
    let layout = ModeLayout::new(4, 0);
    let pool = excitation_pool(&layout, &[0, 1], &[]).unwrap();
    let count = |k| pool.elements.iter().filter(|e| e.kind == k).count();
    assert_eq!(count(ExcitationKind::ElectronSingle), 4);
    assert_eq!(count(ExcitationKind::ElectronDouble), 1);
    assert_eq!(pool.len(), 5);

    let mut want = Vec::new();
    for i in [0, 1] {
        for a in [2, 3] {
            want.push(FermionOperator::anti_hermitian(vec![Ladder::create(a), Ladder::annihilate(i)]));
        }
    }
    want.push(FermionOperator::anti_hermitian(vec![
        Ladder::create(3),
        Ladder::create(2),
        Ladder::annihilate(1),
        Ladder::annihilate(0),
    ]));
    let got: Vec<CMat> = pool.elements.iter().map(|e| dense_of(&e.operator, 4)).collect();
    for w in &want {
        let w = dense_of(w, 4);
        assert!(got.iter().any(|g| max_diff(g, &w) < 1e-14 || max_diff(g, &-&w) < 1e-14));
    }
}

#[test]
fn one_electron_one_proton_pool_has_one_mixed_double() {
    let layout = ModeLayout::new(2, 2);
    let pool = excitation_pool(&layout, &[0], &[0]).unwrap();
    let mixed: Vec<_> = pool.elements.iter().filter(|e| e.kind == ExcitationKind::Mixed).collect();
    assert_eq!(mixed.len(), 1);
    let want = FermionOperator::anti_hermitian(vec![
        Ladder::create(3),
        Ladder::create(1),
        Ladder::annihilate(0),
        Ladder::annihilate(2),
    ]);
    let (g, w) = (dense_of(&mixed[0].operator, 4), dense_of(&want, 4));
    assert!(max_diff(&g, &w) < 1e-14 || max_diff(&g, &-&w) < 1e-14);
}

#[test]
fn qubit_pool_of_singles_matches_projected_strings() {
    let layout = ModeLayout::new(4, 0);
    let pool = excitation_pool(&layout, &[0, 1], &[]).unwrap();
    let singles: Vec<_> = pool.elements.iter().filter(|e| e.kind == ExcitationKind::ElectronSingle).collect();
    let images: Vec<PauliSum> = singles.iter().map(|e| jordan_wigner_operator(&e.operator, &layout).unwrap()).collect();
    let keys = qubit_pool(&images);
    let got: BTreeSet<String> = keys.iter().map(|k| k.to_letters(4)).collect();
    assert_eq!(got.len(), keys.len(), "duplicate strings");
    let want: BTreeSet<String> = singles.iter().flat_map(|e| pauli_support(&dense_of(&e.operator, 4), 4)).collect();
    assert_eq!(got, want);
}

// ---------------------------------------------------------- hamiltonian

#[test]
fn toy_spectrum_matches_fock_space() {
    for seed in [0, 4, 9] {
        let ints = toy_integrals(ModeLayout::new(2, 2), seed);
        let h = assemble(&ints).unwrap();
        let got = sorted_eigenvalues(&h.to_dense().unwrap());
        let want = sorted_eigenvalues_real(&fock_hamiltonian(&ints));
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn natural_orbital_selection_keeps_the_top_subspace() {
    let mut r = rng(3);
    let n = 6;
    let b = CMat::from_fn(n, n, |_, _| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    let gamma = &b * b.adjoint();
    let sel = fno_select(&gamma, 3).unwrap();
    let e = gamma.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[j].total_cmp(&e.eigenvalues[i]));
    for (k, &i) in order[..3].iter().enumerate() {
        assert!((sel.occupations[k] - e.eigenvalues[i]).abs() < 1e-10);
    }
    let v = CMat::from_columns(&order[..3].iter().map(|&i| e.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    let (p_got, p_want) = (&sel.rotation * sel.rotation.adjoint(), &v * v.adjoint());
    assert!(max_diff(&p_got, &p_want) < 1e-10);
    assert_eq!(sel.discarded.len(), 3);
}

#[test]
fn lowdin_orthonormalizes() {
    let s = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
    let t = lowdin(&s).unwrap();
    assert!(max_diff(&(t.adjoint() * &s * &t), &CMat::identity(2, 2)) < 1e-10);
}

// -------------------------------------------------------------- circuit

#[test]
fn pauli_evolution_of_xx() {
    let circ = pauli_evolution(&PauliString::parse("XX").unwrap(), 0.3).unwrap();
    let p = pauli_matrix("XX");
    let want = CMat::identity(4, 4) * c(0.15f64.cos(), 0.0) - p * c(0.0, 0.15f64.sin());
    assert!(equal_up_to_phase(&dense_unitary(&circ), &want, 1e-12));
}

/// Honeycomb built row by row with dangling vertices pruned, then every
/// edge subdivided.
fn heavy_hex_degrees(d: usize) -> BTreeMap<usize, usize> {
    let width = 2 * d + 2;
    let mut edges: BTreeSet<((usize, usize), (usize, usize))> = BTreeSet::new();
    for row in 0..=d {
        for col in 0..width - 1 {
            edges.insert(((row, col), (row, col + 1)));
        }
        if row < d {
            for col in (row % 2..width).step_by(2) {
                edges.insert(((row, col), (row + 1, col)));
            }
        }
    }
    loop {
        let mut deg: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(a, b) in &edges {
            *deg.entry(a).or_default() += 1;
            *deg.entry(b).or_default() += 1;
        }
        let before = edges.len();
        edges.retain(|(a, b)| deg[a] > 1 && deg[b] > 1);
        if edges.len() == before {
            let mut hist = BTreeMap::new();
            for v in deg.values() {
                *hist.entry(*v).or_default() += 1;
            }
            *hist.entry(2).or_default() += edges.len();
            return hist;
        }
    }
}

#[test]
fn heavy_hex_degree_histogram() {
    for d in 1..=4 {
        let map = heavy_hex(d).unwrap();
        let mut got = BTreeMap::new();
        for q in 0..map.n_qubits() {
            *got.entry(map.degree(q)).or_default() += 1;
        }
        assert_eq!(got, heavy_hex_degrees(d), "distance {d}");
        assert!(map.is_connected());
    }
}

#[test]
fn distant_cx_on_a_line_needs_one_swap() {
    let mut circ = Circuit::new(3);
    circ.push(Gate::Cx(0, 2)).unwrap();
    let t = transpile(&circ, &CouplingMap::line(3), &Layout::Trivial).unwrap();
    assert_eq!(t.swaps_inserted, 1);
    let mut r = rng(5);
    for _ in 0..4 {
        let psi = random_state(&mut r, 3);
        let want = dense_unitary(&circ) * CMat::from_column_slice(8, 1, &psi);
        let got = run(&t.circuit, &state(t.embed(&psi, &t.initial_layout))).unwrap();
        let back = unembed(got.amplitudes(), &t.final_layout);
        let ov: Complex64 = back.iter().zip(want.iter()).map(|(a, b)| a.conj() * b).sum();
        assert!((ov.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn transpiled_circuit_on_heavy_hex_acts_like_the_source() {
    let mut r = rng(11);
    let circ = random_circuit(&mut r, 4, 30);
    let t = transpile(&circ, &heavy_hex(1).unwrap(), &Layout::Trivial).unwrap();
    for g in t.circuit.gates() {
        if let [a, b] = g.qubits()[..] {
            assert!(heavy_hex(1).unwrap().are_coupled(a, b));
        }
    }
    let u = dense_unitary(&circ);
    let mut phase = None;
    for _ in 0..4 {
        let psi = random_state(&mut r, 4);
        let want = &u * CMat::from_column_slice(16, 1, &psi);
        let got = run(&t.circuit, &state(t.embed(&psi, &t.initial_layout))).unwrap();
        let back = unembed(got.amplitudes(), &t.final_layout);
        let ov: Complex64 = want.iter().zip(&back).map(|(a, b)| a.conj() * b).sum();
        assert!((ov.norm() - 1.0).abs() < 1e-8);
        let p = *phase.get_or_insert(ov);
        assert!((ov - p).norm() < 1e-8, "phase differs between inputs");
    }
}

#[test]
fn cz_chain_metrics() {
    let mut circ = Circuit::new(3);
    for (a, b) in [(0, 1), (1, 2), (0, 1)] {
        circ.push(Gate::Cz(a, b)).unwrap();
    }
    assert_eq!(circ.two_qubit_metrics(), (3, 3));
    assert_eq!(Circuit::new(2).two_qubit_metrics(), (0, 0));
}

// ------------------------------------------------------------------ sim

#[test]
fn statevector_run_matches_dense_product() {
    let mut r = rng(21);
    let circ = random_circuit(&mut r, 5, 60);
    let psi = random_state(&mut r, 5);
    let got = run(&circ, &state(psi.clone())).unwrap();
    let want = dense_unitary(&circ) * CMat::from_column_slice(32, 1, &psi);
    let diff = got.amplitudes().iter().zip(want.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(diff < 1e-10);
}

#[test]
fn expectation_matches_quadratic_form() {
    let mut r = rng(22);
    let (h, dense) = random_sum(&mut r, 4, 12);
    let h = h.add_scaled(c(1.0, 0.0), &h.adjoint()).unwrap();
    let dense = &dense + dense.adjoint();
    let psi = random_state(&mut r, 4);
    let v = CMat::from_column_slice(16, 1, &psi);
    let want = (v.adjoint() * dense * &v)[(0, 0)].re;
    assert!((expectation(&state(psi), &h).unwrap() - want).abs() < 1e-11);
}

#[test]
fn small_sector_ground_state() {
    let layout = ModeLayout::new(2, 1);
    let ints = toy_integrals(layout, 2);
    let h = assemble(&ints).unwrap();
    let sector = Sector {
        layout,
        n_electrons: 1,
        n_protons: 1,
    };
    let got = exact_ground_state(&h, Some(&sector)).unwrap();
    let fock = fock_hamiltonian(&ints);
    let idx: Vec<usize> = (0..8).filter(|&b| sector.contains(b)).collect();
    let block = DMatrix::from_fn(idx.len(), idx.len(), |i, j| fock[(idx[i], idx[j])]);
    assert!((got.energy - sorted_eigenvalues_real(&block)[0]).abs() < 1e-12);
    assert_eq!(got.dimension, 2);
}

#[test]
fn fidelity_of_zero_and_plus() {
    let mut plus = StateVector::zero(1);
    let mut h = Circuit::new(1);
    h.push(Gate::H(0)).unwrap();
    plus.apply_circuit(&h).unwrap();
    assert!((fidelity(&StateVector::zero(1), &plus).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn reduced_density_matches_brute_force_partial_trace() {
    let mut r = rng(23);
    let psi = random_state(&mut r, 4);
    for keep in [vec![0], vec![1, 3], vec![0, 1, 2]] {
        let got = reduced_density(&state(psi.clone()), &keep).unwrap();
        assert!(max_diff(got.matrix(), &dense_partial_trace(&psi, 4, &keep)) < 1e-11);
    }
}

#[test]
fn orbital_rdm_matches_ladder_matrices() {
    let layout = ModeLayout::new(3, 2);
    let mut r = rng(24);
    let raw = random_state(&mut r, 5);
    let sector = Sector {
        layout,
        n_electrons: 2,
        n_protons: 1,
    };
    let amps: Vec<Complex64> =
        raw.iter().enumerate().map(|(b, &z)| if sector.contains(b) { z } else { c(0.0, 0.0) }).collect();
    let psi = StateVector::normalized(amps).unwrap();
    let v = CMat::from_column_slice(32, 1, psi.amplitudes());
    for (species, offset, m) in [(protonpipe::fermion::Species::Electron, 0, 3), (protonpipe::fermion::Species::Proton, 3, 2)] {
        let gamma = orbital_1rdm(&psi, &layout, species).unwrap();
        for p in 0..m {
            for q in 0..m {
                let op = to_c(&(creator(offset + p, 5) * annihilator(offset + q, 5)));
                let want = (v.adjoint() * op * &v)[(0, 0)];
                assert!((gamma[(p, q)] - want).norm() < 1e-12);
            }
        }
    }
}

// ---------------------------------------------------------------- adapt

#[test]
fn pool_gradients_match_finite_differences() {
    let layout = ModeLayout::new(2, 2);
    let h = assemble(&toy_integrals(layout, 6)).unwrap();
    let pool = excitation_pool(&layout, &[0], &[0]).unwrap();
    let gens = fermionic_generators(&pool, &layout).unwrap();
    let reference = layout.occupation_mask(&[0], &[0]).unwrap() as usize;
    let psi = StateVector::basis(4, reference);
    let screen = gradient_screen(&CompiledOperator::new(&h), psi.amplitudes(), &gens);
    let hd = h.to_dense().unwrap();
    let v = CMat::from_column_slice(16, 1, psi.amplitudes());
    for (g, got) in gens.iter().zip(&screen) {
        let mut herm = CMat::zeros(16, 16);
        for &(k, a) in &g.terms {
            herm += pauli_matrix(&k.to_letters(4)) * c(a, 0.0);
        }
        let energy = |t: f64| {
            let w = expm_i(&herm, t) * &v;
            (w.adjoint() * &hd * &w)[(0, 0)].re
        };
        let step = 1e-5;
        let fd = (energy(step) - energy(-step)) / (2.0 * step);
        assert!((fd.abs() - got).abs() < 1e-6, "{}: {fd} vs {got}", g.label);
    }
}

#[test]
fn single_rotation_reaches_the_two_mode_ground_state() {
    let layout = ModeLayout::new(2, 1);
    let mut ints = NeoIntegrals::zeros(layout);
    ints.h1e = DMatrix::from_row_slice(2, 2, &[-0.4, 0.2, 0.2, 0.3]);
    ints.v1p[(0, 0)] = 0.1;
    let h = assemble(&ints).unwrap();
    let exact = 0.1 + sorted_eigenvalues_real(&ints.h1e)[0];
    let pool = excitation_pool(&layout, &[0], &[0]).unwrap();
    let gens = fermionic_generators(&pool, &layout).unwrap();
    let reference = layout.occupation_mask(&[0], &[0]).unwrap();
    let s = adapt_vqe(&h, &gens, reference, &AdaptOptions::new(1e-12, Some(exact))).unwrap();
    assert_eq!(s.selected.len(), 1);
    assert!((s.energy() - exact).abs() < 1e-9, "{} vs {exact}", s.energy());
}

#[test]
fn adapt_on_the_four_mode_toy_meets_threshold() {
    let layout = ModeLayout::new(2, 2);
    let h = assemble(&toy_integrals(layout, 13)).unwrap();
    let sector = Sector {
        layout,
        n_electrons: 1,
        n_protons: 1,
    };
    let exact = exact_ground_state(&h, Some(&sector)).unwrap().energy;
    let gens = fermionic_generators(&excitation_pool(&layout, &[0], &[0]).unwrap(), &layout).unwrap();
    let reference = layout.occupation_mask(&[0], &[0]).unwrap();
    let s = adapt_vqe(&h, &gens, reference, &AdaptOptions::new(1e-3, Some(exact))).unwrap();
    assert!(s.energy() - exact < 1e-3);
    assert!(s.energy() >= exact - 1e-10);
}

// ------------------------------------------------------------------ aqc

#[test]
fn bell_state_needs_one_block() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = state(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]);
    let res = compile(&bell, &AqcConfig::new(1.0 - 1e-10, CouplingMap::line(2), 0)).unwrap();
    assert_eq!(res.blocks.len(), 1);
    assert!(res.cost < 1e-9);
    let prepared = run(&res.circuit, &StateVector::zero(2)).unwrap();
    assert!(fidelity(&prepared, &bell).unwrap() > 1.0 - 1e-9);
}

#[test]
fn pair_selection_finds_the_entangled_pair() {
    let n = 4;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut target = vec![c(0.0, 0.0); 16];
    target[0] = c(h, 0.0);
    target[0b1100] = c(h, 0.0);
    let current = StateVector::zero(n).into_amplitudes();
    let map = CouplingMap::line(n);
    // best one-block fidelity from a product state: weight of the target on
    // the untouched qubits' current values
    let best = |a: usize, b: usize| -> f64 {
        let mask = (1 << a) | (1 << b);
        target.iter().enumerate().filter(|(i, _)| i & !mask == 0).map(|(_, z)| z.norm_sqr()).sum()
    };
    let oracle = map.edges().max_by(|x, y| best(x.0, x.1).total_cmp(&best(y.0, y.1))).unwrap();
    assert_eq!(oracle, (2, 3));
    let choice = select_pair(&current, &target, &map, 1).unwrap();
    assert_eq!(choice.pair, [2, 3]);
    assert!((choice.score - 0.5).abs() < 1e-6);
}

#[test]
fn infidelity_gradient_matches_finite_differences() {
    let mut r = rng(31);
    let n = 3;
    let mut a = Ansatz::new(n);
    let mut letters = Vec::new();
    for _ in 0..8 {
        let mut l = random_letters(&mut r, n);
        if l.chars().all(|ch| ch == 'I') {
            l = "XYZ".into();
        }
        let p = a.add_param();
        let scale = r.random_range(0.5..2.0);
        a.push(PauliKey::parse(&l).unwrap(), p, scale);
        letters.push((l, scale));
    }
    let target = random_state(&mut r, n);
    let theta: Vec<f64> = (0..a.n_params).map(|_| r.random_range(-1.0..1.0)).collect();
    let zero = StateVector::zero(n).into_amplitudes();
    let t = CMat::from_column_slice(8, 1, &target);
    let cost = |th: &[f64]| {
        let mut v = CMat::from_column_slice(8, 1, &zero);
        for (k, (l, s)) in letters.iter().enumerate() {
            let phi = s * th[k] / 2.0;
            v = (CMat::identity(8, 8) * c(phi.cos(), 0.0) - pauli_matrix(l) * c(0.0, phi.sin())) * v;
        }
        1.0 - (t.adjoint() * v)[(0, 0)].norm_sqr()
    };
    let (got_cost, grad) = a.infidelity_and_gradient(&target, &zero, &theta);
    assert!((got_cost - cost(&theta)).abs() < 1e-12);
    for k in 0..theta.len() {
        let (mut up, mut dn) = (theta.clone(), theta.clone());
        up[k] += 1e-5;
        dn[k] -= 1e-5;
        let fd = (cost(&up) - cost(&dn)) / 2e-5;
        assert!((fd - grad[k]).abs() < 1e-7, "param {k}: {fd} vs {}", grad[k]);
    }
}

// ---------------------------------------------------------------- noise

#[test]
fn depolarized_x_flip() {
    let e = 0.01;
    let nm = NoiseModel::depolarizing(1, e, 0.0).unwrap();
    let p = depolarizing_parameter(e, &[QubitNoise::IDEAL], 0.0);
    let mut circ = Circuit::new(1);
    circ.push(Gate::X(0)).unwrap();
    let got = noisy_expectation(&circ, &sum(1, &[(1.0, "Z")]), &nm, Shots::Exact).unwrap();
    let x = pauli_matrix("X");
    let rho0 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let rho = (&x * rho0 * &x) * c(1.0 - p, 0.0) + CMat::identity(2, 2) * c(p / 2.0, 0.0);
    let want = (pauli_matrix("Z") * rho).trace().re;
    assert!((got - want).abs() < 1e-12);
    assert!((got + (1.0 - p)).abs() < 1e-12);
}

#[test]
fn readout_error_on_zero() {
    let cal = r#"{"qubits": [{"readout_p01": 0.03, "readout_p10": 0.05}]}"#;
    let nm = NoiseModel::from_json(cal).unwrap();
    let got = noisy_expectation(&Circuit::new(1), &sum(1, &[(1.0, "Z")]), &nm, Shots::Exact).unwrap();
    assert!((got - (1.0 - 2.0 * 0.03)).abs() < 1e-12);
}

#[test]
fn density_matrix_agrees_with_statevector_gate_by_gate() {
    let gates = [
        Gate::Rx(0, 0.7),
        Gate::Ry(1, -1.1),
        Gate::Rz(2, 0.4),
        Gate::H(1),
        Gate::X(2),
        Gate::Sx(0),
        Gate::Cz(0, 2),
        Gate::Cx(1, 0),
        Gate::Swap(2, 1),
    ];
    let nm = NoiseModel::noiseless(3);
    let mut circ = Circuit::new(3);
    for g in gates {
        circ.push(g).unwrap();
        let rho = evolve(&circ, &nm).unwrap();
        let psi = run(&circ, &StateVector::zero(3)).unwrap();
        for idx in 1..64usize {
            let l: String = (0..3).map(|q| ['I', 'X', 'Y', 'Z'][idx >> (2 * q) & 3]).collect();
            let key = PauliKey::parse(&l).unwrap();
            let want = expectation(&psi, &sum(3, &[(1.0, &l)])).unwrap();
            assert!((rho.pauli_expectation(key) - want).abs() < 1e-12, "{l} after {} gates", circ.len());
        }
    }
}

#[test]
fn doubling_ten_two_qubit_gates() {
    let mut r = rng(41);
    let mut circ = Circuit::new(3);
    for _ in 0..10 {
        let a = r.random_range(0..3);
        circ.push(Gate::Cx(a, (a + 1) % 3)).unwrap();
        circ.push(Gate::Ry(a, r.random_range(-1.0..1.0))).unwrap();
    }
    let folded = fold(&circ, 2.0, 3).unwrap();
    assert!((18..=22).contains(&folded.count_two_qubit()));
    assert!(max_diff(&dense_unitary(&folded), &dense_unitary(&circ)) < 1e-10);
}

// ------------------------------------------------------------------ zne

fn planted(r: &mut rand_chacha::ChaCha8Rng, f: impl Fn(f64) -> f64, sigma: f64, reps: usize) -> ZneDataset {
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut d = ZneDataset::new();
    for l in [1.0, 2.0, 3.0, 4.0, 5.0] {
        for _ in 0..reps {
            d.push(l, f(l) + noise.sample(r)).unwrap();
        }
    }
    d
}

#[test]
fn fit_first_barrier_from_planted_lines() {
    let mut r = rng(51);
    let left = planted(&mut r, |l| 0.010 + 0.004 * l, 1e-4, 16);
    let middle = planted(&mut r, |l| 0.034 + 0.005 * l, 1e-4, 16);
    let est = barrier_fit_first(&left, &middle, &FitOptions::default()).unwrap();
    assert!((est.delta - 0.024).abs() < 3.0 * est.sigma.max(1e-5), "{} ± {}", est.delta, est.sigma);
}

/// Left and middle share a per-replicate offset, as repeated runs on the
/// same device would.
fn correlated_pair(r: &mut rand_chacha::ChaCha8Rng) -> (ZneDataset, ZneDataset) {
    let common = Normal::new(0.0, 2e-3).unwrap();
    let own = Normal::new(0.0, 2e-4).unwrap();
    let (mut left, mut middle) = (ZneDataset::new(), ZneDataset::new());
    for l in [1.0, 2.0, 3.0] {
        for _ in 0..12 {
            let s = common.sample(r);
            left.push(l, 0.010 + 0.003 * l + s + own.sample(r)).unwrap();
            middle.push(l, 0.034 + 0.004 * l + s + own.sample(r)).unwrap();
        }
    }
    (left, middle)
}

#[test]
fn difference_first_covers_the_planted_barrier() {
    let mut r = rng(52);
    let trials = 100;
    let mut covered = 0;
    let mut tighter = 0;
    for _ in 0..trials {
        let (left, middle) = correlated_pair(&mut r);
        let opts = FitOptions {
            degrees: vec![1],
            ..FitOptions::default()
        };
        let df = barrier_diff_first(&left, &middle, &opts).unwrap();
        let ff = barrier_fit_first(&left, &middle, &opts).unwrap();
        if (df.delta - 0.024).abs() <= df.sigma {
            covered += 1;
        }
        if df.sigma <= ff.sigma {
            tighter += 1;
        }
    }
    assert!(covered >= 60, "covered {covered}/{trials}");
    assert_eq!(tighter, trials);
}

// ------------------------------------------------------------- analysis

#[test]
fn rate_ratio_at_one_thermal_unit() {
    let k_b: f64 = 8.617333262e-5 / 27.211386245988;
    let got = rate_constant_ratio(0.380e-3, 120.0).unwrap();
    assert!((got - (-0.380e-3 / (k_b * 120.0)).exp()).abs() < 1e-9);
    assert!((got - (-1.0f64).exp()).abs() < 1e-4);
}

#[test]
fn entropy_of_a_random_two_qubit_state() {
    let mut r = rng(61);
    let psi = random_state(&mut r, 2);
    let rho = dense_partial_trace(&psi, 2, &[0]);
    let got = entanglement_entropy(&rho).unwrap();
    assert!((got - entropy_oracle(&rho)).abs() < 1e-10);
    // pure bipartite state: both halves carry the same entropy
    assert!((got - entropy_oracle(&dense_partial_trace(&psi, 2, &[1]))).abs() < 1e-10);
}

#[test]
fn density_is_nonnegative_and_matches_the_double_sum() {
    let mut r = rng(62);
    let grid = OrbitalGrid::gaussians(&[[0.0, 0.0, 0.0], [0.6, 0.0, 0.0], [0.0, 0.5, 0.2]], 0.4, 2.0, 9).unwrap();
    let b = CMat::from_fn(3, 3, |_, _| c(r.random_range(-1.0..1.0), 0.0));
    let gamma = &b * b.transpose();
    let d = proton_density(&gamma, &grid).unwrap();
    assert!(d.rho.iter().all(|&v| v >= -1e-12));
    for _ in 0..10 {
        let i = r.random_range(0..grid.points.len());
        let phi = &grid.amplitudes[i];
        let mut want = 0.0;
        for p in 0..3 {
            for q in 0..3 {
                want += gamma[(p, q)].re * phi[p] * phi[q];
            }
        }
        assert!((d.rho[i] - want).abs() < 1e-12);
    }
}
