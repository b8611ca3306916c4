//! Independent dense oracles shared by the integration tests.
//!
//! Nothing here goes through the library's own sparse kernels: Pauli strings
//! are Kronecker products, fermionic operators are explicit Fock matrices and
//! circuits are products of embedded gate matrices.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use protonpipe::circuit::{Circuit, GateMatrix};
use protonpipe::hamiltonian::NeoIntegrals;
use protonpipe::pauli::{PauliKey, PauliSum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn letter_matrix(l: char) -> CMat {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match l {
        'I' => CMat::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => CMat::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => CMat::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("bad letter {l}"),
    }
}

/// Kronecker product with the first letter on qubit 0 (least significant bit).
pub fn pauli_matrix(letters: &str) -> CMat {
    letters
        .chars()
        .fold(CMat::identity(1, 1), |acc, l| letter_matrix(l).kronecker(&acc))
}

pub fn random_letters(r: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| ['I', 'X', 'Y', 'Z'][r.random_range(0..4)]).collect()
}

/// Random sum together with its dense matrix built term by term.
pub fn random_sum(r: &mut ChaCha8Rng, n: usize, terms: usize) -> (PauliSum, CMat) {
    let mut s = PauliSum::zero(n);
    let mut m = CMat::zeros(1 << n, 1 << n);
    for _ in 0..terms {
        let l = random_letters(r, n);
        let coeff = c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        s.add_term(PauliKey::parse(&l).unwrap(), coeff);
        m += pauli_matrix(&l) * coeff;
    }
    (s, m)
}

/// `a_p` on `n` modes: `a_p|…1_p…⟩ = (−1)^{Σ_{q<p} n_q} |…0_p…⟩`.
pub fn annihilator(p: usize, n: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        if b >> p & 1 == 1 {
            let sign = if (b & ((1 << p) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[(b ^ (1 << p), b)] = sign;
        }
    }
    m
}

pub fn creator(p: usize, n: usize) -> DMatrix<f64> {
    annihilator(p, n).transpose()
}

pub fn to_c(m: &DMatrix<f64>) -> CMat {
    m.map(|v| c(v, 0.0))
}

/// Hamiltonian of `ints` built directly from Fock-space ladder matrices.
pub fn fock_hamiltonian(ints: &NeoIntegrals) -> DMatrix<f64> {
    let ne = ints.layout.n_electron;
    let np = ints.layout.n_proton;
    let n = ne + np;
    let a: Vec<_> = (0..n).map(|p| annihilator(p, n)).collect();
    let ad: Vec<_> = a.iter().map(|m| m.transpose()).collect();
    let dim = 1usize << n;
    let mut h = DMatrix::identity(dim, dim) * ints.e_core;
    for p in 0..ne {
        for q in 0..ne {
            h += &ad[p] * &a[q] * ints.h1e[(p, q)];
        }
    }
    for p in 0..ne {
        for q in 0..ne {
            for r in 0..ne {
                for s in 0..ne {
                    let v = ints.eri.get(p, q, r, s);
                    if v != 0.0 {
                        h += &ad[p] * &ad[q] * &a[s] * &a[r] * (0.5 * v);
                    }
                }
            }
        }
    }
    for pp in 0..np {
        for qq in 0..np {
            h += &ad[ne + pp] * &a[ne + qq] * ints.v1p[(pp, qq)];
        }
    }
    for pp in 0..np {
        for qq in 0..np {
            for p in 0..ne {
                for q in 0..ne {
                    let v = ints.g_ep.get(pp, qq, p, q);
                    if v != 0.0 {
                        h += &ad[ne + pp] * &ad[p] * &a[q] * &a[ne + qq] * v;
                    }
                }
            }
        }
    }
    h
}

/// Number operator over `modes` as a dense Fock matrix.
pub fn fock_number(modes: std::ops::Range<usize>, n: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            modes.clone().filter(|&q| i >> q & 1 == 1).count() as f64
        } else {
            0.0
        }
    })
}

pub fn sorted_eigenvalues_real(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn sorted_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Full-register matrix of one gate, by explicit index embedding.
fn embedded(g: &GateMatrix, n: usize) -> CMat {
    let dim = 1usize << n;
    let mut m = CMat::zeros(dim, dim);
    match g {
        GateMatrix::One(q, u) => {
            for col in 0..dim {
                for row in 0..dim {
                    if (row ^ col) & !(1 << q) == 0 {
                        m[(row, col)] = u[2 * (row >> q & 1) + (col >> q & 1)];
                    }
                }
            }
        }
        GateMatrix::Two([a, b], u) => {
            let mask = (1 << a) | (1 << b);
            let sub = |x: usize| 2 * (x >> a & 1) + (x >> b & 1);
            for col in 0..dim {
                for row in 0..dim {
                    if (row ^ col) & !mask == 0 {
                        m[(row, col)] = u[4 * sub(row) + sub(col)];
                    }
                }
            }
        }
    }
    m
}

/// Product of embedded gate matrices, including the global phase.
pub fn dense_unitary(circ: &Circuit) -> CMat {
    let n = circ.n_qubits();
    let mut u = CMat::identity(1 << n, 1 << n);
    for g in circ.gates() {
        if let Some(m) = g.matrix() {
            u = embedded(&m, n) * u;
        }
    }
    u * Complex64::from_polar(1.0, circ.global_phase())
}

/// Whether `a = e^{iφ} b` for some φ.
pub fn equal_up_to_phase(a: &CMat, b: &CMat, tol: f64) -> bool {
    let (i, j) = (0..a.nrows())
        .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
        .max_by(|x, y| b[*x].norm().total_cmp(&b[*y].norm()))
        .unwrap();
    let phase = a[(i, j)] / b[(i, j)];
    (phase.norm() - 1.0).abs() < tol && max_diff(a, &(b * phase)) < tol
}

pub fn random_state(r: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..1usize << n)
        .map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Haar-ish unitary from the QR factor of a complex Gaussian-like matrix.
pub fn random_unitary(r: &mut ChaCha8Rng, dim: usize) -> CMat {
    let m = CMat::from_fn(dim, dim, |_, _| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    m.qr().q()
}

/// Partial trace by brute force over all index pairs of `|ψ⟩⟨ψ|`.
pub fn dense_partial_trace(psi: &[Complex64], n: usize, keep: &[usize]) -> CMat {
    let env_mask: usize = (0..n).filter(|q| !keep.contains(q)).map(|q| 1 << q).sum();
    let reduce = |b: usize| keep.iter().enumerate().map(|(i, &q)| (b >> q & 1) << i).sum::<usize>();
    let k = keep.len();
    let mut rho = CMat::zeros(1 << k, 1 << k);
    for i in 0..psi.len() {
        for j in 0..psi.len() {
            if i & env_mask == j & env_mask {
                rho[(reduce(i), reduce(j))] += psi[i] * psi[j].conj();
            }
        }
    }
    rho
}

/// `−Σ λ ln λ` from a dense eigen-decomposition.
pub fn entropy_oracle(rho: &CMat) -> f64 {
    sorted_eigenvalues(rho)
        .into_iter()
        .filter(|&l| l > 1e-14)
        .map(|l| -l * l.ln())
        .sum()
}
