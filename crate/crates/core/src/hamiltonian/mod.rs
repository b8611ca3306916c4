//! Electron–proton Hamiltonians: integral storage, qubit-operator assembly,
//! Left/Middle/Right interpolation and orbital-space utilities.

mod fcidump;
mod orbitals;
pub mod toy;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner, FermionTerm, Ladder, ModeLayout, Species};
use crate::pauli::PauliSum;

pub use fcidump::{parse_integrals, parse_integrals_str, write_integrals, write_integrals_string, TwoBodyConvention};
pub use orbitals::{fno_select, lowdin, lowdin_with_threshold, FnoSelection, LOWDIN_THRESHOLD};

/// Dense rank-4 tensor of reals, row-major in its four indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Tensor4 {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dims[1] + j) * self.dims[2] + k) * self.dims[3] + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.offset(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let o = self.offset(i, j, k, l);
        self.data[o] = v;
    }

    pub fn indexed(&self) -> impl Iterator<Item = ([usize; 4], f64)> + '_ {
        let [_, d1, d2, d3] = self.dims;
        self.data.iter().enumerate().map(move |(o, &v)| {
            let l = o % d3;
            let k = (o / d3) % d2;
            let j = (o / (d3 * d2)) % d1;
            let i = o / (d3 * d2 * d1);
            ([i, j, k, l], v)
        })
    }
}

/// Second-quantized coefficients of the electron–proton Hamiltonian (Ha).
///
/// * `h1e[p,q]` — electronic one-body, `Σ h_pq a†_p a_q`
/// * `eri[p,q,r,s]` — electronic two-body in physicists' order `⟨pq|rs⟩`,
///   entering as `½ Σ ⟨pq|rs⟩ a†_p a†_q a_s a_r`
/// * `v1p[P,Q]` — protonic one-body including the kinetic term
/// * `g_ep[P,Q,p,q]` — electron–proton coupling, `Σ g_PQpq a†_P a†_p a_q a_Q`
/// * `e_core` — scalar shift
///
/// Electronic indices are species-local electron modes, protonic indices are
/// species-local proton modes.
#[derive(Clone, Debug, PartialEq)]
pub struct NeoIntegrals {
    pub layout: ModeLayout,
    pub h1e: DMatrix<f64>,
    pub eri: Tensor4,
    pub v1p: DMatrix<f64>,
    pub g_ep: Tensor4,
    pub e_core: f64,
}

impl NeoIntegrals {
    pub fn zeros(layout: ModeLayout) -> Self {
        let (ne, np) = (layout.n_electron, layout.n_proton);
        NeoIntegrals {
            layout,
            h1e: DMatrix::zeros(ne, ne),
            eri: Tensor4::zeros([ne, ne, ne, ne]),
            v1p: DMatrix::zeros(np, np),
            g_ep: Tensor4::zeros([np, np, ne, ne]),
            e_core: 0.0,
        }
    }

    /// Chemists' `(pq|rs) = ⟨pr|qs⟩`, the coefficient of `½ a†_p a†_r a_s a_q`.
    pub fn eri_chem(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.eri.get(p, r, q, s)
    }

    pub fn set_eri_chem(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        self.eri.set(p, r, q, s, v);
    }

    /// Checks Hermiticity of the one-body blocks and the permutational
    /// symmetries every real two-body tensor must satisfy.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let (ne, np) = (self.layout.n_electron, self.layout.n_proton);
        check_symmetric(&self.h1e, "E1", tol)?;
        check_symmetric(&self.v1p, "P1", tol)?;
        for p in 0..ne {
            for q in 0..ne {
                for r in 0..ne {
                    for s in 0..ne {
                        let v = self.eri_chem(p, q, r, s);
                        for w in [self.eri_chem(q, p, s, r), self.eri_chem(r, s, p, q)] {
                            if (v - w).abs() > tol {
                                return Err(Error::Symmetry {
                                    block: "E2",
                                    indices: vec![p + 1, q + 1, r + 1, s + 1],
                                    a: v,
                                    b: w,
                                });
                            }
                        }
                    }
                }
            }
        }
        for a in 0..np {
            for b in 0..np {
                for p in 0..ne {
                    for q in 0..ne {
                        let v = self.g_ep.get(a, b, p, q);
                        let w = self.g_ep.get(b, a, q, p);
                        if (v - w).abs() > tol {
                            return Err(Error::Symmetry {
                                block: "EP",
                                indices: vec![a + 1, b + 1, p + 1, q + 1],
                                a: v,
                                b: w,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Re-expresses one species' integrals in a new orbital basis spanned by
    /// the (real) columns of `rotation` (old modes × new modes).
    pub fn rotate(&self, species: Species, rotation: &DMatrix<f64>) -> Result<NeoIntegrals> {
        let n_old = self.layout.count(species);
        if rotation.nrows() != n_old {
            return Err(Error::Dimension(format!(
                "rotation has {} rows for {n_old} {species:?} modes",
                rotation.nrows()
            )));
        }
        let n_new = rotation.ncols();
        let u = rotation;
        let layout = match species {
            Species::Electron => ModeLayout::new(n_new, self.layout.n_proton),
            Species::Proton => ModeLayout::new(self.layout.n_electron, n_new),
        };
        let mut out = NeoIntegrals::zeros(layout);
        out.e_core = self.e_core;
        match species {
            Species::Electron => {
                out.h1e = u.transpose() * &self.h1e * u;
                out.v1p = self.v1p.clone();
                out.eri = transform4(&self.eri, [Some(u), Some(u), Some(u), Some(u)]);
                out.g_ep = transform4(&self.g_ep, [None, None, Some(u), Some(u)]);
            }
            Species::Proton => {
                out.h1e = self.h1e.clone();
                out.eri = self.eri.clone();
                out.v1p = u.transpose() * &self.v1p * u;
                out.g_ep = transform4(&self.g_ep, [Some(u), Some(u), None, None]);
            }
        }
        Ok(out)
    }
}

fn check_symmetric(m: &DMatrix<f64>, block: &'static str, tol: f64) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(Error::Symmetry {
                    block,
                    indices: vec![i + 1, j + 1],
                    a: m[(i, j)],
                    b: m[(j, i)],
                });
            }
        }
    }
    Ok(())
}

/// Applies `u` (old × new) to each selected index of `t`, one index at a time.
fn transform4(t: &Tensor4, rot: [Option<&DMatrix<f64>>; 4]) -> Tensor4 {
    let mut cur = t.clone();
    for (axis, u) in rot.iter().enumerate() {
        let Some(u) = u else { continue };
        let mut dims = cur.dims;
        dims[axis] = u.ncols();
        let mut next = Tensor4::zeros(dims);
        for (idx, v) in cur.indexed() {
            if v == 0.0 {
                continue;
            }
            for new in 0..u.ncols() {
                let w = u[(idx[axis], new)];
                if w == 0.0 {
                    continue;
                }
                let mut j = idx;
                j[axis] = new;
                let o = next.offset(j[0], j[1], j[2], j[3]);
                next.data[o] += v * w;
            }
        }
        cur = next;
    }
    cur
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Jordan-Wigner image of the full electron–proton Hamiltonian plus `e_core`.
pub fn assemble(ints: &NeoIntegrals) -> Result<PauliSum> {
    let layout = ints.layout;
    let n = layout.n_modes();
    let (ne, np) = (layout.n_electron, layout.n_proton);
    let e = |i: usize| layout.mode(Species::Electron, i);
    let pm = |i: usize| layout.mode(Species::Proton, i);
    let (cr, an) = (Ladder::create, Ladder::annihilate);

    let mut h = PauliSum::scaled_identity(n, real(ints.e_core));
    let add = |h: &mut PauliSum, coeff: f64, ops: Vec<Ladder>| -> Result<()> {
        let img = jordan_wigner(&FermionTerm::real(coeff, ops), &layout)?;
        *h = h.add_scaled(real(1.0), &img)?;
        Ok(())
    };

    for p in 0..ne {
        for q in 0..ne {
            let v = ints.h1e[(p, q)];
            if v != 0.0 {
                add(&mut h, v, vec![cr(e(p)), an(e(q))])?;
            }
        }
    }
    // ½ Σ (pq|rs) a†_p a†_r a_s a_q
    for p in 0..ne {
        for q in 0..ne {
            for r in 0..ne {
                if r == p {
                    continue;
                }
                for s in 0..ne {
                    if s == q {
                        continue;
                    }
                    let v = ints.eri_chem(p, q, r, s);
                    if v != 0.0 {
                        add(&mut h, 0.5 * v, vec![cr(e(p)), cr(e(r)), an(e(s)), an(e(q))])?;
                    }
                }
            }
        }
    }
    for a in 0..np {
        for b in 0..np {
            let v = ints.v1p[(a, b)];
            if v != 0.0 {
                add(&mut h, v, vec![cr(pm(a)), an(pm(b))])?;
            }
        }
    }
    for a in 0..np {
        for b in 0..np {
            for p in 0..ne {
                for q in 0..ne {
                    let v = ints.g_ep.get(a, b, p, q);
                    if v != 0.0 {
                        add(&mut h, v, vec![cr(pm(a)), cr(e(p)), an(e(q)), an(pm(b))])?;
                    }
                }
            }
        }
    }
    // coefficients of a Hermitian operator are real up to rounding
    let mut out = PauliSum::zero(n);
    for (k, c) in h.iter() {
        out.add_term(k, real(c.re));
    }
    Ok(out)
}

/// Convex Left/Middle/Right mixing weights, normalized to sum to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmrWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// The seven proton positions along the Left → Middle → Right path.
pub const TRAJECTORY_LABELS: [&str; 7] = ["300", "210", "120", "030", "021", "012", "003"];

impl LmrWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let s = alpha + beta + gamma;
        if alpha < 0.0 || beta < 0.0 || gamma < 0.0 || !(s > 0.0) {
            return Err(Error::Argument(format!(
                "LMR weights must be non-negative with positive sum, got ({alpha}, {beta}, {gamma})"
            )));
        }
        Ok(LmrWeights {
            alpha: alpha / s,
            beta: beta / s,
            gamma: gamma / s,
        })
    }

    /// `"210"` → (2/3, 1/3, 0).
    pub fn from_label(label: &str) -> Result<Self> {
        let digits: Vec<u32> = label
            .chars()
            .map(|c| c.to_digit(10).ok_or_else(|| Error::Argument(format!("bad LMR label `{label}`"))))
            .collect::<Result<_>>()?;
        if digits.len() != 3 {
            return Err(Error::Argument(format!("LMR label `{label}` must have three digits")));
        }
        Self::new(digits[0] as f64, digits[1] as f64, digits[2] as f64)
    }
}

/// `α H_L + β H_M + γ H_R`.
pub fn interpolate(left: &PauliSum, middle: &PauliSum, right: &PauliSum, w: LmrWeights) -> Result<PauliSum> {
    PauliSum::zero(left.n_qubits())
        .add_scaled(real(w.alpha), left)?
        .add_scaled(real(w.beta), middle)?
        .add_scaled(real(w.gamma), right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::number_operator;

    #[test]
    fn one_mode_identity() {
        let mut ints = NeoIntegrals::zeros(ModeLayout::new(1, 0));
        ints.h1e[(0, 0)] = -1.0;
        let h = assemble(&ints).unwrap();
        let want = PauliSum::from_labels(1, &[(real(-0.5), "I"), (real(0.5), "Z")]).unwrap();
        assert!(h.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn core_shift_is_identity() {
        let layout = ModeLayout::new(2, 2);
        let base = toy::toy_integrals(layout, 3);
        let mut shifted = base.clone();
        shifted.e_core = 265.0;
        let mut zeroed = base;
        zeroed.e_core = 0.0;
        let diff = assemble(&shifted).unwrap().add_scaled(real(-1.0), &assemble(&zeroed).unwrap()).unwrap();
        assert!(diff.max_abs_diff(&PauliSum::scaled_identity(4, real(265.0))) < 1e-12);
    }

    #[test]
    fn assembled_operator_is_hermitian_and_conserves_numbers() {
        let layout = ModeLayout::new(4, 2);
        let h = assemble(&toy::toy_integrals(layout, 11)).unwrap();
        assert!(h.is_hermitian(1e-12));
        for s in [Species::Electron, Species::Proton] {
            assert!(h.commutator(&number_operator(&layout, s)).unwrap().is_empty());
        }
    }

    #[test]
    fn weights_from_labels() {
        let w = LmrWeights::from_label("210").unwrap();
        assert_eq!((w.alpha, w.beta, w.gamma), (2.0 / 3.0, 1.0 / 3.0, 0.0));
        assert!(LmrWeights::from_label("000").is_err());
        assert!(LmrWeights::from_label("2a0").is_err());
        assert!(LmrWeights::new(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let l = PauliSum::from_labels(2, &[(real(1.0), "ZI"), (real(0.3), "XX")]).unwrap();
        let m = PauliSum::from_labels(2, &[(real(2.0), "IZ")]).unwrap();
        let r = PauliSum::from_labels(2, &[(real(-1.0), "ZZ")]).unwrap();
        let pure_left = interpolate(&l, &m, &r, LmrWeights::new(3.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(pure_left, l);
        let h210 = interpolate(&l, &m, &r, LmrWeights::from_label("210").unwrap()).unwrap();
        let want = l.scale(real(2.0 / 3.0)).add_scaled(real(1.0 / 3.0), &m).unwrap();
        assert_eq!(h210, want);
        let mean = interpolate(&l, &m, &r, LmrWeights::from_label("111").unwrap()).unwrap();
        let want = l.add_scaled(real(1.0), &m).unwrap().add_scaled(real(1.0), &r).unwrap().scale(real(1.0 / 3.0));
        assert!(mean.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn rotation_by_identity_is_noop_and_preserves_spectrum() {
        let layout = ModeLayout::new(2, 2);
        let ints = toy::toy_integrals(layout, 5);
        let same = ints.rotate(Species::Electron, &DMatrix::identity(2, 2)).unwrap();
        assert!((same.h1e.clone() - &ints.h1e).camax() < 1e-15);
        // a rotation mixing the two same-spin... here modes 0/1 differ in spin, so rotate protons
        let (c, s) = (0.6f64, 0.8f64);
        let u = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let rot = ints.rotate(Species::Proton, &u).unwrap();
        let spec = |h: &PauliSum| {
            let mut e: Vec<f64> = h.to_dense().unwrap().symmetric_eigen().eigenvalues.iter().copied().collect();
            e.sort_by(f64::total_cmp);
            e
        };
        let (a, b) = (spec(&assemble(&ints).unwrap()), spec(&assemble(&rot).unwrap()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
