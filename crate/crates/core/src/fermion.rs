//! Two-species (electron, proton) second-quantized operators, the
//! excitation pool built from them, and their Jordan-Wigner images.
//!
//! Modes are numbered globally with all electronic spin orbitals first and
//! protonic spin orbitals after them; the JW qubit of a mode is its global
//! index, so Z-strings run across the species boundary.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliKey, PauliSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Electron,
    Proton,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLayout {
    pub n_electron: usize,
    pub n_proton: usize,
}

impl ModeLayout {
    pub fn new(n_electron: usize, n_proton: usize) -> Self {
        ModeLayout { n_electron, n_proton }
    }

    pub fn n_modes(&self) -> usize {
        self.n_electron + self.n_proton
    }

    pub fn count(&self, species: Species) -> usize {
        match species {
            Species::Electron => self.n_electron,
            Species::Proton => self.n_proton,
        }
    }

    /// Global mode (= qubit) index of a species-local index.
    pub fn mode(&self, species: Species, local: usize) -> usize {
        match species {
            Species::Electron => local,
            Species::Proton => self.n_electron + local,
        }
    }

    pub fn modes(&self, species: Species) -> std::ops::Range<usize> {
        match species {
            Species::Electron => 0..self.n_electron,
            Species::Proton => self.n_electron..self.n_modes(),
        }
    }

    pub fn species_of(&self, mode: usize) -> Option<Species> {
        if mode < self.n_electron {
            Some(Species::Electron)
        } else if mode < self.n_modes() {
            Some(Species::Proton)
        } else {
            None
        }
    }

    /// Bitmask of the determinant with the given species-local occupations.
    pub fn occupation_mask(&self, occ_e: &[usize], occ_p: &[usize]) -> Result<u64> {
        let mut mask = 0u64;
        for (species, occ) in [(Species::Electron, occ_e), (Species::Proton, occ_p)] {
            for &i in occ {
                if i >= self.count(species) {
                    return Err(Error::Config(format!(
                        "{species:?} occupation index {i} out of range (have {})",
                        self.count(species)
                    )));
                }
                mask |= 1 << self.mode(species, i);
            }
        }
        Ok(mask)
    }
}

/// One creation (`a†`) or annihilation (`a`) operator on a global mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ladder {
    pub mode: usize,
    pub creation: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Ladder { mode, creation: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Ladder { mode, creation: false }
    }

    fn adjoint(self) -> Self {
        Ladder {
            mode: self.mode,
            creation: !self.creation,
        }
    }
}

/// Coefficient times a raw product of ladder operators (leftmost acts last).
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    pub coeff: Complex64,
    pub ops: Vec<Ladder>,
}

impl FermionTerm {
    pub fn new(coeff: Complex64, ops: Vec<Ladder>) -> Self {
        FermionTerm { coeff, ops }
    }

    pub fn real(coeff: f64, ops: Vec<Ladder>) -> Self {
        FermionTerm::new(Complex64::new(coeff, 0.0), ops)
    }

    pub fn adjoint(&self) -> Self {
        FermionTerm {
            coeff: self.coeff.conj(),
            ops: self.ops.iter().rev().map(|l| l.adjoint()).collect(),
        }
    }
}

impl fmt::Display for FermionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}{:+.6}i)", self.coeff.re, self.coeff.im)?;
        for l in &self.ops {
            write!(f, " {}{}", l.mode, if l.creation { "^" } else { "" })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FermionOperator {
    pub terms: Vec<FermionTerm>,
}

impl FermionOperator {
    pub fn new(terms: Vec<FermionTerm>) -> Self {
        FermionOperator { terms }
    }

    pub fn adjoint(&self) -> Self {
        FermionOperator {
            terms: self.terms.iter().map(FermionTerm::adjoint).collect(),
        }
    }

    /// `T − T†` for a single ladder product `T` with unit coefficient.
    pub fn anti_hermitian(ops: Vec<Ladder>) -> Self {
        let t = FermionTerm::real(1.0, ops);
        let mut h = t.adjoint();
        h.coeff = -h.coeff;
        FermionOperator { terms: vec![t, h] }
    }
}

fn ladder_image(l: Ladder, n_qubits: usize) -> PauliSum {
    // a_j = ½(X_j + iY_j) Z_{<j},  a†_j = ½(X_j − iY_j) Z_{<j}
    let mut tail = PauliKey::IDENTITY;
    for q in 0..l.mode {
        tail.set(q, Pauli::Z);
    }
    let mut kx = tail;
    kx.set(l.mode, Pauli::X);
    let mut ky = tail;
    ky.set(l.mode, Pauli::Y);
    let sign = if l.creation { -1.0 } else { 1.0 };
    let mut s = PauliSum::zero(n_qubits);
    s.add_term(kx, Complex64::new(0.5, 0.0));
    s.add_term(ky, Complex64::new(0.0, 0.5 * sign));
    s
}

/// Jordan-Wigner image of one ladder product on the layout's register.
pub fn jordan_wigner(term: &FermionTerm, layout: &ModeLayout) -> Result<PauliSum> {
    let n = layout.n_modes();
    let mut acc = PauliSum::scaled_identity(n, term.coeff);
    for l in &term.ops {
        if l.mode >= n {
            return Err(Error::Dimension(format!("mode {} outside {n}-mode layout", l.mode)));
        }
        acc = acc.multiply(&ladder_image(*l, n))?;
    }
    Ok(acc)
}

pub fn jordan_wigner_operator(op: &FermionOperator, layout: &ModeLayout) -> Result<PauliSum> {
    let mut acc = PauliSum::zero(layout.n_modes());
    for t in &op.terms {
        acc = acc.add_scaled(Complex64::new(1.0, 0.0), &jordan_wigner(t, layout)?)?;
    }
    Ok(acc)
}

/// `N_species = Σ a†a` over the species' modes, as a qubit operator.
pub fn number_operator(layout: &ModeLayout, species: Species) -> PauliSum {
    let n = layout.n_modes();
    let mut s = PauliSum::zero(n);
    for q in layout.modes(species) {
        s.add_term(PauliKey::IDENTITY, Complex64::new(0.5, 0.0));
        s.add_term(PauliKey::single(q, Pauli::Z), Complex64::new(-0.5, 0.0));
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationKind {
    ElectronSingle,
    ProtonSingle,
    ElectronDouble,
    ProtonDouble,
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoolElement {
    pub kind: ExcitationKind,
    /// Human-readable global-mode label, e.g. `e2^0` or `e2^p5^p4e0`.
    pub label: String,
    pub operator: FermionOperator,
}

#[derive(Clone, Debug, Default)]
pub struct ExcitationPool {
    pub elements: Vec<PoolElement>,
    /// Blocks that could not be formed (no occupied or no virtual modes).
    pub omitted: Vec<ExcitationKind>,
}

impl ExcitationPool {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// JW images of every element, in pool order.
    pub fn qubit_images(&self, layout: &ModeLayout) -> Result<Vec<PauliSum>> {
        self.elements
            .iter()
            .map(|e| jordan_wigner_operator(&e.operator, layout))
            .collect()
    }
}

fn split_occupied(n: usize, occ: &[usize], species: Species) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut seen = HashSet::new();
    for &i in occ {
        if i >= n {
            return Err(Error::Config(format!(
                "{species:?} occupied index {i} out of range (have {n} modes)"
            )));
        }
        if !seen.insert(i) {
            return Err(Error::Config(format!("{species:?} occupied index {i} repeated")));
        }
    }
    let mut o: Vec<usize> = occ.to_vec();
    o.sort_unstable();
    let v = (0..n).filter(|i| !seen.contains(i)).collect();
    Ok((o, v))
}

fn pairs(v: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (k, &a) in v.iter().enumerate() {
        for &b in &v[k + 1..] {
            out.push((a, b));
        }
    }
    out
}

/// All spin-orbital singles and doubles (electronic, protonic and mixed
/// electron–proton) as anti-Hermitian `T − T†` generators.
///
/// `occ_e` and `occ_p` are species-local indices. Blocks without enough
/// occupied or virtual modes are skipped and listed in `omitted`.
pub fn excitation_pool(layout: &ModeLayout, occ_e: &[usize], occ_p: &[usize]) -> Result<ExcitationPool> {
    let (oe, ve) = split_occupied(layout.n_electron, occ_e, Species::Electron)?;
    let (op, vp) = split_occupied(layout.n_proton, occ_p, Species::Proton)?;
    let e = |i: usize| layout.mode(Species::Electron, i);
    let p = |i: usize| layout.mode(Species::Proton, i);
    let cr = Ladder::create;
    let an = Ladder::annihilate;

    let mut pool = ExcitationPool::default();
    let omit = |pool: &mut ExcitationPool, kind| {
        log::warn!("excitation block {kind:?} omitted: no occupied or virtual modes for it");
        pool.omitted.push(kind);
    };

    for (kind, occ, virt, map, tag) in [
        (ExcitationKind::ElectronSingle, &oe, &ve, &e as &dyn Fn(usize) -> usize, "e"),
        (ExcitationKind::ProtonSingle, &op, &vp, &p as &dyn Fn(usize) -> usize, "p"),
    ] {
        if occ.is_empty() || virt.is_empty() {
            omit(&mut pool, kind);
            continue;
        }
        for &i in occ.iter() {
            for &a in virt.iter() {
                pool.elements.push(PoolElement {
                    kind,
                    label: format!("{tag}{}^{tag}{}", map(a), map(i)),
                    operator: FermionOperator::anti_hermitian(vec![cr(map(a)), an(map(i))]),
                });
            }
        }
    }

    for (kind, occ, virt, map, tag) in [
        (ExcitationKind::ElectronDouble, &oe, &ve, &e as &dyn Fn(usize) -> usize, "e"),
        (ExcitationKind::ProtonDouble, &op, &vp, &p as &dyn Fn(usize) -> usize, "p"),
    ] {
        if occ.len() < 2 || virt.len() < 2 {
            omit(&mut pool, kind);
            continue;
        }
        for (i, j) in pairs(occ) {
            for (a, b) in pairs(virt) {
                let (i, j, a, b) = (map(i), map(j), map(a), map(b));
                pool.elements.push(PoolElement {
                    kind,
                    label: format!("{tag}{a}^{tag}{b}^{tag}{j}{tag}{i}"),
                    operator: FermionOperator::anti_hermitian(vec![cr(a), cr(b), an(j), an(i)]),
                });
            }
        }
    }

    if oe.is_empty() || ve.is_empty() || op.is_empty() || vp.is_empty() {
        omit(&mut pool, ExcitationKind::Mixed);
    } else {
        for &i in &oe {
            for &ip in &op {
                for &a in &ve {
                    for &ap in &vp {
                        let (i, ip, a, ap) = (e(i), p(ip), e(a), p(ap));
                        pool.elements.push(PoolElement {
                            kind: ExcitationKind::Mixed,
                            label: format!("e{a}^p{ap}^p{ip}e{i}"),
                            operator: FermionOperator::anti_hermitian(vec![cr(a), cr(ap), an(ip), an(i)]),
                        });
                    }
                }
            }
        }
    }
    Ok(pool)
}

/// Splits JW-mapped pool elements into individual Pauli-string generators.
///
/// Only strings with an odd number of `Y` letters survive (their `iP` is the
/// anti-Hermitian generator); first occurrence order is preserved.
pub fn qubit_pool(images: &[PauliSum]) -> Vec<PauliKey> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for img in images {
        for key in img.keys() {
            if key.y_count() % 2 == 1 && seen.insert(key) {
                out.push(key);
            }
        }
    }
    out
}
