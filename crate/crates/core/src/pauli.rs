//! Sparse algebra over weighted Pauli strings.
//!
//! A Pauli string on `n` qubits is stored in the symplectic `(x, z)` form:
//! bit `q` of `x` (resp. `z`) is set when the letter on qubit `q` contains an
//! `X` (resp. `Z`) factor, so `Y` sets both. The operator represented by a
//! [`PauliKey`] is the Hermitian letter product `P = i^{|x & z|} X^x Z^z`,
//! which makes every key a product of ordinary `I/X/Y/Z` matrices.
//!
//! Basis-state convention: computational index `b = Σ_q bit_q 2^q`, so qubit 0
//! is the least significant bit and a dense matrix is `P_{n-1} ⊗ … ⊗ P_0`.
//! Text forms list letters with qubit 0 first (`"XZI"` is `X₀ Z₁`).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register a [`PauliKey`] can address.
pub const MAX_QUBITS: usize = 64;
/// Coefficients below this magnitude are dropped from a [`PauliSum`].
pub const DEFAULT_PRUNE_TOL: f64 = 1e-12;
/// Largest register `to_dense` will expand without an explicit limit.
pub const DEFAULT_DENSE_LIMIT: usize = 14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | 'i' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A power of `i`: one of `+1, +i, -1, -i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn conj(self) -> Self {
        Phase::from_power(-(self.0 as i64))
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Phase-free letter pattern; the canonical key of a [`PauliSum`] term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PauliKey {
    x: u64,
    z: u64,
}

impl PauliKey {
    pub const IDENTITY: PauliKey = PauliKey { x: 0, z: 0 };

    pub fn from_masks(x: u64, z: u64) -> Self {
        PauliKey { x, z }
    }

    pub fn from_letters(letters: &[Pauli]) -> Result<Self> {
        if letters.len() > MAX_QUBITS {
            return Err(Error::Resource(format!(
                "{} qubits exceeds the {MAX_QUBITS}-qubit Pauli register",
                letters.len()
            )));
        }
        let mut key = PauliKey::IDENTITY;
        for (q, &p) in letters.iter().enumerate() {
            key.set(q, p);
        }
        Ok(key)
    }

    pub fn single(q: usize, p: Pauli) -> Self {
        let mut key = PauliKey::IDENTITY;
        key.set(q, p);
        key
    }

    pub fn x_mask(self) -> u64 {
        self.x
    }

    pub fn z_mask(self) -> u64 {
        self.z
    }

    pub fn letter(self, q: usize) -> Pauli {
        Pauli::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        let (x, z) = p.bits();
        let bit = 1u64 << q;
        self.x = (self.x & !bit) | if x { bit } else { 0 };
        self.z = (self.z & !bit) | if z { bit } else { 0 };
    }

    pub fn is_identity(self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn y_count(self) -> usize {
        (self.x & self.z).count_ones() as usize
    }

    /// Highest qubit index touched plus one (0 for the identity).
    pub fn span(self) -> usize {
        64 - (self.x | self.z).leading_zeros() as usize
    }

    pub fn support(self) -> Vec<usize> {
        let mut m = self.x | self.z;
        let mut out = Vec::with_capacity(m.count_ones() as usize);
        while m != 0 {
            out.push(m.trailing_zeros() as usize);
            m &= m - 1;
        }
        out
    }

    pub fn is_diagonal(self) -> bool {
        self.x == 0
    }

    pub fn commutes_with(self, other: PauliKey) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// `self · other = phase · result`.
    pub fn mul(self, other: PauliKey) -> (Phase, PauliKey) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // P = i^{|xz|} X^x Z^z and Z^z1 X^x2 = (-1)^{|z1 & x2|} X^x2 Z^z1.
        let k = (self.x & self.z).count_ones() as i64 + (other.x & other.z).count_ones() as i64
            + 2 * (self.z & other.x).count_ones() as i64
            - (x & z).count_ones() as i64;
        (Phase::from_power(k), PauliKey { x, z })
    }

    /// `P|b⟩ = phase · |b'⟩`.
    #[inline]
    pub fn apply_to_basis(self, b: usize) -> (Complex64, usize) {
        let k = (self.x & self.z).count_ones() + 2 * ((b as u64) & self.z).count_ones();
        (Phase::from_power(k as i64).to_complex(), b ^ self.x as usize)
    }

    pub fn to_letters(self, n_qubits: usize) -> String {
        (0..n_qubits).map(|q| self.letter(q).as_char()).collect()
    }

    pub fn parse(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::Argument(format!("bad Pauli letter `{c}` in `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        PauliKey::from_letters(&letters)
    }

    fn letter_code(self, q: usize) -> u8 {
        match self.letter(q) {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }
}

impl Ord for PauliKey {
    /// Lexicographic over letters starting at qubit 0, with `I < X < Y < Z`.
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = (self.x ^ other.x) | (self.z ^ other.z);
        if diff == 0 {
            return Ordering::Equal;
        }
        let q = diff.trailing_zeros() as usize;
        self.letter_code(q).cmp(&other.letter_code(q))
    }
}

impl PartialOrd for PauliKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A Pauli string with an explicit phase from `{±1, ±i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    key: PauliKey,
    phase: Phase,
}

impl PauliString {
    pub fn new(n_qubits: usize, key: PauliKey, phase: Phase) -> Result<Self> {
        check_register(n_qubits)?;
        if key.span() > n_qubits {
            return Err(Error::Dimension(format!(
                "Pauli string touches qubit {} on a {n_qubits}-qubit register",
                key.span() - 1
            )));
        }
        Ok(PauliString { n_qubits, key, phase })
    }

    pub fn identity(n_qubits: usize) -> Self {
        PauliString {
            n_qubits,
            key: PauliKey::IDENTITY,
            phase: Phase::ONE,
        }
    }

    pub fn from_letters(letters: &[Pauli]) -> Result<Self> {
        let key = PauliKey::from_letters(letters)?;
        Ok(PauliString {
            n_qubits: letters.len(),
            key,
            phase: Phase::ONE,
        })
    }

    /// Parses `"XZI"` (qubit 0 first), optionally prefixed by `+`, `-`, `i`, `+i` or `-i`.
    pub fn parse(s: &str) -> Result<Self> {
        let (phase, rest) = if let Some(r) = s.strip_prefix("-i") {
            (Phase::MINUS_I, r)
        } else if let Some(r) = s.strip_prefix("+i") {
            (Phase::I, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (Phase::I, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (Phase::ONE, r)
        } else {
            (Phase::ONE, s)
        };
        let key = PauliKey::parse(rest)?;
        Ok(PauliString {
            n_qubits: rest.chars().count(),
            key,
            phase,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn key(&self) -> PauliKey {
        self.key
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n_qubits).map(|q| self.key.letter(q)).collect()
    }

    pub fn weight(&self) -> usize {
        self.key.weight()
    }

    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        same_register(self.n_qubits, other.n_qubits)?;
        let (ph, key) = self.key.mul(other.key);
        Ok(PauliString {
            n_qubits: self.n_qubits,
            key,
            phase: self.phase * other.phase * ph,
        })
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        self.key.commutes_with(other.key)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.power() {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.key.to_letters(self.n_qubits))
    }
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_QUBITS {
        Err(Error::Resource(format!(
            "{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit Pauli register"
        )))
    } else {
        Ok(())
    }
}

fn same_register(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{a}-qubit operand combined with {b}-qubit operand")))
    }
}

/// Weighted sum of Pauli strings in canonical form: one entry per letter
/// pattern, phases folded into coefficients, tiny coefficients pruned.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliKey, Complex64>,
    prune_tol: f64,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "register too large for PauliSum");
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
            prune_tol: DEFAULT_PRUNE_TOL,
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::scaled_identity(n_qubits, ONE)
    }

    pub fn scaled_identity(n_qubits: usize, c: Complex64) -> Self {
        let mut s = Self::zero(n_qubits);
        s.add_term(PauliKey::IDENTITY, c);
        s
    }

    pub fn from_string(p: &PauliString, coeff: Complex64) -> Self {
        let mut s = Self::zero(p.n_qubits);
        s.add_term(p.key, coeff * p.phase.to_complex());
        s
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Complex64, PauliString)>,
    {
        check_register(n_qubits)?;
        let mut s = Self::zero(n_qubits);
        for (c, p) in terms {
            same_register(n_qubits, p.n_qubits)?;
            s.add_term(p.key, c * p.phase.to_complex());
        }
        Ok(s)
    }

    /// Builds a sum from `(coefficient, letters)` pairs such as `(0.5, "XXIZ")`.
    pub fn from_labels<S: AsRef<str>>(n_qubits: usize, terms: &[(Complex64, S)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|(c, s)| PauliString::parse(s.as_ref()).map(|p| (*c, p)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n_qubits, parsed)
    }

    pub fn with_prune_tol(mut self, tol: f64) -> Self {
        self.prune_tol = tol;
        self.canonicalize();
        self
    }

    pub fn prune_tol(&self) -> f64 {
        self.prune_tol
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PauliKey, Complex64)> + '_ {
        self.terms.iter().map(|(k, c)| (*k, *c))
    }

    pub fn keys(&self) -> impl Iterator<Item = PauliKey> + '_ {
        self.terms.keys().copied()
    }

    pub fn coefficient(&self, key: PauliKey) -> Complex64 {
        self.terms.get(&key).copied().unwrap_or(ZERO)
    }

    /// Accumulates `c · key`, dropping the entry if it cancels below the prune tolerance.
    pub fn add_term(&mut self, key: PauliKey, c: Complex64) {
        debug_assert!(key.span() <= self.n_qubits);
        let entry = self.terms.entry(key).or_insert(ZERO);
        *entry += c;
        if entry.norm() < self.prune_tol {
            self.terms.remove(&key);
        }
    }

    /// Re-applies the prune tolerance. Idempotent.
    pub fn canonicalize(&mut self) {
        let tol = self.prune_tol;
        self.terms.retain(|_, c| c.norm() >= tol);
    }

    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        same_register(self.n_qubits, other.n_qubits)?;
        let mut acc: BTreeMap<PauliKey, Complex64> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let (ph, k) = ka.mul(*kb);
                *acc.entry(k).or_insert(ZERO) += ca * cb * ph.to_complex();
            }
        }
        let mut out = PauliSum {
            n_qubits: self.n_qubits,
            terms: acc,
            prune_tol: self.prune_tol,
        };
        out.canonicalize();
        Ok(out)
    }

    /// `self + c · other`.
    pub fn add_scaled(&self, c: Complex64, other: &PauliSum) -> Result<PauliSum> {
        same_register(self.n_qubits, other.n_qubits)?;
        let mut out = self.clone();
        for (k, v) in &other.terms {
            *out.terms.entry(*k).or_insert(ZERO) += c * v;
        }
        out.canonicalize();
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> PauliSum {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out.canonicalize();
        out
    }

    /// Every key is Hermitian, so the adjoint conjugates coefficients.
    pub fn adjoint(&self) -> PauliSum {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = v.conj();
        }
        out
    }

    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        same_register(self.n_qubits, other.n_qubits)?;
        let mut acc: BTreeMap<PauliKey, Complex64> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                if ka.commutes_with(*kb) {
                    continue;
                }
                let (ph, k) = ka.mul(*kb);
                *acc.entry(k).or_insert(ZERO) += 2.0 * ca * cb * ph.to_complex();
            }
        }
        let mut out = PauliSum {
            n_qubits: self.n_qubits,
            terms: acc,
            prune_tol: self.prune_tol,
        };
        out.canonicalize();
        Ok(out)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.re.abs() <= tol)
    }

    pub fn max_abs_diff(&self, other: &PauliSum) -> f64 {
        let mut m: f64 = 0.0;
        for (k, c) in &self.terms {
            m = m.max((c - other.coefficient(*k)).norm());
        }
        for (k, c) in &other.terms {
            if !self.terms.contains_key(k) {
                m = m.max(c.norm());
            }
        }
        m
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_with_limit(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_dense_with_limit(&self, limit: usize) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > limit {
            return Err(Error::Resource(format!(
                "dense expansion of {} qubits exceeds limit {limit}",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (k, c) in &self.terms {
            for col in 0..dim {
                let (ph, row) = k.apply_to_basis(col);
                m[(row, col)] += c * ph;
            }
        }
        Ok(m)
    }

    /// `out = self · amps` on a full statevector.
    pub fn apply(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; amps.len()];
        self.apply_into(amps, &mut out);
        out
    }

    pub fn apply_into(&self, amps: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(amps.len(), 1usize << self.n_qubits);
        out.iter_mut().for_each(|v| *v = ZERO);
        for (k, c) in &self.terms {
            for (b, a) in amps.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let (ph, b2) = k.apply_to_basis(b);
                out[b2] += c * ph * a;
            }
        }
    }

    /// One term per line: `coeff_re coeff_im LETTERS`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, c) in &self.terms {
            s.push_str(&format!("{:?} {:?} {}\n", c.re, c.im, k.to_letters(self.n_qubits)));
        }
        s
    }

    /// Inverse of [`PauliSum::to_text`]. Blank lines and `#` comments are ignored.
    /// An empty text yields the zero operator on `n_qubits` (required for that case).
    pub fn from_text(text: &str, n_qubits: Option<usize>) -> Result<PauliSum> {
        let mut out: Option<PauliSum> = n_qubits.map(PauliSum::zero);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Parse {
                path: "<operator>".into(),
                line: i + 1,
                msg,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(bad(format!("expected `re im LETTERS`, got `{line}`")));
            }
            let re: f64 = fields[0].parse().map_err(|e| bad(format!("{e}")))?;
            let im: f64 = fields[1].parse().map_err(|e| bad(format!("{e}")))?;
            let key = PauliKey::parse(fields[2]).map_err(|e| bad(e.to_string()))?;
            let n = fields[2].len();
            let sum = out.get_or_insert_with(|| PauliSum::zero(n));
            if sum.n_qubits != n {
                return Err(bad(format!("{n} letters on a {}-qubit operator", sum.n_qubits)));
            }
            sum.add_term(key, Complex64::new(re, im));
        }
        out.ok_or_else(|| Error::Argument("empty operator text with unknown register size".into()))
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i) {}", c.re, c.im, k.to_letters(self.n_qubits))?;
        }
        Ok(())
    }
}
