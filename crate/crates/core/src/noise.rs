//! Calibration-derived noise: density-matrix execution with depolarizing and
//! thermal-relaxation channels after every gate, readout confusion, and
//! random local folding of two-qubit gates.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CouplingMap, Gate, GateMatrix, Mat2, Mat4};
use crate::error::{Error, Result};
use crate::pauli::{PauliKey, PauliSum};
use crate::sim::{apply_1q, apply_2q};

/// Largest register simulated as a density matrix.
pub const MAX_DENSITY_QUBITS: usize = 10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationQubit {
    /// Absent or `null` means no relaxation.
    #[serde(default)]
    pub t1_us: Option<f64>,
    #[serde(default)]
    pub t2_us: Option<f64>,
    /// `p(read 1 | prepared 0)`
    #[serde(default)]
    pub readout_p01: f64,
    /// `p(read 0 | prepared 1)`
    #[serde(default)]
    pub readout_p10: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationGate {
    pub kind: String,
    pub qubits: Vec<usize>,
    /// `null` marks an entry without calibration data.
    #[serde(default)]
    pub error: Option<f64>,
    #[serde(default)]
    pub duration_ns: Option<f64>,
}

/// On-disk calibration snapshot.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub qubits: Vec<CalibrationQubit>,
    #[serde(default)]
    pub gates: Vec<CalibrationGate>,
    #[serde(default)]
    pub eplg18: Option<f64>,
    #[serde(default)]
    pub timestamp: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitNoise {
    /// Seconds; `f64::INFINITY` disables amplitude damping.
    pub t1: f64,
    pub t2: f64,
    pub readout_p01: f64,
    pub readout_p10: f64,
}

impl QubitNoise {
    pub const IDEAL: QubitNoise = QubitNoise {
        t1: f64::INFINITY,
        t2: f64::INFINITY,
        readout_p01: 0.0,
        readout_p10: 0.0,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateNoise {
    /// Average gate infidelity.
    pub error: f64,
    /// Seconds.
    pub duration: f64,
}

impl GateNoise {
    pub const IDEAL: GateNoise = GateNoise {
        error: 0.0,
        duration: 0.0,
    };
}

type GateKey = (String, Vec<usize>);

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub qubits: Vec<QubitNoise>,
    /// Keyed by lower-case kind and qubits (two-qubit keys sorted).
    gates: BTreeMap<String, GateNoise>,
    /// Calibration entries present without data.
    pub missing: Vec<(String, Vec<usize>)>,
    pub eplg: Option<f64>,
    pub timestamp: Option<String>,
}

fn gate_key(kind: &str, qubits: &[usize]) -> String {
    let mut q = qubits.to_vec();
    if q.len() == 2 {
        q.sort_unstable();
    }
    let qs: Vec<String> = q.iter().map(|v| v.to_string()).collect();
    format!("{}:{}", kind.to_ascii_lowercase(), qs.join(","))
}

fn parse_key(key: &str) -> GateKey {
    let (kind, qs) = key.split_once(':').unwrap_or((key, ""));
    let qubits = qs.split(',').filter(|s| !s.is_empty()).filter_map(|s| s.parse().ok()).collect();
    (kind.to_string(), qubits)
}

fn check_rate(what: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(Error::Validation(format!("{what} = {v} is not in [0, 1]")));
    }
    Ok(())
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

impl NoiseModel {
    pub fn noiseless(n_qubits: usize) -> Self {
        NoiseModel {
            qubits: vec![QubitNoise::IDEAL; n_qubits],
            ..Default::default()
        }
    }

    /// Uniform gate errors with zero durations and no readout error.
    pub fn depolarizing(n_qubits: usize, error_1q: f64, error_2q: f64) -> Result<Self> {
        check_rate("1q error", error_1q)?;
        check_rate("2q error", error_2q)?;
        let mut m = Self::noiseless(n_qubits);
        m.gates.insert("*1".into(), GateNoise { error: error_1q, duration: 0.0 });
        m.gates.insert("*2".into(), GateNoise { error: error_2q, duration: 0.0 });
        Ok(m)
    }

    pub fn from_calibration(cal: &Calibration) -> Result<Self> {
        let mut qubits = Vec::with_capacity(cal.qubits.len());
        for (i, q) in cal.qubits.iter().enumerate() {
            let t1 = q.t1_us.map_or(f64::INFINITY, |v| v * 1e-6);
            let t2 = q.t2_us.map_or(f64::INFINITY, |v| v * 1e-6);
            if t1 <= 0.0 || t2 <= 0.0 || t1.is_nan() || t2.is_nan() {
                return Err(Error::Validation(format!("qubit {i}: T1 and T2 must be positive")));
            }
            if t2 > 2.0 * t1 * (1.0 + 1e-12) {
                return Err(Error::Validation(format!(
                    "qubit {i}: T2 = {} us exceeds 2·T1 = {} us",
                    t2 * 1e6,
                    2.0 * t1 * 1e6
                )));
            }
            check_rate(&format!("qubit {i} readout_p01"), q.readout_p01)?;
            check_rate(&format!("qubit {i} readout_p10"), q.readout_p10)?;
            qubits.push(QubitNoise {
                t1,
                t2,
                readout_p01: q.readout_p01,
                readout_p10: q.readout_p10,
            });
        }
        let n = qubits.len();
        let mut gates = BTreeMap::new();
        let mut missing = Vec::new();
        for g in &cal.gates {
            if g.qubits.is_empty() || g.qubits.len() > 2 || g.qubits.iter().any(|&q| q >= n) {
                return Err(Error::Validation(format!(
                    "gate `{}` on {:?}: qubits must be 1 or 2 indices below {n}",
                    g.kind, g.qubits
                )));
            }
            if g.qubits.len() == 2 && g.qubits[0] == g.qubits[1] {
                return Err(Error::Validation(format!("gate `{}` repeats qubit {}", g.kind, g.qubits[0])));
            }
            let Some(error) = g.error else {
                missing.push((g.kind.to_ascii_lowercase(), g.qubits.clone()));
                continue;
            };
            check_rate(&format!("gate {} {:?} error", g.kind, g.qubits), error)?;
            let duration = g.duration_ns.unwrap_or(0.0) * 1e-9;
            if duration < 0.0 || duration.is_nan() {
                return Err(Error::Validation(format!("gate {} {:?}: negative duration", g.kind, g.qubits)));
            }
            gates.insert(gate_key(&g.kind, &g.qubits), GateNoise { error, duration });
        }
        if !missing.is_empty() {
            log::warn!("calibration has {} gate entries without data: {:?}", missing.len(), missing);
        }
        if let Some(e) = cal.eplg18 {
            check_rate("eplg18", e)?;
        }
        Ok(NoiseModel {
            qubits,
            gates,
            missing,
            eplg: cal.eplg18,
            timestamp: cal.timestamp.clone(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cal: Calibration = serde_json::from_str(text)?;
        Self::from_calibration(&cal)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Calibrated entries as `(kind, qubits, noise)`.
    pub fn gate_entries(&self) -> Vec<(String, Vec<usize>, GateNoise)> {
        self.gates
            .iter()
            .map(|(k, v)| {
                let (kind, q) = parse_key(k);
                (kind, q, *v)
            })
            .collect()
    }

    /// Coupling-map edges with neither a `cz` entry nor a uniform default.
    pub fn missing_edges(&self, map: &CouplingMap) -> Vec<(usize, usize)> {
        if self.gates.contains_key("*2") {
            return Vec::new();
        }
        map.edges().filter(|&(a, b)| !self.gates.contains_key(&gate_key("cz", &[a, b]))).collect()
    }

    fn median_error(&self, arity: usize) -> Option<GateNoise> {
        let entries: Vec<GateNoise> = self
            .gate_entries()
            .into_iter()
            .filter(|(k, q, _)| q.len() == arity && !k.starts_with(['*', '~']))
            .map(|(_, _, g)| g)
            .collect();
        Some(GateNoise {
            error: median(entries.iter().map(|g| g.error).collect())?,
            duration: median(entries.iter().map(|g| g.duration).collect())?,
        })
    }

    /// Noise attached to `gate`. `RZ` is virtual and noiseless; other
    /// single-qubit gates fall back to the qubit's `sx` entry; two-qubit gates
    /// use the pair's `cz` entry. Gates with no entry get the median of
    /// their arity.
    pub fn gate_noise(&self, gate: &Gate) -> GateNoise {
        let qs = gate.qubits();
        match gate {
            Gate::Rz(..) | Gate::Measure(_) => return GateNoise::IDEAL,
            _ => {}
        }
        let kind = gate.name().to_ascii_lowercase();
        let fallback_kind = if qs.len() == 1 { "sx" } else { "cz" };
        let uniform = if qs.len() == 1 { "*1" } else { "*2" };
        self.gates
            .get(&gate_key(&kind, &qs))
            .or_else(|| self.gates.get(&gate_key(fallback_kind, &qs)))
            .or_else(|| self.gates.get(uniform))
            .or_else(|| self.gates.get(&format!("~{}", qs.len())))
            .copied()
            .or_else(|| self.median_error(qs.len()))
            .unwrap_or(GateNoise::IDEAL)
    }

    /// Model on the physical qubits `physical`, relabelled `0..k` in that order.
    pub fn restrict(&self, physical: &[usize]) -> Result<NoiseModel> {
        if let Some(&bad) = physical.iter().find(|&&p| p >= self.n_qubits()) {
            return Err(Error::Dimension(format!("qubit {bad} not in a {}-qubit noise model", self.n_qubits())));
        }
        let pos: HashMap<usize, usize> = physical.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut gates = BTreeMap::new();
        for (k, v) in &self.gates {
            if k.starts_with(['*', '~']) {
                gates.insert(k.clone(), *v);
                continue;
            }
            let (kind, q) = parse_key(k);
            if let Some(mapped) = q.iter().map(|p| pos.get(p).copied()).collect::<Option<Vec<_>>>() {
                gates.insert(gate_key(&kind, &mapped), *v);
            }
        }
        // medians are taken over the full device so fallbacks do not change
        for arity in [1, 2] {
            let key = if arity == 1 { "*1" } else { "*2" };
            if !gates.contains_key(key) {
                if let Some(m) = self.median_error(arity) {
                    gates.insert(format!("~{arity}"), m);
                }
            }
        }
        Ok(NoiseModel {
            qubits: physical.iter().map(|&p| self.qubits[p]).collect(),
            gates,
            missing: self.missing.clone(),
            eplg: self.eplg,
            timestamp: self.timestamp.clone(),
        })
    }
}

/// Process fidelity of thermal relaxation for `duration` on one qubit.
fn relaxation_process_fidelity(q: &QubitNoise, duration: f64) -> f64 {
    let e1 = (-duration / q.t1).exp();
    let e2 = (-duration / q.t2).exp();
    (1.0 + 2.0 * e2 + e1) / 4.0
}

/// Depolarizing probability `p` (in `ρ → (1−p)ρ + p·I/d`) such that
/// depolarizing followed by relaxation has average gate infidelity `error`.
/// Returns 0 when relaxation alone already exceeds it.
pub fn depolarizing_parameter(error: f64, qubits: &[QubitNoise], duration: f64) -> f64 {
    if error <= 0.0 {
        return 0.0;
    }
    let d = (1usize << qubits.len()) as f64;
    let f_relax: f64 = qubits.iter().map(|q| relaxation_process_fidelity(q, duration)).product();
    let f_target = 1.0 - error * (d + 1.0) / d;
    let denom = d * d * f_relax - 1.0;
    if denom <= 1e-15 {
        return 0.0;
    }
    let keep = (d * d * f_target - 1.0) / denom;
    if keep > 1.0 {
        log::warn!("relaxation alone exceeds gate error {error:.3e}; depolarizing disabled for this gate");
        return 0.0;
    }
    (1.0 - keep).clamp(0.0, d * d / (d * d - 1.0))
}

/// Density matrix stored as a `2n`-qubit vector: `ρ[r, c]` at `r | c << n`.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<Complex64>,
}

fn conj2(m: &Mat2) -> Mat2 {
    m.map(|c| c.conj())
}

fn conj4(m: &Mat4) -> Mat4 {
    m.map(|c| c.conj())
}

impl DensityMatrix {
    pub fn zero(n: usize) -> Result<Self> {
        if n > MAX_DENSITY_QUBITS {
            return Err(Error::Resource(format!(
                "{n} qubits exceed the density-matrix limit of {MAX_DENSITY_QUBITS}"
            )));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); 1 << (2 * n)];
        data[0] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { n, data })
    }

    pub fn from_pure(amps: &[Complex64]) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        let mut rho = Self::zero(n)?;
        let dim = amps.len();
        for c in 0..dim {
            for r in 0..dim {
                rho.data[r | c << n] = amps[r] * amps[c].conj();
            }
        }
        Ok(rho)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r | c << self.n]
    }

    pub fn trace(&self) -> f64 {
        (0..1usize << self.n).map(|r| self.get(r, r).re).sum()
    }

    pub fn apply_unitary(&mut self, m: &GateMatrix) {
        let n = self.n;
        match m {
            GateMatrix::One(q, u) => {
                apply_1q(&mut self.data, *q, u);
                apply_1q(&mut self.data, q + n, &conj2(u));
            }
            GateMatrix::Two([a, b], u) => {
                apply_2q(&mut self.data, [*a, *b], u);
                apply_2q(&mut self.data, [a + n, b + n], &conj4(u));
            }
        }
    }

    /// `ρ → (1−p)ρ + p · Tr_Q(ρ) ⊗ I/d` on the qubits `qs`.
    pub fn depolarize(&mut self, qs: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        let n = self.n;
        let d = 1usize << qs.len();
        let spread = |k: usize| -> usize { qs.iter().enumerate().filter(|(i, _)| k >> i & 1 == 1).map(|(_, &q)| 1usize << q).sum() };
        let offsets: Vec<usize> = (0..d).map(spread).collect();
        let mask: usize = offsets[d - 1] | offsets[d - 1] << n;
        let keep = 1.0 - p;
        for base in 0..self.data.len() {
            if base & mask != 0 {
                continue;
            }
            let mut tr = Complex64::new(0.0, 0.0);
            for &o in &offsets {
                tr += self.data[base | o | o << n];
            }
            for &or in &offsets {
                for &oc in &offsets {
                    let i = base | or | oc << n;
                    self.data[i] *= keep;
                    if or == oc {
                        self.data[i] += p * tr / d as f64;
                    }
                }
            }
        }
    }

    /// Amplitude damping toward `|0⟩` and dephasing over `duration` seconds.
    pub fn relax(&mut self, q: usize, noise: &QubitNoise, duration: f64) {
        if duration <= 0.0 {
            return;
        }
        let e1 = (-duration / noise.t1).exp();
        let e2 = (-duration / noise.t2).exp();
        if e1 == 1.0 && e2 == 1.0 {
            return;
        }
        let (rb, cb) = (1usize << q, 1usize << (q + self.n));
        for base in 0..self.data.len() {
            if base & (rb | cb) != 0 {
                continue;
            }
            let (i00, i01, i10, i11) = (base, base | cb, base | rb, base | rb | cb);
            let p11 = self.data[i11];
            self.data[i00] += (1.0 - e1) * p11;
            self.data[i11] = e1 * p11;
            self.data[i01] *= e2;
            self.data[i10] *= e2;
        }
    }

    /// `Tr(ρ P)` for a phase-free Pauli string.
    pub fn pauli_expectation(&self, key: PauliKey) -> f64 {
        let n = self.n;
        let x = key.x_mask() as usize;
        (0..1usize << n)
            .map(|r| {
                let (ph, r2) = key.apply_to_basis(r);
                debug_assert_eq!(r2, r ^ x);
                (ph * self.data[r | r2 << n]).re
            })
            .sum()
    }
}

/// Runs `c` from `|0…0⟩` under `nm`: each gate is followed by depolarizing
/// on its qubits and thermal relaxation for its duration.
pub fn evolve(c: &Circuit, nm: &NoiseModel) -> Result<DensityMatrix> {
    let n = c.n_qubits();
    if nm.n_qubits() < n {
        return Err(Error::Dimension(format!(
            "{n}-qubit circuit but the noise model covers {} qubits",
            nm.n_qubits()
        )));
    }
    let mut rho = DensityMatrix::zero(n)?;
    let mut cache: HashMap<Vec<usize>, (f64, f64, String)> = HashMap::new();
    for g in c.gates() {
        let Some(m) = g.matrix() else { continue };
        rho.apply_unitary(&m);
        let qs = g.qubits();
        let gn = nm.gate_noise(g);
        if gn.error == 0.0 && gn.duration == 0.0 {
            continue;
        }
        let ck = (qs.clone(), gn.error, g.name().to_string());
        let p = match cache.get(&ck.0) {
            Some((e, p, name)) if *e == gn.error && name == g.name() => *p,
            _ => {
                let q_noise: Vec<QubitNoise> = qs.iter().map(|&q| nm.qubits[q]).collect();
                let p = depolarizing_parameter(gn.error, &q_noise, gn.duration);
                cache.insert(ck.0, (gn.error, p, ck.2));
                p
            }
        };
        rho.depolarize(&qs, p);
        for &q in &qs {
            rho.relax(q, &nm.qubits[q], gn.duration);
        }
    }
    Ok(rho)
}

/// `⟨P⟩` as read out through the per-qubit confusion: each non-identity
/// letter on qubit `q` becomes `a_q P + b_q` with `a = 1 − p01 − p10`,
/// `b = p10 − p01`.
fn readout_expectation(rho: &DensityMatrix, key: PauliKey, nm: &NoiseModel, cache: &mut HashMap<PauliKey, f64>) -> f64 {
    let support = key.support();
    let mut total = 0.0;
    for subset in 0u64..(1u64 << support.len()) {
        let mut weight = 1.0;
        let mut sub = PauliKey::IDENTITY;
        for (i, &q) in support.iter().enumerate() {
            let qn = &nm.qubits[q];
            if subset >> i & 1 == 1 {
                weight *= 1.0 - qn.readout_p01 - qn.readout_p10;
                sub.set(q, key.letter(q));
            } else {
                weight *= qn.readout_p10 - qn.readout_p01;
            }
        }
        if weight == 0.0 {
            continue;
        }
        let v = *cache.entry(sub).or_insert_with(|| rho.pauli_expectation(sub));
        total += weight * v;
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shots {
    /// Density-matrix trace with analytic readout confusion.
    Exact,
    /// Binomial sampling of every term's `±1` outcomes.
    Sampled { shots: u64, seed: u64 },
}

/// Noisy energy of `c|0…0⟩` against `h` under `nm`.
pub fn noisy_expectation(c: &Circuit, h: &PauliSum, nm: &NoiseModel, shots: Shots) -> Result<f64> {
    if h.n_qubits() != c.n_qubits() {
        return Err(Error::Dimension(format!(
            "operator on {} qubits, circuit on {}",
            h.n_qubits(),
            c.n_qubits()
        )));
    }
    if let Shots::Sampled { shots: 0, .. } = shots {
        return Err(Error::Argument("shots must be positive".into()));
    }
    let rho = evolve(c, nm)?;
    let mut cache = HashMap::new();
    let mut rng = match shots {
        Shots::Sampled { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Shots::Exact => None,
    };
    let mut energy = 0.0;
    let mut terms: Vec<(PauliKey, Complex64)> = h.iter().collect();
    terms.sort_by_key(|t| t.0);
    for (key, coeff) in terms {
        if key.is_identity() {
            energy += coeff.re;
            continue;
        }
        let e = readout_expectation(&rho, key, nm, &mut cache).clamp(-1.0, 1.0);
        let value = match (&mut rng, shots) {
            (Some(rng), Shots::Sampled { shots, .. }) => {
                let plus = Binomial::new(shots, (1.0 + e) / 2.0)
                    .map_err(|err| Error::Argument(format!("binomial sampling: {err}")))?
                    .sample(rng);
                2.0 * plus as f64 / shots as f64 - 1.0
            }
            _ => e,
        };
        energy += coeff.re * value;
    }
    Ok(energy)
}

/// Random local folding: `round((λ−1)·N/2)` folds `G → G·G†·G` of the `N`
/// two-qubit gates, spread as evenly as possible with the remainder chosen
/// at random under `seed`.
pub fn fold(c: &Circuit, lambda: f64, seed: u64) -> Result<Circuit> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(Error::Argument(format!("noise scale λ = {lambda} must be ≥ 1")));
    }
    let two_q: Vec<usize> = c.gates().iter().enumerate().filter(|(_, g)| g.is_two_qubit()).map(|(i, _)| i).collect();
    let n2 = two_q.len();
    if n2 == 0 {
        return Ok(c.clone());
    }
    let folds = ((lambda - 1.0) * n2 as f64 / 2.0).round() as usize;
    let mut count = vec![folds / n2; c.len()];
    for &i in &two_q {
        count[i] = folds / n2;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in sample(&mut rng, n2, folds % n2) {
        count[two_q[k]] += 1;
    }
    let mut out = Circuit::new(c.n_qubits());
    out.add_phase(c.global_phase());
    for (i, g) in c.gates().iter().enumerate() {
        out.push_unchecked(g.clone());
        if g.is_two_qubit() {
            let (inv, phase) = g.inverse();
            for _ in 0..count[i] {
                out.push_unchecked(inv.clone());
                out.push_unchecked(g.clone());
                out.add_phase(phase);
            }
        }
    }
    Ok(out)
}
