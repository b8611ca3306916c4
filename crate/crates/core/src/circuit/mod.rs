//! Gate-level circuit IR shared by the variational, compilation, folding and
//! noisy-execution stages.
//!
//! Two-qubit matrices (`U2` blocks) are written in the basis
//! `|q_a q_b⟩` with `q_a` the more significant bit, i.e. a block `A ⊗ B`
//! applies `A` to the first listed qubit.

mod coupling;
pub mod kak;
mod synthesis;
mod transpile;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use coupling::{heavy_hex, heavy_hex_counts, CouplingMap};
pub use synthesis::{pauli_evolution, pauli_evolution_into};
pub use transpile::{embed_amplitudes, transpile, Layout, Transpiled};

pub type Mat2 = [Complex64; 4];
pub type Mat4 = [Complex64; 16];

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    H(usize),
    X(usize),
    Sx(usize),
    Cz(usize, usize),
    /// `(control, target)`
    Cx(usize, usize),
    Swap(usize, usize),
    /// Arbitrary two-qubit unitary on `[a, b]`, row-major in the `|a b⟩` basis.
    Unitary2([usize; 2], Box<Mat4>),
    Measure(usize),
}

/// Dense matrix of a unitary gate.
pub enum GateMatrix {
    One(usize, Mat2),
    Two([usize; 2], Mat4),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) | Gate::H(q) | Gate::X(q) | Gate::Sx(q) | Gate::Measure(q) => {
                vec![q]
            }
            Gate::Cz(a, b) | Gate::Cx(a, b) | Gate::Swap(a, b) => vec![a, b],
            Gate::Unitary2([a, b], _) => vec![a, b],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cz(..) | Gate::Cx(..) | Gate::Swap(..) | Gate::Unitary2(..))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Rx(..) => "RX",
            Gate::Ry(..) => "RY",
            Gate::Rz(..) => "RZ",
            Gate::H(_) => "H",
            Gate::X(_) => "X",
            Gate::Sx(_) => "SX",
            Gate::Cz(..) => "CZ",
            Gate::Cx(..) => "CX",
            Gate::Swap(..) => "SWAP",
            Gate::Unitary2(..) => "U2",
            Gate::Measure(_) => "MEASURE",
        }
    }

    /// Same gate acting on relabelled qubits.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::Rx(q, t) => Gate::Rx(f(*q), *t),
            Gate::Ry(q, t) => Gate::Ry(f(*q), *t),
            Gate::Rz(q, t) => Gate::Rz(f(*q), *t),
            Gate::H(q) => Gate::H(f(*q)),
            Gate::X(q) => Gate::X(f(*q)),
            Gate::Sx(q) => Gate::Sx(f(*q)),
            Gate::Cz(a, b) => Gate::Cz(f(*a), f(*b)),
            Gate::Cx(a, b) => Gate::Cx(f(*a), f(*b)),
            Gate::Swap(a, b) => Gate::Swap(f(*a), f(*b)),
            Gate::Unitary2([a, b], m) => Gate::Unitary2([f(*a), f(*b)], m.clone()),
            Gate::Measure(q) => Gate::Measure(f(*q)),
        }
    }

    pub fn matrix(&self) -> Option<GateMatrix> {
        let i = Complex64::i();
        Some(match *self {
            Gate::Rx(q, t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                GateMatrix::One(q, [c.into(), -i * s, -i * s, c.into()])
            }
            Gate::Ry(q, t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                GateMatrix::One(q, [c.into(), (-s).into(), s.into(), c.into()])
            }
            Gate::Rz(q, t) => GateMatrix::One(q, [Complex64::from_polar(1.0, -t / 2.0), C0, C0, Complex64::from_polar(1.0, t / 2.0)]),
            Gate::H(q) => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                GateMatrix::One(q, [h, h, h, -h])
            }
            Gate::X(q) => GateMatrix::One(q, [C0, C1, C1, C0]),
            Gate::Sx(q) => {
                let (p, m) = (Complex64::new(0.5, 0.5), Complex64::new(0.5, -0.5));
                GateMatrix::One(q, [p, m, m, p])
            }
            Gate::Cz(a, b) => {
                let mut m = identity4();
                m[15] = -C1;
                GateMatrix::Two([a, b], m)
            }
            Gate::Cx(a, b) => {
                let mut m = [C0; 16];
                m[0] = C1;
                m[5] = C1;
                m[2 * 4 + 3] = C1;
                m[3 * 4 + 2] = C1;
                GateMatrix::Two([a, b], m)
            }
            Gate::Swap(a, b) => {
                let mut m = [C0; 16];
                m[0] = C1;
                m[4 + 2] = C1;
                m[2 * 4 + 1] = C1;
                m[15] = C1;
                GateMatrix::Two([a, b], m)
            }
            Gate::Unitary2(q, ref m) => GateMatrix::Two(q, **m),
            Gate::Measure(_) => return None,
        })
    }

    /// Inverse gate and the global phase it contributes (`SX† = e^{-iπ/4} RX(-π/2)`).
    pub fn inverse(&self) -> (Gate, f64) {
        match self {
            Gate::Rx(q, t) => (Gate::Rx(*q, -t), 0.0),
            Gate::Ry(q, t) => (Gate::Ry(*q, -t), 0.0),
            Gate::Rz(q, t) => (Gate::Rz(*q, -t), 0.0),
            Gate::Sx(q) => (Gate::Rx(*q, -std::f64::consts::FRAC_PI_2), -std::f64::consts::FRAC_PI_4),
            Gate::Unitary2(q, m) => (Gate::Unitary2(*q, Box::new(adjoint4(m))), 0.0),
            g => (g.clone(), 0.0),
        }
    }
}

pub fn identity4() -> Mat4 {
    let mut m = [C0; 16];
    for k in 0..4 {
        m[k * 5] = C1;
    }
    m
}

pub fn adjoint4(m: &Mat4) -> Mat4 {
    let mut out = [C0; 16];
    for r in 0..4 {
        for c in 0..4 {
            out[c * 4 + r] = m[r * 4 + c].conj();
        }
    }
    out
}

pub fn matmul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [C0; 16];
    for r in 0..4 {
        for c in 0..4 {
            out[r * 4 + c] = (0..4).map(|k| a[r * 4 + k] * b[k * 4 + c]).sum();
        }
    }
    out
}

pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [C0; 16];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k) * 4 + 2 * j + l] = a[2 * i + j] * b[2 * k + l];
                }
            }
        }
    }
    out
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Rx(q, t) | Gate::Ry(q, t) | Gate::Rz(q, t) => write!(f, "{} {q} {t:?}", self.name()),
            Gate::H(q) | Gate::X(q) | Gate::Sx(q) | Gate::Measure(q) => write!(f, "{} {q}", self.name()),
            Gate::Cz(a, b) | Gate::Cx(a, b) | Gate::Swap(a, b) => write!(f, "{} {a},{b}", self.name()),
            Gate::Unitary2([a, b], m) => {
                write!(f, "U2 {a},{b}")?;
                for c in m.iter() {
                    write!(f, " {:?} {:?}", c.re, c.im)?;
                }
                Ok(())
            }
        }
    }
}

/// Ordered gate list on a fixed register, with an explicit global phase so
/// that decompositions stay exactly unitary-equal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    global_phase: f64,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
            global_phase: 0.0,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    pub fn add_phase(&mut self, phi: f64) {
        self.global_phase += phi;
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let qs = gate.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::Dimension(format!(
                "{} on qubit {q} of a {}-qubit circuit",
                gate.name(),
                self.n_qubits
            )));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::Argument(format!("{} acts twice on qubit {}", gate.name(), qs[0])));
        }
        if let Gate::Unitary2(_, m) = &gate {
            let defect = matmul4(&adjoint4(m), m)
                .iter()
                .zip(identity4().iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if defect > 1e-10 {
                return Err(Error::Validation(format!("U2 block not unitary (defect {defect:e})")));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, gate: Gate) {
        debug_assert!(gate.qubits().iter().all(|&q| q < self.n_qubits));
        self.gates.push(gate);
    }

    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(Error::Dimension(format!(
                "cannot append a {}-qubit circuit to a {}-qubit one",
                other.n_qubits, self.n_qubits
            )));
        }
        self.gates.extend(other.gates.iter().cloned());
        self.global_phase += other.global_phase;
        Ok(())
    }

    /// Gates reversed and inverted; measurements are dropped.
    pub fn inverse(&self) -> Circuit {
        let mut out = Circuit::new(self.n_qubits);
        out.global_phase = -self.global_phase;
        for g in self.gates.iter().rev() {
            if matches!(g, Gate::Measure(_)) {
                continue;
            }
            let (inv, ph) = g.inverse();
            out.global_phase += ph;
            out.gates.push(inv);
        }
        out
    }

    pub fn count_two_qubit(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// `(count, depth)` of two-qubit gates; single-qubit gates and
    /// measurements do not add depth.
    pub fn two_qubit_metrics(&self) -> (usize, usize) {
        let mut level = vec![0usize; self.n_qubits];
        let mut count = 0;
        let mut depth = 0;
        for g in &self.gates {
            if !g.is_two_qubit() {
                continue;
            }
            let qs = g.qubits();
            let d = level[qs[0]].max(level[qs[1]]) + 1;
            level[qs[0]] = d;
            level[qs[1]] = d;
            depth = depth.max(d);
            count += 1;
        }
        (count, depth)
    }

    /// Text form: `QUBITS n`, optional `PHASE φ`, then one `KIND q[,q2] [angle]` per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("QUBITS {}\n", self.n_qubits);
        if self.global_phase != 0.0 {
            s.push_str(&format!("PHASE {:?}\n", self.global_phase));
        }
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: "<circuit>".into(),
            line,
            msg,
        };
        let mut circ: Option<Circuit> = None;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let kind = parts.next().unwrap_or("").to_ascii_uppercase();
            let rest: Vec<&str> = parts.collect();
            if kind == "QUBITS" {
                let n = rest
                    .first()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| perr(ln, "QUBITS needs a count".into()))?;
                circ = Some(Circuit::new(n));
                continue;
            }
            let c = circ.as_mut().ok_or_else(|| perr(ln, "missing QUBITS header".into()))?;
            if kind == "PHASE" {
                c.global_phase = rest
                    .first()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| perr(ln, "PHASE needs an angle".into()))?;
                continue;
            }
            let qarg = rest.first().ok_or_else(|| perr(ln, format!("{kind} needs qubits")))?;
            let qs: Vec<usize> = qarg
                .split(',')
                .map(|q| q.parse().map_err(|e| perr(ln, format!("qubit `{q}`: {e}"))))
                .collect::<Result<_>>()?;
            let angle = || -> Result<f64> {
                rest.get(1)
                    .ok_or_else(|| perr(ln, format!("{kind} needs an angle")))?
                    .parse()
                    .map_err(|e| perr(ln, format!("angle: {e}")))
            };
            let need = |n: usize| -> Result<()> {
                if qs.len() == n {
                    Ok(())
                } else {
                    Err(perr(ln, format!("{kind} takes {n} qubit(s)")))
                }
            };
            let gate = match kind.as_str() {
                "RX" => {
                    need(1)?;
                    Gate::Rx(qs[0], angle()?)
                }
                "RY" => {
                    need(1)?;
                    Gate::Ry(qs[0], angle()?)
                }
                "RZ" => {
                    need(1)?;
                    Gate::Rz(qs[0], angle()?)
                }
                "H" => {
                    need(1)?;
                    Gate::H(qs[0])
                }
                "X" => {
                    need(1)?;
                    Gate::X(qs[0])
                }
                "SX" => {
                    need(1)?;
                    Gate::Sx(qs[0])
                }
                "MEASURE" => {
                    need(1)?;
                    Gate::Measure(qs[0])
                }
                "CZ" => {
                    need(2)?;
                    Gate::Cz(qs[0], qs[1])
                }
                "CX" => {
                    need(2)?;
                    Gate::Cx(qs[0], qs[1])
                }
                "SWAP" => {
                    need(2)?;
                    Gate::Swap(qs[0], qs[1])
                }
                "U2" => {
                    need(2)?;
                    if rest.len() != 33 {
                        return Err(perr(ln, "U2 needs 16 complex entries (32 numbers)".into()));
                    }
                    let mut m = [C0; 16];
                    for (k, entry) in m.iter_mut().enumerate() {
                        let re: f64 = rest[1 + 2 * k].parse().map_err(|e| perr(ln, format!("{e}")))?;
                        let im: f64 = rest[2 + 2 * k].parse().map_err(|e| perr(ln, format!("{e}")))?;
                        *entry = Complex64::new(re, im);
                    }
                    Gate::Unitary2([qs[0], qs[1]], Box::new(m))
                }
                other => return Err(perr(ln, format!("unknown gate `{other}`"))),
            };
            c.push(gate).map_err(|e| perr(ln, e.to_string()))?;
        }
        circ.ok_or_else(|| perr(1, "empty circuit text".into()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Circuit> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Circuit::from_text(&text).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                msg,
            },
            other => other,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
