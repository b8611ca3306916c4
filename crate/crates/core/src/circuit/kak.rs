//! Canonical (KAK) decomposition of two-qubit unitaries and its synthesis
//! into at most three CZ gates.
//!
//! Every `U ∈ U(4)` factors as
//! `U = e^{iφ} (A1 ⊗ B1) · exp(i(x XX + y YY + z ZZ)) · (A0 ⊗ B0)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;

use super::{kron2, matmul4, Circuit, Gate, Mat2, Mat4};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliKey};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const ANGLE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Kak {
    pub global_phase: f64,
    /// Local factors applied before the entangler (`A0` on the first qubit).
    pub before: (Mat2, Mat2),
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Local factors applied after the entangler.
    pub after: (Mat2, Mat2),
}

// magic basis, columns Φ1..Φ4
fn magic() -> Mat4 {
    let h = FRAC_1_SQRT_2;
    let r = Complex64::new(h, 0.0);
    let i = Complex64::new(0.0, h);
    [r, i, C0, C0, C0, C0, i, r, C0, C0, i, -r, r, -i, C0, C0]
}

// eigenvalues of XX, YY, ZZ on the magic basis vectors
const SX: [f64; 4] = [1.0, -1.0, 1.0, -1.0];
const SY: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
const SZ: [f64; 4] = [1.0, 1.0, -1.0, -1.0];

fn adj(m: &Mat4) -> Mat4 {
    super::adjoint4(m)
}

fn det4(m: &Mat4) -> Complex64 {
    nalgebra::Matrix4::from_row_slice(m).determinant()
}

/// `exp(i(x XX + y YY + z ZZ))` in the `|ab⟩` basis.
pub fn canonical_matrix(x: f64, y: f64, z: f64) -> Mat4 {
    let b = magic();
    let mut d = [C0; 16];
    for k in 0..4 {
        d[k * 5] = Complex64::from_polar(1.0, x * SX[k] + y * SY[k] + z * SZ[k]);
    }
    matmul4(&matmul4(&b, &d), &adj(&b))
}

impl Kak {
    pub fn decompose(u: &Mat4) -> Result<Kak> {
        let det = det4(u);
        if (det.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::Validation(format!("two-qubit block not unitary (|det| = {})", det.norm())));
        }
        let phase0 = det.arg() / 4.0;
        let unit = Complex64::from_polar(1.0, -phase0);
        let su: Mat4 = u.map(|c| c * unit);
        let b = magic();
        let up = matmul4(&matmul4(&adj(&b), &su), &b);
        let up_t = transpose(&up);
        let m2 = matmul4(&up_t, &up);

        let p = real_simultaneous_eigenbasis(&m2)?;
        // P^T M2 P diagonal
        let pc: Mat4 = real_to_complex(&p);
        let d = matmul4(&matmul4(&transpose(&pc), &m2), &pc);
        let mut theta = [0.0; 4];
        for k in 0..4 {
            theta[k] = d[k * 5].arg() / 2.0;
        }
        let sum: f64 = theta.iter().sum();
        // sqrt(D) must have unit product so that K1 lies in SO(4)
        let wrapped = (sum / std::f64::consts::PI).round() as i64;
        if wrapped.rem_euclid(2) == 1 {
            theta[0] -= std::f64::consts::PI;
        }
        let mut dinv = [C0; 16];
        for k in 0..4 {
            dinv[k * 5] = Complex64::from_polar(1.0, -theta[k]);
        }
        let k1 = matmul4(&matmul4(&up, &pc), &dinv);
        let k2 = transpose(&pc);
        let l1 = matmul4(&matmul4(&b, &k1), &adj(&b));
        let l2 = matmul4(&matmul4(&b, &k2), &adj(&b));
        let (a1, b1, ph1) = kron_factor(&l1)?;
        let (a0, b0, ph0) = kron_factor(&l2)?;

        let g = theta.iter().sum::<f64>() / 4.0;
        let dot = |s: &[f64; 4]| (0..4).map(|k| theta[k] * s[k]).sum::<f64>() / 4.0;
        Ok(Kak {
            global_phase: phase0 + g + ph1 + ph0,
            before: (a0, b0),
            x: dot(&SX),
            y: dot(&SY),
            z: dot(&SZ),
            after: (a1, b1),
        })
    }

    pub fn reconstruct(&self) -> Mat4 {
        let n = canonical_matrix(self.x, self.y, self.z);
        let m = matmul4(
            &matmul4(&kron2(&self.after.0, &self.after.1), &n),
            &kron2(&self.before.0, &self.before.1),
        );
        let ph = Complex64::from_polar(1.0, self.global_phase);
        m.map(|c| c * ph)
    }

    fn nonzero_terms(&self) -> usize {
        [self.x, self.y, self.z].iter().filter(|v| reduced_angle(**v) > 1e-10).count()
    }

    /// Appends an exact CZ + single-qubit realization on `(qa, qb)`.
    pub fn synthesize_into(&self, circ: &mut Circuit, qa: usize, qb: usize) {
        let mut phase = self.global_phase;
        phase += push_1q(circ, qa, &self.before.0);
        phase += push_1q(circ, qb, &self.before.1);
        phase += push_canonical(circ, qa, qb, self.x, self.y, self.z, self.nonzero_terms());
        phase += push_1q(circ, qa, &self.after.0);
        phase += push_1q(circ, qb, &self.after.1);
        circ.add_phase(phase);
    }
}

/// Distance of `v` from the nearest multiple of π/2 (angles that make the
/// corresponding term local).
fn reduced_angle(v: f64) -> f64 {
    let r = v.rem_euclid(FRAC_PI_2);
    r.min(FRAC_PI_2 - r)
}

/// Synthesizes an arbitrary two-qubit block into CZ + 1q rotations.
pub fn synthesize(u: &Mat4, qa: usize, qb: usize, circ: &mut Circuit) -> Result<()> {
    let kak = Kak::decompose(u)?;
    kak.synthesize_into(circ, qa, qb);
    Ok(())
}

fn transpose(m: &Mat4) -> Mat4 {
    let mut out = [C0; 16];
    for r in 0..4 {
        for c in 0..4 {
            out[c * 4 + r] = m[r * 4 + c];
        }
    }
    out
}

fn real_to_complex(p: &Matrix4<f64>) -> Mat4 {
    let mut out = [C0; 16];
    for r in 0..4 {
        for c in 0..4 {
            out[r * 4 + c] = Complex64::new(p[(r, c)], 0.0);
        }
    }
    out
}

/// Real orthogonal `P` (det +1) diagonalizing the complex symmetric unitary `m`.
fn real_simultaneous_eigenbasis(m: &Mat4) -> Result<Matrix4<f64>> {
    let re = Matrix4::from_fn(|r, c| m[r * 4 + c].re);
    let im = Matrix4::from_fn(|r, c| m[r * 4 + c].im);
    let re = (re + re.transpose()) * 0.5;
    let im = (im + im.transpose()) * 0.5;
    let mut best: Option<(f64, Matrix4<f64>)> = None;
    for t in [0.731, 1.917, 0.213, 2.671, 1.303, 0.057] {
        let combo = re * f64::cos(t) + im * f64::sin(t);
        let mut p = SymmetricEigen::new(combo).eigenvectors;
        if p.determinant() < 0.0 {
            p.column_mut(0).neg_mut();
        }
        let dr = p.transpose() * re * p;
        let di = p.transpose() * im * p;
        let off = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .map(|(r, c)| dr[(r, c)].abs().max(di[(r, c)].abs()))
            .fold(0.0, f64::max);
        if off < 1e-11 {
            return Ok(p);
        }
        if best.as_ref().is_none_or(|(o, _)| off < *o) {
            best = Some((off, p));
        }
    }
    match best {
        Some((off, p)) if off < 1e-7 => Ok(p),
        _ => Err(Error::Validation("KAK eigenbasis did not converge".into())),
    }
}

/// Splits `m ≈ e^{iφ} A ⊗ B` with `A, B ∈ SU(2)`.
fn kron_factor(m: &Mat4) -> Result<(Mat2, Mat2, f64)> {
    let (mut best, mut idx) = (0.0, 0);
    for (k, c) in m.iter().enumerate() {
        if c.norm() > best {
            best = c.norm();
            idx = k;
        }
    }
    let (row, col) = (idx / 4, idx % 4);
    let (i, k) = (row / 2, row % 2);
    let (j, l) = (col / 2, col % 2);
    let mut b: Mat2 = [C0; 4];
    let mut a: Mat2 = [C0; 4];
    for r in 0..2 {
        for c in 0..2 {
            b[2 * r + c] = m[(2 * i + r) * 4 + 2 * j + c];
            a[2 * r + c] = m[(2 * r + k) * 4 + 2 * c + l];
        }
    }
    let normalize = |x: &mut Mat2| -> Result<()> {
        let det = x[0] * x[3] - x[1] * x[2];
        if det.norm() < 1e-12 {
            return Err(Error::Validation("local factor is singular".into()));
        }
        let s = det.sqrt();
        x.iter_mut().for_each(|c| *c /= s);
        Ok(())
    };
    normalize(&mut a)?;
    normalize(&mut b)?;
    let ab = kron2(&a, &b);
    let phase = (m[idx] / ab[idx]).arg();
    let check = ab
        .iter()
        .zip(m.iter())
        .map(|(p, q)| (p * Complex64::from_polar(1.0, phase) - q).norm())
        .fold(0.0, f64::max);
    if check > 1e-7 {
        return Err(Error::Validation(format!("local factor is not a tensor product (defect {check:e})")));
    }
    Ok((a, b, phase))
}

/// ZYZ angles `(φ, θ, λ, α)` with `V = e^{iα} RZ(φ) RY(θ) RZ(λ)`.
pub fn zyz(v: &Mat2) -> (f64, f64, f64, f64) {
    let det = v[0] * v[3] - v[1] * v[2];
    let alpha = det.arg() / 2.0;
    let w = Complex64::from_polar(1.0, -alpha);
    let (a, b) = (v[0] * w, v[2] * w);
    let theta = 2.0 * b.norm().atan2(a.norm());
    let (sum, diff) = if a.norm() < 1e-14 {
        (0.0, 2.0 * b.arg())
    } else if b.norm() < 1e-14 {
        (-2.0 * a.arg(), 0.0)
    } else {
        (-2.0 * a.arg(), 2.0 * b.arg())
    };
    let phi = (sum + diff) / 2.0;
    let lambda = (sum - diff) / 2.0;
    (phi, theta, lambda, alpha)
}

fn push_1q(circ: &mut Circuit, q: usize, v: &Mat2) -> f64 {
    let (phi, theta, lambda, alpha) = zyz(v);
    for g in [Gate::Rz(q, lambda), Gate::Ry(q, theta), Gate::Rz(q, phi)] {
        let angle = match g {
            Gate::Rz(_, t) | Gate::Ry(_, t) => t,
            _ => unreachable!(),
        };
        if angle.abs() > ANGLE_TOL {
            circ.push_unchecked(g);
        }
    }
    alpha
}

fn push_cx(circ: &mut Circuit, control: usize, target: usize) {
    circ.push_unchecked(Gate::H(target));
    circ.push_unchecked(Gate::Cz(control, target));
    circ.push_unchecked(Gate::H(target));
}

fn push_canonical(circ: &mut Circuit, qa: usize, qb: usize, x: f64, y: f64, z: f64, terms: usize) -> f64 {
    match terms {
        0 => {
            // each term is a multiple of π/2 and therefore local
            let mut phase = 0.0;
            for (v, p) in [(x, Pauli::X), (y, Pauli::Y), (z, Pauli::Z)] {
                phase += push_local_term(circ, qa, qb, v, p);
            }
            phase
        }
        1 => {
            let (v, p) = [(x, Pauli::X), (y, Pauli::Y), (z, Pauli::Z)]
                .into_iter()
                .max_by(|a, b| reduced_angle(a.0).total_cmp(&reduced_angle(b.0)))
                .unwrap();
            let mut phase = 0.0;
            for (w, q) in [(x, Pauli::X), (y, Pauli::Y), (z, Pauli::Z)] {
                if q != p {
                    phase += push_local_term(circ, qa, qb, w, q);
                }
            }
            let mut key = PauliKey::IDENTITY;
            key.set(qa, p);
            key.set(qb, p);
            let mut sub = Circuit::new(circ.n_qubits());
            super::pauli_evolution_into(&mut sub, key, -2.0 * v);
            for g in sub.gates() {
                match g {
                    Gate::Cx(c, t) => push_cx(circ, *c, *t),
                    other => circ.push_unchecked(other.clone()),
                }
            }
            phase
        }
        _ => {
            circ.push_unchecked(Gate::Rz(qb, -FRAC_PI_2));
            push_cx(circ, qb, qa);
            circ.push_unchecked(Gate::Rz(qa, FRAC_PI_2 - 2.0 * z));
            circ.push_unchecked(Gate::Ry(qb, 2.0 * x - FRAC_PI_2));
            push_cx(circ, qa, qb);
            circ.push_unchecked(Gate::Ry(qb, FRAC_PI_2 - 2.0 * y));
            push_cx(circ, qb, qa);
            circ.push_unchecked(Gate::Rz(qa, FRAC_PI_2));
            FRAC_PI_4
        }
    }
}

/// `exp(i v P⊗P)` for `v` a multiple of π/2: `i^k (P⊗P)^k`, realized by local Paulis.
fn push_local_term(circ: &mut Circuit, qa: usize, qb: usize, v: f64, p: Pauli) -> f64 {
    let k = (v / FRAC_PI_2).round() as i64;
    if k.rem_euclid(2) == 0 {
        // (±1) identity
        return if k.rem_euclid(4) == 2 { std::f64::consts::PI } else { 0.0 };
    }
    // exp(i·kπ/2 P⊗P) = i^k P⊗P; P = e^{iπ/2} R_P(π)
    for q in [qa, qb] {
        circ.push_unchecked(match p {
            Pauli::X => Gate::Rx(q, std::f64::consts::PI),
            Pauli::Y => Gate::Ry(q, std::f64::consts::PI),
            _ => Gate::Rz(q, std::f64::consts::PI),
        });
    }
    k as f64 * FRAC_PI_2 + std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unitary(rng: &mut ChaCha8Rng) -> Mat4 {
        let g = nalgebra::Matrix4::<Complex64>::from_fn(|_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let q = g.qr().q();
        let mut m = [C0; 16];
        for r in 0..4 {
            for c in 0..4 {
                m[r * 4 + c] = q[(r, c)];
            }
        }
        m
    }

    fn max_diff(a: &Mat4, b: &Mat4) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn magic_basis_maps_locals_to_real_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(&mut rng);
        let kak = Kak::decompose(&u).unwrap();
        let local = kron2(&kak.before.0, &kak.before.1);
        let b = magic();
        let o = matmul4(&matmul4(&adj(&b), &local), &b);
        assert!(o.iter().all(|c| c.im.abs() < 1e-10));
    }

    #[test]
    fn reconstructs_random_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let u = random_unitary(&mut rng);
            let kak = Kak::decompose(&u).unwrap();
            assert!(max_diff(&kak.reconstruct(), &u) < 1e-9);
        }
    }

    #[test]
    fn special_cases_reconstruct() {
        let i2: Mat2 = [Complex64::new(1.0, 0.0), C0, C0, Complex64::new(1.0, 0.0)];
        let cases = [
            super::super::identity4(),
            kron2(&i2, &i2),
            canonical_matrix(0.3, 0.0, 0.0),
            canonical_matrix(FRAC_PI_4, FRAC_PI_4, 0.0),
            canonical_matrix(FRAC_PI_4, FRAC_PI_4, FRAC_PI_4),
            canonical_matrix(FRAC_PI_2, 0.0, 0.0),
        ];
        for u in cases {
            let kak = Kak::decompose(&u).unwrap();
            assert!(max_diff(&kak.reconstruct(), &u) < 1e-9);
        }
    }

    #[test]
    fn canonical_matrix_single_term() {
        let x = 0.37;
        let n = canonical_matrix(x, 0.0, 0.0);
        let (c, s) = (Complex64::new(x.cos(), 0.0), Complex64::new(0.0, x.sin()));
        let expected = [c, C0, C0, s, C0, c, s, C0, C0, s, c, C0, s, C0, C0, c];
        assert!(max_diff(&n, &expected) < 1e-14);
        let z = canonical_matrix(0.0, 0.0, x);
        assert!((z[0] - Complex64::from_polar(1.0, x)).norm() < 1e-14);
        assert!((z[5] - Complex64::from_polar(1.0, -x)).norm() < 1e-14);
    }

    #[test]
    fn zyz_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = nalgebra::Matrix2::<Complex64>::from_fn(|_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let q = g.qr().q();
            let a: Mat2 = [q[(0, 0)], q[(0, 1)], q[(1, 0)], q[(1, 1)]];
            let (phi, theta, lambda, alpha) = zyz(&a);
            let rz = |t: f64| [Complex64::from_polar(1.0, -t / 2.0), C0, C0, Complex64::from_polar(1.0, t / 2.0)];
            let ry = |t: f64| {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0), Complex64::new(s, 0.0), Complex64::new(c, 0.0)]
            };
            let mul = |x: Mat2, y: Mat2| {
                [
                    x[0] * y[0] + x[1] * y[2],
                    x[0] * y[1] + x[1] * y[3],
                    x[2] * y[0] + x[3] * y[2],
                    x[2] * y[1] + x[3] * y[3],
                ]
            };
            let r = mul(mul(rz(phi), ry(theta)), rz(lambda));
            let ph = Complex64::from_polar(1.0, alpha);
            for k in 0..4 {
                assert!((r[k] * ph - a[k]).norm() < 1e-10);
            }
        }
    }
}
