//! Deterministic toy electron–proton integral sets for tests, examples and
//! desk-scale pipeline runs.
//!
//! Electronic spin orbitals come in alpha/beta pairs when the mode count is
//! even (mode `2k+σ` is spatial orbital `k` with spin `σ`); otherwise all
//! modes share one spin. Two-body tensors are built from a factorized form
//! `(ij|kl) = Σ_Q B^Q_ij B^Q_kl`, which guarantees the real-orbital
//! permutational symmetries. Protonic modes describe one spin-polarized proton.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NeoIntegrals;
use crate::fermion::ModeLayout;

fn random_symmetric(n: usize, diag: f64, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag + scale * rng.random_range(-1.0..1.0);
        for j in 0..i {
            let v = scale * rng.random_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Electron spin orbital → (spatial index, spin).
fn spin_orbital(layout: &ModeLayout, p: usize) -> (usize, usize) {
    if layout.n_electron % 2 == 0 {
        (p / 2, p % 2)
    } else {
        (p, 0)
    }
}

/// A random but physically shaped integral set: ordered orbital energies,
/// positive-semidefinite Coulomb tensor and attractive electron–proton coupling.
pub fn toy_integrals(layout: ModeLayout, seed: u64) -> NeoIntegrals {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ne = layout.n_electron;
    let np = layout.n_proton;
    let ns = if ne % 2 == 0 { ne / 2 } else { ne };

    let mut t = random_symmetric(ns, 0.0, 0.06, &mut rng);
    for k in 0..ns {
        t[(k, k)] += -1.2 + 0.75 * k as f64;
    }
    let n_aux = 3;
    let mut b: Vec<DMatrix<f64>> = Vec::with_capacity(n_aux);
    b.push(DMatrix::identity(ns, ns) * 0.62 + random_symmetric(ns, 0.0, 0.04, &mut rng));
    for _ in 1..n_aux {
        b.push(random_symmetric(ns, 0.0, 0.22, &mut rng));
    }

    let mut ints = NeoIntegrals::zeros(layout);
    ints.e_core = 0.0;
    for p in 0..ne {
        for q in 0..ne {
            let ((i, si), (j, sj)) = (spin_orbital(&layout, p), spin_orbital(&layout, q));
            if si == sj {
                ints.h1e[(p, q)] = t[(i, j)];
            }
        }
    }
    for p in 0..ne {
        for q in 0..ne {
            let ((i, si), (j, sj)) = (spin_orbital(&layout, p), spin_orbital(&layout, q));
            if si != sj {
                continue;
            }
            for r in 0..ne {
                for s in 0..ne {
                    let ((k, sk), (l, sl)) = (spin_orbital(&layout, r), spin_orbital(&layout, s));
                    if sk != sl {
                        continue;
                    }
                    let v: f64 = b.iter().map(|bq| bq[(i, j)] * bq[(k, l)]).sum();
                    ints.set_eri_chem(p, q, r, s, v);
                }
            }
        }
    }

    if np > 0 {
        let mut v = random_symmetric(np, 0.0, 0.01, &mut rng);
        for a in 0..np {
            v[(a, a)] += 0.03 * a as f64;
        }
        ints.v1p = v;
        let d0 = DMatrix::<f64>::identity(np, np) * 0.5 + random_symmetric(np, 0.0, 0.06, &mut rng);
        let d1 = random_symmetric(np, 0.0, 0.18, &mut rng);
        let e0 = DMatrix::<f64>::identity(ns, ns) * 0.5 + random_symmetric(ns, 0.0, 0.04, &mut rng);
        let e1 = random_symmetric(ns, 0.0, 0.3, &mut rng);
        for a in 0..np {
            for bb in 0..np {
                for p in 0..ne {
                    for q in 0..ne {
                        let ((i, si), (j, sj)) = (spin_orbital(&layout, p), spin_orbital(&layout, q));
                        if si != sj {
                            continue;
                        }
                        let val = -(d0[(a, bb)] * e0[(i, j)] + d1[(a, bb)] * e1[(i, j)]);
                        ints.g_ep.set(a, bb, p, q, val);
                    }
                }
            }
        }
    }
    ints
}

/// Left, Middle and Right integral sets for a toy proton transfer: the
/// protonic potential favours the first (Left) or last (Right) proton mode,
/// and the symmetric Middle configuration sits `barrier` Ha higher.
pub fn toy_lmr(layout: ModeLayout, seed: u64, barrier: f64) -> [NeoIntegrals; 3] {
    let base = toy_integrals(layout, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a7e);
    let np = layout.n_proton;
    let tilt = 0.04;

    let mut left = base.clone();
    let mut right = base.clone();
    let mut middle = base;
    for a in 0..np {
        let x = if np > 1 { a as f64 / (np - 1) as f64 } else { 0.0 };
        left.v1p[(a, a)] += tilt * x;
        right.v1p[(a, a)] += tilt * (1.0 - x);
        middle.v1p[(a, a)] += 0.5 * tilt;
    }
    // scaffold relaxation in the middle geometry
    for p in 0..layout.n_electron {
        let (i, _) = spin_orbital(&layout, p);
        let shift = 0.02 * ((i as f64 + 1.0) * 0.7).sin();
        middle.h1e[(p, p)] += shift;
    }
    for a in 0..np {
        for bb in 0..a {
            let v = 0.008 * rng.random_range(0.5..1.0);
            middle.v1p[(a, bb)] += v;
            middle.v1p[(bb, a)] += v;
        }
    }
    middle.e_core += barrier;
    [left, middle, right]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_symmetric() {
        let layout = ModeLayout::new(4, 3);
        let a = toy_integrals(layout, 1);
        assert_eq!(a, toy_integrals(layout, 1));
        assert_ne!(a, toy_integrals(layout, 2));
        a.validate(1e-12).unwrap();
        for ints in toy_lmr(layout, 4, 0.01) {
            ints.validate(1e-12).unwrap();
        }
    }
}
