//! NEO-FCIDUMP text format.
//!
//! ```text
//! # comment
//! &NEO NELEC_MODES=4 NPROT_MODES=2 CONV=CHEM ECORE=0.25 SYM=8
//! E1
//! -1.25  1 1
//! E2
//!  0.62  1 1 1 1
//! P1
//!  0.01  1 1
//! EP
//! -0.31  1 1 1 1
//! ```
//!
//! Rows are `value i j [k l]` with 1-based species-local indices. `E2` rows
//! are chemists' `(pq|rs)` under `CONV=CHEM` and physicists' `⟨pq|rs⟩` under
//! `CONV=PHYS`. `EP` rows are `value P Q p q` (proton pair first) giving the
//! coefficient of `a†_P a†_p a_q a_Q`. `P1` already contains the protonic
//! kinetic energy.
//!
//! `SYM=8` (default) declares real-orbital permutational symmetry: every row
//! also fills its symmetry-equivalent positions, and two rows that disagree
//! on a shared position are rejected. `SYM=1` takes rows literally; the
//! resulting tensors must still be Hermitian.

use std::fs;
use std::path::Path;

use super::NeoIntegrals;
use crate::error::{Error, Result};
use crate::fermion::ModeLayout;

const SYM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoBodyConvention {
    Chemists,
    Physicists,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    E1,
    E2,
    P1,
    EP,
}

impl Block {
    fn name(self) -> &'static str {
        match self {
            Block::E1 => "E1",
            Block::E2 => "E2",
            Block::P1 => "P1",
            Block::EP => "EP",
        }
    }

    fn arity(self) -> usize {
        match self {
            Block::E1 | Block::P1 => 2,
            Block::E2 | Block::EP => 4,
        }
    }
}

pub fn parse_integrals(path: impl AsRef<Path>) -> Result<NeoIntegrals> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_with_path(&text, path)
}

pub fn parse_integrals_str(text: &str) -> Result<NeoIntegrals> {
    parse_with_path(text, Path::new("<string>"))
}

/// Tracks which positions have been written so symmetry conflicts are caught.
struct Filled {
    seen: Vec<bool>,
}

fn parse_with_path(text: &str, path: &Path) -> Result<NeoIntegrals> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty integral file".into()))?;
    let Some(rest) = header.strip_prefix("&NEO") else {
        return Err(perr(hline, "expected `&NEO` header".into()));
    };
    let mut n_e = None;
    let mut n_p = None;
    let mut conv = TwoBodyConvention::Chemists;
    let mut e_core = 0.0;
    let mut full_sym = true;
    for tok in rest.split(|c: char| c.is_whitespace() || c == ',') {
        let tok = tok.trim();
        if tok.is_empty() || tok == "&END" || tok == "/" {
            continue;
        }
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| perr(hline, format!("malformed header field `{tok}`")))?;
        let num = |v: &str| v.parse::<usize>().map_err(|e| perr(hline, format!("{k}: {e}")));
        match k.to_ascii_uppercase().as_str() {
            "NELEC_MODES" => n_e = Some(num(v)?),
            "NPROT_MODES" => n_p = Some(num(v)?),
            "CONV" => {
                conv = match v.to_ascii_uppercase().as_str() {
                    "CHEM" => TwoBodyConvention::Chemists,
                    "PHYS" => TwoBodyConvention::Physicists,
                    other => return Err(perr(hline, format!("unknown CONV `{other}`"))),
                }
            }
            "ECORE" => e_core = v.parse::<f64>().map_err(|e| perr(hline, format!("ECORE: {e}")))?,
            "SYM" => {
                full_sym = match v {
                    "8" => true,
                    "1" => false,
                    other => return Err(perr(hline, format!("SYM must be 1 or 8, got `{other}`"))),
                }
            }
            other => return Err(perr(hline, format!("unknown header key `{other}`"))),
        }
    }
    let layout = ModeLayout::new(
        n_e.ok_or_else(|| perr(hline, "missing NELEC_MODES".into()))?,
        n_p.ok_or_else(|| perr(hline, "missing NPROT_MODES".into()))?,
    );
    let (ne, np) = (layout.n_electron, layout.n_proton);
    let mut ints = NeoIntegrals::zeros(layout);
    ints.e_core = e_core;

    let mut f_e1 = Filled { seen: vec![false; ne * ne] };
    let mut f_p1 = Filled { seen: vec![false; np * np] };
    let mut f_e2 = Filled { seen: vec![false; ne.pow(4)] };
    let mut f_ep = Filled { seen: vec![false; np * np * ne * ne] };

    let mut block: Option<Block> = None;
    for (ln, line) in lines {
        match line.to_ascii_uppercase().as_str() {
            "E1" => {
                block = Some(Block::E1);
                continue;
            }
            "E2" => {
                block = Some(Block::E2);
                continue;
            }
            "P1" => {
                block = Some(Block::P1);
                continue;
            }
            "EP" => {
                block = Some(Block::EP);
                continue;
            }
            _ => {}
        }
        let b = block.ok_or_else(|| perr(ln, "data row before any block label".into()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 1 + b.arity() {
            return Err(perr(ln, format!("{} rows need {} indices", b.name(), b.arity())));
        }
        let value: f64 = fields[0].parse().map_err(|e| perr(ln, format!("value: {e}")))?;
        let mut idx = Vec::with_capacity(4);
        for (pos, f) in fields[1..].iter().enumerate() {
            let i: usize = f.parse().map_err(|e| perr(ln, format!("index: {e}")))?;
            let bound = match (b, pos) {
                (Block::EP, 0 | 1) | (Block::P1, _) => np,
                _ => ne,
            };
            if i == 0 || i > bound {
                return Err(perr(ln, format!("index {i} outside 1..={bound} in {}", b.name())));
            }
            idx.push(i - 1);
        }

        let positions: Vec<[usize; 4]> = match b {
            Block::E1 | Block::P1 => {
                let (p, q) = (idx[0], idx[1]);
                if full_sym {
                    vec![[p, q, 0, 0], [q, p, 0, 0]]
                } else {
                    vec![[p, q, 0, 0]]
                }
            }
            Block::E2 => {
                let [p, q, r, s] = match conv {
                    TwoBodyConvention::Chemists => [idx[0], idx[1], idx[2], idx[3]],
                    // ⟨pq|rs⟩ = (pr|qs)
                    TwoBodyConvention::Physicists => [idx[0], idx[2], idx[1], idx[3]],
                };
                if full_sym {
                    vec![
                        [p, q, r, s],
                        [q, p, r, s],
                        [p, q, s, r],
                        [q, p, s, r],
                        [r, s, p, q],
                        [s, r, p, q],
                        [r, s, q, p],
                        [s, r, q, p],
                    ]
                } else {
                    vec![[p, q, r, s]]
                }
            }
            Block::EP => {
                let [a, bb, p, q] = [idx[0], idx[1], idx[2], idx[3]];
                if full_sym {
                    vec![[a, bb, p, q], [bb, a, p, q], [a, bb, q, p], [bb, a, q, p]]
                } else {
                    vec![[a, bb, p, q]]
                }
            }
        };

        for pos in positions {
            let (filled, flat, current) = match b {
                Block::E1 => (&mut f_e1, pos[0] * ne + pos[1], ints.h1e[(pos[0], pos[1])]),
                Block::P1 => (&mut f_p1, pos[0] * np + pos[1], ints.v1p[(pos[0], pos[1])]),
                Block::E2 => (
                    &mut f_e2,
                    ((pos[0] * ne + pos[1]) * ne + pos[2]) * ne + pos[3],
                    ints.eri_chem(pos[0], pos[1], pos[2], pos[3]),
                ),
                Block::EP => (
                    &mut f_ep,
                    ((pos[0] * np + pos[1]) * ne + pos[2]) * ne + pos[3],
                    ints.g_ep.get(pos[0], pos[1], pos[2], pos[3]),
                ),
            };
            if filled.seen[flat] {
                if (current - value).abs() > SYM_TOL {
                    let arity = b.arity();
                    return Err(Error::Symmetry {
                        block: b.name(),
                        indices: pos[..arity].iter().map(|i| i + 1).collect(),
                        a: current,
                        b: value,
                    });
                }
                continue;
            }
            filled.seen[flat] = true;
            match b {
                Block::E1 => ints.h1e[(pos[0], pos[1])] = value,
                Block::P1 => ints.v1p[(pos[0], pos[1])] = value,
                Block::E2 => ints.set_eri_chem(pos[0], pos[1], pos[2], pos[3], value),
                Block::EP => ints.g_ep.set(pos[0], pos[1], pos[2], pos[3], value),
            }
        }
    }
    ints.validate(SYM_TOL)?;
    Ok(ints)
}

/// Serializes every nonzero element explicitly (`SYM=1`), so reading the
/// output back reproduces `ints` exactly.
pub fn write_integrals_string(ints: &NeoIntegrals, conv: TwoBodyConvention) -> String {
    let (ne, np) = (ints.layout.n_electron, ints.layout.n_proton);
    let mut s = format!(
        "&NEO NELEC_MODES={ne} NPROT_MODES={np} CONV={} ECORE={:?} SYM=1\n",
        match conv {
            TwoBodyConvention::Chemists => "CHEM",
            TwoBodyConvention::Physicists => "PHYS",
        },
        ints.e_core
    );
    s.push_str("E1\n");
    for p in 0..ne {
        for q in 0..ne {
            let v = ints.h1e[(p, q)];
            if v != 0.0 {
                s.push_str(&format!("{v:?} {} {}\n", p + 1, q + 1));
            }
        }
    }
    s.push_str("E2\n");
    for p in 0..ne {
        for q in 0..ne {
            for r in 0..ne {
                for t in 0..ne {
                    let v = match conv {
                        TwoBodyConvention::Chemists => ints.eri_chem(p, q, r, t),
                        TwoBodyConvention::Physicists => ints.eri.get(p, q, r, t),
                    };
                    if v != 0.0 {
                        s.push_str(&format!("{v:?} {} {} {} {}\n", p + 1, q + 1, r + 1, t + 1));
                    }
                }
            }
        }
    }
    s.push_str("P1\n");
    for a in 0..np {
        for b in 0..np {
            let v = ints.v1p[(a, b)];
            if v != 0.0 {
                s.push_str(&format!("{v:?} {} {}\n", a + 1, b + 1));
            }
        }
    }
    s.push_str("EP\n");
    for a in 0..np {
        for b in 0..np {
            for p in 0..ne {
                for q in 0..ne {
                    let v = ints.g_ep.get(a, b, p, q);
                    if v != 0.0 {
                        s.push_str(&format!("{v:?} {} {} {} {}\n", a + 1, b + 1, p + 1, q + 1));
                    }
                }
            }
        }
    }
    s
}

pub fn write_integrals(ints: &NeoIntegrals, path: impl AsRef<Path>, conv: TwoBodyConvention) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_integrals_string(ints, conv)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::toy::toy_integrals;

    #[test]
    fn minimal_one_body_file() {
        let ints = parse_integrals_str("&NEO NELEC_MODES=2 NPROT_MODES=0\nE1\n-1.0 1 1\n-0.5 2 2\n0.1 1 2\n").unwrap();
        assert_eq!(ints.h1e[(0, 1)], 0.1);
        assert_eq!(ints.h1e[(1, 0)], 0.1);
        assert!(ints.eri.indexed().all(|(_, v)| v == 0.0));
        assert_eq!(ints.layout, ModeLayout::new(2, 0));
    }

    #[test]
    fn physicists_convention_converted() {
        // ⟨12|12⟩ = (11|22)
        let phys = parse_integrals_str("&NEO NELEC_MODES=2 NPROT_MODES=0 CONV=PHYS\nE2\n0.7 1 2 1 2\n").unwrap();
        let chem = parse_integrals_str("&NEO NELEC_MODES=2 NPROT_MODES=0 CONV=CHEM\nE2\n0.7 1 1 2 2\n").unwrap();
        assert_eq!(phys, chem);
        assert_eq!(phys.eri_chem(0, 0, 1, 1), 0.7);
        assert_eq!(phys.eri.get(0, 1, 0, 1), 0.7);
    }

    #[test]
    fn round_trip_both_conventions() {
        let ints = toy_integrals(ModeLayout::new(4, 2), 9);
        for conv in [TwoBodyConvention::Chemists, TwoBodyConvention::Physicists] {
            let text = write_integrals_string(&ints, conv);
            assert_eq!(parse_integrals_str(&text).unwrap(), ints);
        }
    }

    #[test]
    fn asymmetric_one_body_rejected() {
        let err = parse_integrals_str("&NEO NELEC_MODES=2 NPROT_MODES=0\nE1\n0.1 1 2\n0.2 2 1\n").unwrap_err();
        match err {
            Error::Symmetry { block, indices, .. } => {
                assert_eq!(block, "E1");
                assert_eq!(indices, vec![2, 1]);
            }
            other => panic!("unexpected {other}"),
        }
        let err = parse_integrals_str("&NEO NELEC_MODES=2 NPROT_MODES=0 SYM=1\nE1\n0.1 1 2\n").unwrap_err();
        assert!(matches!(err, Error::Symmetry { block: "E1", .. }));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_integrals_str("&NEO NELEC_MODES=2 NPROT_MODES=1\n# c\nE1\n1.0 1 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse_integrals_str("NEO\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_integrals_str("&NEO NELEC_MODES=2 NPROT_MODES=1\n1.0 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
