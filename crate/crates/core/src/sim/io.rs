use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::StateVector;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    n_qubits: usize,
    format: String,
    norm: f64,
}

const FORMAT: &str = "u64-header/f64-le-interleaved";

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `psi` as a little-endian `u64` qubit count followed by interleaved
/// `re, im` doubles, plus a `<path>.json` metadata file.
pub fn write_state(psi: &StateVector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(8 + 16 * psi.amplitudes().len());
    bytes.extend_from_slice(&(psi.n_qubits() as u64).to_le_bytes());
    for a in psi.amplitudes() {
        bytes.extend_from_slice(&a.re.to_le_bytes());
        bytes.extend_from_slice(&a.im.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let meta = Sidecar {
        n_qubits: psi.n_qubits(),
        format: FORMAT.into(),
        norm: psi.norm(),
    };
    let side = sidecar_path(path);
    fs::write(&side, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(side, e))
}

pub fn read_state(path: impl AsRef<Path>) -> Result<StateVector> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg,
    };
    if bytes.len() < 8 {
        return Err(bad("truncated header".into()));
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    if n > 40 || bytes.len() != 8 + 16 * (1usize << n) {
        return Err(bad(format!("payload of {} bytes does not match {n} qubits", bytes.len() - 8)));
    }
    let amps = bytes[8..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    StateVector::from_amplitudes(amps)
}
