//! Physics post-processing: barrier heights, transition-state rate ratios,
//! entanglement entropies and proton densities on real-space grids.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{ModeLayout, Species};
use crate::hamiltonian::{lowdin, LmrWeights};
use crate::linalg::{hermitian_eigen, max_hermitian_defect, to_complex};
use crate::sim::{orbital_1rdm, StateVector};

/// Boltzmann constant in Ha/K.
pub const K_B: f64 = 3.166811563e-6;

const ENTROPY_TRACE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CASCI")]
    Casci,
    #[serde(rename = "HF")]
    Hf,
    #[serde(rename = "VQE-deep")]
    VqeDeep,
    #[serde(rename = "VQE-shallow")]
    VqeShallow,
    #[serde(rename = "AQC-high")]
    AqcHigh,
    #[serde(rename = "AQC-low")]
    AqcLow,
    #[serde(rename = "ZNE")]
    Zne,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Casci,
        Method::Hf,
        Method::VqeDeep,
        Method::VqeShallow,
        Method::AqcHigh,
        Method::AqcLow,
        Method::Zne,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Casci => "CASCI",
            Method::Hf => "HF",
            Method::VqeDeep => "VQE-deep",
            Method::VqeShallow => "VQE-shallow",
            Method::AqcHigh => "AQC-high",
            Method::AqcLow => "AQC-low",
            Method::Zne => "ZNE",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Argument(format!("unknown method `{s}`")))
    }
}

/// One energy along the Left → Middle → Right path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub label: String,
    pub weights: LmrWeights,
    pub energy: f64,
    pub method: Method,
    pub uncertainty: Option<f64>,
}

impl PathPoint {
    /// Label digits must sum to 3, e.g. `"210"`.
    pub fn new(label: &str, method: Method, energy: f64) -> Result<Self> {
        let sum: u32 = label.chars().filter_map(|c| c.to_digit(10)).sum();
        if sum != 3 {
            return Err(Error::Argument(format!("LMR label `{label}` digits must sum to 3")));
        }
        Ok(PathPoint {
            label: label.to_string(),
            weights: LmrWeights::from_label(label)?,
            energy,
            method,
            uncertainty: None,
        })
    }

    pub fn with_uncertainty(mut self, sigma: f64) -> Self {
        self.uncertainty = Some(sigma);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    pub method: Method,
    pub delta: f64,
    pub sigma: Option<f64>,
}

/// `ΔE = E(030) − E(300)` for `method`.
pub fn barrier(points: &[PathPoint], method: Method) -> Result<Barrier> {
    let find = |label: &str| {
        points
            .iter()
            .find(|p| p.method == method && p.label == label)
            .ok_or_else(|| Error::Data(format!("no {method} energy for point {label}")))
    };
    let (l, m) = (find("300")?, find("030")?);
    let sigma = match (l.uncertainty, m.uncertainty) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(0.0).hypot(b.unwrap_or(0.0))),
    };
    Ok(Barrier {
        method,
        delta: m.energy - l.energy,
        sigma,
    })
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Argument(format!("temperature {t} K must be positive")));
    }
    Ok(())
}

/// `exp(−ΔE / k_B T)`: the rate constant up to its unknown prefactor.
pub fn rate_constant_ratio(delta_e: f64, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    Ok((-delta_e / (K_B * temperature)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSensitivity {
    /// `−δE / k_B T`
    pub linearized: f64,
    /// `exp(−δE / k_B T) − 1`
    pub exact: f64,
}

/// Fractional change of the rate constant when the barrier shifts by `delta_e`.
pub fn rate_sensitivity(delta_e: f64, temperature: f64) -> Result<RateSensitivity> {
    check_temperature(temperature)?;
    let x = -delta_e / (K_B * temperature);
    Ok(RateSensitivity {
        linearized: x,
        exact: x.exp_m1(),
    })
}

/// Von Neumann entropy (natural log) of a Hermitian, unit-trace matrix.
pub fn entanglement_entropy(rho: &DMatrix<Complex64>) -> Result<f64> {
    if rho.nrows() != rho.ncols() || rho.is_empty() {
        return Err(Error::Dimension(format!("{}x{} density matrix", rho.nrows(), rho.ncols())));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > ENTROPY_TRACE_TOL || tr.im.abs() > ENTROPY_TRACE_TOL {
        return Err(Error::Validation(format!("density matrix trace {tr} differs from 1")));
    }
    let defect = max_hermitian_defect(rho);
    if defect > ENTROPY_TRACE_TOL {
        return Err(Error::Validation(format!("density matrix not Hermitian (defect {defect:e})")));
    }
    let s: f64 = hermitian_eigen(rho)
        .0
        .into_iter()
        .filter(|&l| l > 1e-14)
        .map(|l| -l * l.ln())
        .sum();
    Ok(s.max(0.0))
}

/// Entropy of the single-proton reduced density matrix of `psi`.
pub fn proton_entropy(psi: &StateVector, layout: &ModeLayout) -> Result<f64> {
    entanglement_entropy(&orbital_1rdm(psi, layout, Species::Proton)?)
}

/// Real protonic orbitals sampled on a uniform grid with cell volume `dv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitalGrid {
    /// Å
    pub points: Vec<[f64; 3]>,
    /// `amplitudes[i][P] = φ_P(r_i)`
    pub amplitudes: Vec<Vec<f64>>,
    /// Quadrature weight per point, Å³.
    pub dv: f64,
}

impl OrbitalGrid {
    pub fn new(points: Vec<[f64; 3]>, amplitudes: Vec<Vec<f64>>, dv: f64) -> Result<Self> {
        let g = OrbitalGrid { points, amplitudes, dv };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.amplitudes.len() {
            return Err(Error::Dimension(format!(
                "{} grid points but {} amplitude rows",
                self.points.len(),
                self.amplitudes.len()
            )));
        }
        let n = self.n_orbitals();
        if let Some(i) = self.amplitudes.iter().position(|row| row.len() != n) {
            return Err(Error::Dimension(format!("amplitude row {i} has {} orbitals, expected {n}", self.amplitudes[i].len())));
        }
        if !(self.dv > 0.0) {
            return Err(Error::Validation(format!("grid cell volume {} must be positive", self.dv)));
        }
        Ok(())
    }

    pub fn n_orbitals(&self) -> usize {
        self.amplitudes.first().map_or(0, Vec::len)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let g: OrbitalGrid = serde_json::from_str(&text)?;
        g.validate()?;
        Ok(g)
    }

    /// Gaussians of width `sigma` centred at `centers`, symmetrically
    /// orthonormalized under the grid quadrature. The grid spans
    /// `±half_width` in x and y and `±sigma·4` in z.
    pub fn gaussians(centers: &[[f64; 3]], sigma: f64, half_width: f64, n_per_axis: usize) -> Result<Self> {
        if centers.is_empty() || n_per_axis < 2 || !(sigma > 0.0) || !(half_width > 0.0) {
            return Err(Error::Argument("need centres, σ > 0, half width > 0 and ≥ 2 points per axis".into()));
        }
        let nz = n_per_axis.div_ceil(2).max(2);
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        let xs = axis(-half_width, half_width, n_per_axis);
        let zs = axis(-4.0 * sigma, 4.0 * sigma, nz);
        let dv = (xs[1] - xs[0]).powi(2) * (zs[1] - zs[0]);
        let mut points = Vec::with_capacity(xs.len() * xs.len() * zs.len());
        for &x in &xs {
            for &y in &xs {
                for &z in &zs {
                    points.push([x, y, z]);
                }
            }
        }
        let m = centers.len();
        let raw = DMatrix::from_fn(points.len(), m, |i, p| {
            let d2: f64 = (0..3).map(|k| (points[i][k] - centers[p][k]).powi(2)).sum();
            (-d2 / (2.0 * sigma * sigma)).exp()
        });
        let overlap = to_complex(&(raw.transpose() * &raw * dv));
        let t = lowdin(&overlap)?.map(|c| c.re);
        let phi = raw * t;
        let amplitudes = (0..points.len()).map(|i| phi.row(i).iter().copied().collect()).collect();
        OrbitalGrid::new(points, amplitudes, dv)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtonDensity {
    /// `ρ(r_i)`, Å⁻³
    pub rho: Vec<f64>,
    /// `∫ ρ dV`
    pub integral: f64,
    /// `⟨r⟩`, Å
    pub mean_position: [f64; 3],
}

/// `ρ(r) = Σ_PQ γ_PQ φ_P(r) φ_Q(r)` and its quadrature centroid.
pub fn proton_density(gamma: &DMatrix<Complex64>, grid: &OrbitalGrid) -> Result<ProtonDensity> {
    grid.validate()?;
    let n = grid.n_orbitals();
    if gamma.nrows() != n || gamma.ncols() != n {
        return Err(Error::Dimension(format!(
            "{}x{} density matrix for {n} grid orbitals",
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    let g = gamma.map(|c| c.re);
    let rho: Vec<f64> = grid
        .amplitudes
        .iter()
        .map(|phi| {
            let mut s = 0.0;
            for p in 0..n {
                for q in 0..n {
                    s += g[(p, q)] * phi[p] * phi[q];
                }
            }
            s
        })
        .collect();
    let integral = rho.iter().sum::<f64>() * grid.dv;
    let mut mean_position = [0.0; 3];
    if integral.abs() > 0.0 {
        for (r, p) in rho.iter().zip(&grid.points) {
            for k in 0..3 {
                mean_position[k] += r * p[k] * grid.dv / integral;
            }
        }
    }
    Ok(ProtonDensity {
        rho,
        integral,
        mean_position,
    })
}

/// `x,y,z,rho` rows, one per grid point.
pub fn density_csv(grid: &OrbitalGrid, density: &ProtonDensity) -> String {
    let mut s = String::from("x,y,z,rho\n");
    for (p, r) in grid.points.iter().zip(&density.rho) {
        s.push_str(&format!("{},{},{},{:e}\n", p[0], p[1], p[2], r));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_uses_left_and_middle() {
        let pts = [
            PathPoint::new("300", Method::Casci, -588.809).unwrap(),
            PathPoint::new("030", Method::Casci, -588.809 + 0.011857).unwrap(),
        ];
        let b = barrier(&pts, Method::Casci).unwrap();
        assert!((b.delta - 0.011857).abs() < 1e-9);
        assert!(b.sigma.is_none());
        assert!(matches!(barrier(&pts, Method::AqcLow), Err(Error::Data(_))));
        assert!(PathPoint::new("310", Method::Hf, 0.0).is_err());
    }

    #[test]
    fn uncertainties_add_in_quadrature() {
        let pts = [
            PathPoint::new("300", Method::Zne, 0.0).unwrap().with_uncertainty(3e-3),
            PathPoint::new("030", Method::Zne, 0.02).unwrap().with_uncertainty(4e-3),
        ];
        assert!((barrier(&pts, Method::Zne).unwrap().sigma.unwrap() - 5e-3).abs() < 1e-15);
    }

    #[test]
    fn thermal_energy_barrier_gives_inverse_e() {
        let de = K_B * 120.0;
        assert!((rate_constant_ratio(de, 120.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(rate_constant_ratio(0.0, 0.0).is_err());
        let s = rate_sensitivity(0.0, 300.0).unwrap();
        assert_eq!((s.linearized, s.exact), (0.0, 0.0));
    }

    #[test]
    fn entropy_validates_trace() {
        let half = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.5, 0.0));
        assert!((entanglement_entropy(&half).unwrap() - 2f64.ln()).abs() < 1e-15);
        let bad = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.6, 0.0));
        assert!(matches!(entanglement_entropy(&bad), Err(Error::Validation(_))));
    }

    #[test]
    fn gaussian_grid_is_orthonormal() {
        let g = OrbitalGrid::gaussians(&[[-0.4, 0.0, 0.0], [0.0, 0.0, 0.0], [0.4, 0.0, 0.0]], 0.3, 2.0, 41).unwrap();
        let id = DMatrix::<Complex64>::identity(3, 3) / Complex64::new(3.0, 0.0);
        let d = proton_density(&id, &g).unwrap();
        assert!((d.integral - 1.0).abs() < 1e-10);
        assert!(d.mean_position[0].abs() < 1e-10);
        assert!(d.rho.iter().all(|&r| r >= -1e-12));
    }

    #[test]
    fn density_rejects_dimension_mismatch() {
        let g = OrbitalGrid::new(vec![[0.0; 3]], vec![vec![1.0, 0.0]], 1.0).unwrap();
        assert!(matches!(
            proton_density(&DMatrix::identity(3, 3), &g),
            Err(Error::Dimension(_))
        ));
        assert!(OrbitalGrid::new(vec![[0.0; 3]], vec![vec![1.0], vec![0.0]], 1.0).is_err());
    }
}
