//! End-to-end driver: Left/Middle/Right integrals → interpolated Hamiltonians
//! → exact, variational and compiled ground states → noisy extrapolation →
//! barriers, rate curves and densities, all written under one run directory.
//!
//! Layout of a run directory:
//!
//! ```text
//! run/
//!   manifest.json
//!   hamiltonian/<label>/hamiltonian.txt
//!   casci/<label>/result.json
//!   vqe-shallow/<label>/{state.json, circuit.txt, result.json}
//!   aqc-low/<label>/{circuit.txt, result.json}
//!   zne/<label>/{samples.csv, fit.json}
//!   density/<label>/density.csv
//!   results/{path_points.json, path_points.csv, table3.csv, barriers.json, ...}
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adapt::{adapt_vqe, fermionic_generators, qubit_generators, AdaptOptions, AdaptState, Generator};
use crate::analysis::{
    barrier, density_csv, proton_density, proton_entropy, rate_constant_ratio, Barrier, Method, OrbitalGrid, PathPoint,
};
use crate::aqc::{compile, AqcConfig, AqcResult, Preset};
use crate::circuit::{heavy_hex, transpile, Circuit, CouplingMap, Layout};
use crate::error::{Error, Result};
use crate::fermion::{excitation_pool, qubit_pool, ModeLayout, Species};
use crate::hamiltonian::{assemble, interpolate, parse_integrals, toy::toy_lmr, LmrWeights, NeoIntegrals, TRAJECTORY_LABELS};
use crate::noise::{fold, noisy_expectation, NoiseModel, Shots, MAX_DENSITY_QUBITS};
use crate::pauli::{PauliKey, PauliSum, DEFAULT_DENSE_LIMIT};
use crate::sim::{exact_ground_state, expectation, orbital_1rdm, run, Sector, StateVector};
use crate::zne::{
    barrier_diff_first, barrier_fit_first, bootstrap_fit_first, bootstrap_interval, bootstrap_table, fit_extrapolate,
    BarrierEstimate, BootstrapInterval, FitOptions, FitReport, ZneDataset,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum System {
    /// Generated integrals; `barrier` is added to the Middle core energy.
    Toy {
        n_electron: usize,
        n_proton: usize,
        seed: u64,
        #[serde(default = "default_toy_barrier")]
        barrier: f64,
    },
    /// Integral files, resolved relative to the config file.
    Fcidump { left: PathBuf, middle: PathBuf, right: PathBuf },
}

fn default_toy_barrier() -> f64 {
    0.01
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    #[default]
    Fermionic,
    Qubit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeStage {
    /// Energy-error threshold of the shallow run, Ha.
    pub shallow: Option<f64>,
    pub deep: Option<f64>,
    #[serde(default)]
    pub pool: PoolKind,
    pub max_iterations: Option<usize>,
    /// Largest accepted |ΔE(VQE-shallow) − ΔE(CASCI)|, Ha.
    pub barrier_band: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VqeDepth {
    #[default]
    Shallow,
    Deep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AqcStage {
    pub presets: Vec<Preset>,
    #[serde(default)]
    pub source: VqeDepth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Depolarizing { error_1q: f64, error_2q: f64 },
    /// Calibration JSON, resolved relative to the config file.
    Calibration { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZneStage {
    /// Circuit source: one of VQE-shallow, VQE-deep, AQC-high, AQC-low.
    pub source: Method,
    pub noise: NoiseSpec,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Shots per Pauli term; exact density-matrix expectations when absent.
    pub shots: Option<u64>,
    #[serde(default = "default_degrees")]
    pub degrees: Vec<usize>,
    #[serde(default = "default_n_boot")]
    pub n_boot: usize,
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 4.0]
}
fn default_replicates() -> usize {
    8
}
fn default_degrees() -> Vec<usize> {
    vec![1, 2]
}
fn default_n_boot() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateStage {
    /// K
    pub temperatures: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityStage {
    /// Distance between neighbouring protonic basis centres along x, Å.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Gaussian width, Å.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_points")]
    pub points_per_axis: usize,
}

fn default_spacing() -> f64 {
    0.35
}
fn default_sigma() -> f64 {
    0.25
}
fn default_half_width() -> f64 {
    1.5
}
fn default_points() -> usize {
    31
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stages {
    #[serde(default = "yes")]
    pub casci: bool,
    #[serde(default = "yes")]
    pub hf: bool,
    pub vqe: Option<VqeStage>,
    pub aqc: Option<AqcStage>,
    pub zne: Option<ZneStage>,
    pub rate: Option<RateStage>,
    pub density: Option<DensityStage>,
}

impl Default for Stages {
    fn default() -> Self {
        Stages {
            casci: true,
            hf: true,
            vqe: None,
            aqc: None,
            zne: None,
            rate: None,
            density: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub name: String,
    pub system: System,
    pub occupied_electrons: Vec<usize>,
    pub occupied_protons: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_labels")]
    pub labels: Vec<String>,
    #[serde(default = "default_distance")]
    pub heavy_hex_distance: usize,
    #[serde(default)]
    pub stages: Stages,
}

fn default_labels() -> Vec<String> {
    TRAJECTORY_LABELS.iter().map(|s| s.to_string()).collect()
}
fn default_distance() -> usize {
    1
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config and resolves file references against its directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let System::Fcidump { left, middle, right } = &mut cfg.system {
            resolve(left);
            resolve(middle);
            resolve(right);
        }
        if let Some(ZneStage {
            noise: NoiseSpec::Calibration { path },
            ..
        }) = &mut cfg.stages.zne
        {
            resolve(path);
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.labels.is_empty() {
            return bad("no LMR labels".into());
        }
        for l in &self.labels {
            PathPoint::new(l, Method::Casci, 0.0).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(v) = &self.stages.vqe {
            if v.shallow.is_none() && v.deep.is_none() {
                return bad("vqe stage needs a shallow or deep threshold".into());
            }
            if v.shallow.into_iter().chain(v.deep).any(|t| !(t > 0.0)) {
                return bad("vqe thresholds must be positive".into());
            }
        }
        if let Some(a) = &self.stages.aqc {
            let have = self.stages.vqe.as_ref().and_then(|v| match a.source {
                VqeDepth::Shallow => v.shallow,
                VqeDepth::Deep => v.deep,
            });
            if have.is_none() {
                return bad(format!("aqc source VQE-{:?} is not configured", a.source).to_lowercase());
            }
        }
        if let Some(z) = &self.stages.zne {
            let ok = match z.source {
                Method::VqeShallow => self.stages.vqe.as_ref().is_some_and(|v| v.shallow.is_some()),
                Method::VqeDeep => self.stages.vqe.as_ref().is_some_and(|v| v.deep.is_some()),
                Method::AqcHigh => self.stages.aqc.as_ref().is_some_and(|a| a.presets.contains(&Preset::High)),
                Method::AqcLow => self.stages.aqc.as_ref().is_some_and(|a| a.presets.contains(&Preset::Low)),
                _ => false,
            };
            if !ok {
                return bad(format!("zne source {} is not produced by any configured stage", z.source));
            }
            if !self.labels.iter().any(|l| l == "300") || !self.labels.iter().any(|l| l == "030") {
                return bad("zne needs labels 300 and 030".into());
            }
            if !z.lambdas.contains(&1.0) || z.lambdas.iter().any(|&l| !(l >= 1.0)) {
                return bad("zne lambdas must be ≥ 1 and include 1".into());
            }
            if z.replicates == 0 {
                return bad("zne replicates must be positive".into());
            }
        }
        if let Some(r) = &self.stages.rate {
            if r.temperatures.iter().any(|&t| !(t > 0.0)) {
                return bad("temperatures must be positive".into());
            }
        }
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    pub reason: Option<String>,
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub labels: Vec<String>,
    pub stages: Vec<StageRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table3Row {
    pub label: String,
    pub method: Method,
    pub energy: f64,
    pub error: Option<f64>,
    pub two_qubit_depth: Option<usize>,
    pub two_qubit_count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZneSummary {
    pub source: Method,
    pub noiseless: BTreeMap<String, f64>,
    pub unmitigated: BTreeMap<String, f64>,
    pub fits: BTreeMap<String, FitReport>,
    pub fit_first: BarrierEstimate,
    pub diff_first: BarrierEstimate,
    pub bootstrap_fit_first: BootstrapInterval,
    pub bootstrap_diff_first: BootstrapInterval,
    pub physical_qubits: BTreeMap<String, Vec<usize>>,
}

/// Everything a run produced, also written under `results/`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub manifest: Manifest,
    pub path_points: Vec<PathPoint>,
    pub table3: Vec<Table3Row>,
    pub barriers: Vec<Barrier>,
    pub entropies: Vec<(String, Method, f64)>,
    pub checks: Vec<Check>,
    pub zne: Option<ZneSummary>,
}

impl PipelineReport {
    pub fn failed_stages(&self) -> Vec<&StageRecord> {
        self.manifest.stages.iter().filter(|s| s.status == StageStatus::Failed).collect()
    }
}

/// Output of one method at one path point.
#[derive(Clone, Debug)]
struct Solution {
    energy: f64,
    state: StateVector,
    circuit: Option<Circuit>,
    layout: Vec<usize>,
    two_qubit: Option<(usize, usize)>,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
    coupling: CouplingMap,
    stages: Vec<StageRecord>,
    failed: Option<String>,
}

impl Run<'_> {
    fn write(&self, rel: impl AsRef<Path>, contents: &str) -> Result<String> {
        let path = self.out.join(rel.as_ref());
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        Ok(rel.as_ref().to_string_lossy().replace('\\', "/"))
    }

    /// Runs `f` unless an earlier stage failed; records the outcome.
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&Self) -> Result<(T, Vec<String>)>) -> Option<T> {
        if let Some(prev) = &self.failed {
            self.stages.push(StageRecord {
                stage: name.into(),
                status: StageStatus::Skipped,
                reason: Some(format!("upstream stage `{prev}` failed")),
                outputs: vec![],
            });
            return None;
        }
        info!("stage {name}");
        match f(self) {
            Ok((v, outputs)) => {
                self.stages.push(StageRecord {
                    stage: name.into(),
                    status: StageStatus::Ok,
                    reason: None,
                    outputs,
                });
                Some(v)
            }
            Err(e) => {
                log::error!("stage {name} failed: {e}");
                self.stages.push(StageRecord {
                    stage: name.into(),
                    status: StageStatus::Failed,
                    reason: Some(e.to_string()),
                    outputs: vec![],
                });
                self.failed = Some(name.into());
                None
            }
        }
    }
}

fn load_integrals(system: &System) -> Result<[NeoIntegrals; 3]> {
    match system {
        System::Toy {
            n_electron,
            n_proton,
            seed,
            barrier,
        } => Ok(toy_lmr(ModeLayout::new(*n_electron, *n_proton), *seed, *barrier)),
        System::Fcidump { left, middle, right } => {
            let sets = [parse_integrals(left)?, parse_integrals(middle)?, parse_integrals(right)?];
            if sets[1].layout != sets[0].layout || sets[2].layout != sets[0].layout {
                return Err(Error::Dimension("Left, Middle and Right integrals use different mode layouts".into()));
            }
            Ok(sets)
        }
    }
}

fn system_layout(system: &System) -> Result<ModeLayout> {
    match system {
        System::Toy { n_electron, n_proton, .. } => Ok(ModeLayout::new(*n_electron, *n_proton)),
        System::Fcidump { left, .. } => Ok(parse_integrals(left)?.layout),
    }
}

fn method_dir(m: Method) -> &'static str {
    match m {
        Method::Casci => "casci",
        Method::Hf => "hf",
        Method::VqeDeep => "vqe-deep",
        Method::VqeShallow => "vqe-shallow",
        Method::AqcHigh => "aqc-high",
        Method::AqcLow => "aqc-low",
        Method::Zne => "zne",
    }
}

/// Per-label work in parallel, results in label order.
fn per_label<T: Send>(labels: &[String], f: impl Fn(usize, &str) -> Result<T> + Sync) -> Result<Vec<T>> {
    labels.par_iter().enumerate().map(|(i, l)| f(i, l)).collect()
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn mix_seed(parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.to_le_bytes());
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Relabels qubit `q` of every term as `map[q]` on an `n`-qubit register.
fn remap_operator(h: &PauliSum, map: &[usize], n: usize) -> PauliSum {
    let mut out = PauliSum::zero(n);
    for (k, c) in h.iter() {
        let (mut x, mut z) = (0u64, 0u64);
        for (q, &p) in map.iter().enumerate() {
            x |= (k.x_mask() >> q & 1) << p;
            z |= (k.z_mask() >> q & 1) << p;
        }
        out.add_term(PauliKey::from_masks(x, z), c);
    }
    out
}

/// Transpiled circuit restricted to the physical qubits it touches, with the
/// observable relabelled to match.
struct Executable {
    circuit: Circuit,
    observable: PauliSum,
    physical: Vec<usize>,
}

fn executable(logical: &Circuit, layout: &[usize], h: &PauliSum, coupling: &CouplingMap) -> Result<Executable> {
    let t = transpile(logical, coupling, &Layout::Explicit(layout.to_vec()))?;
    let mut active = vec![false; coupling.n_qubits()];
    for g in t.circuit.gates() {
        for q in g.qubits() {
            active[q] = true;
        }
    }
    for &p in &t.final_layout {
        active[p] = true;
    }
    let physical: Vec<usize> = (0..active.len()).filter(|&q| active[q]).collect();
    if physical.len() > MAX_DENSITY_QUBITS {
        return Err(Error::Resource(format!(
            "{} active physical qubits exceeds the density-matrix limit of {MAX_DENSITY_QUBITS}",
            physical.len()
        )));
    }
    let mut pos = vec![usize::MAX; coupling.n_qubits()];
    for (i, &p) in physical.iter().enumerate() {
        pos[p] = i;
    }
    let mut circuit = Circuit::new(physical.len());
    for g in t.circuit.gates() {
        circuit.push(g.remap(|q| pos[q]))?;
    }
    circuit.add_phase(t.circuit.global_phase());
    let map: Vec<usize> = t.final_layout.iter().map(|&p| pos[p]).collect();
    Ok(Executable {
        observable: remap_operator(h, &map, physical.len()),
        circuit,
        physical,
    })
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e15)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn samples_csv(d: &ZneDataset) -> String {
    let mut s = String::from("lambda,replicate,energy\n");
    for (l, v) in d.replicates() {
        for (r, e) in v.iter().enumerate() {
            let _ = writeln!(s, "{l},{r},{}", num(*e));
        }
    }
    s
}

/// Runs every configured stage, writing artifacts under `out`.
///
/// Configuration problems are returned as errors; failures inside a stage
/// are recorded in the manifest and skip the stages after it.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<PipelineReport> {
    cfg.validate()?;
    let layout = system_layout(&cfg.system)?;
    if layout.n_modes() > DEFAULT_DENSE_LIMIT {
        return Err(Error::Resource(format!(
            "{} modes exceeds the exact-solver limit of {DEFAULT_DENSE_LIMIT} qubits",
            layout.n_modes()
        )));
    }
    let reference = layout.occupation_mask(&cfg.occupied_electrons, &cfg.occupied_protons)?;
    let coupling = heavy_hex(cfg.heavy_hex_distance)?;
    if coupling.n_qubits() < layout.n_modes() {
        return Err(Error::Config(format!(
            "heavy-hex distance {} has {} qubits, system needs {}",
            cfg.heavy_hex_distance,
            coupling.n_qubits(),
            layout.n_modes()
        )));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let labels = &cfg.labels;
    let n = layout.n_modes();
    let sector = Sector {
        layout,
        n_electrons: cfg.occupied_electrons.len(),
        n_protons: cfg.occupied_protons.len(),
    };
    let mut r = Run {
        cfg,
        out,
        coupling,
        stages: Vec::new(),
        failed: None,
    };

    let hams: Vec<PauliSum> = r
        .stage("hamiltonian", |r| {
            let ints = load_integrals(&cfg.system)?;
            let [hl, hm, hr] = [assemble(&ints[0])?, assemble(&ints[1])?, assemble(&ints[2])?];
            let hams = per_label(labels, |_, l| interpolate(&hl, &hm, &hr, LmrWeights::from_label(l)?))?;
            let mut outs = Vec::new();
            for (l, h) in labels.iter().zip(&hams) {
                outs.push(r.write(format!("hamiltonian/{l}/hamiltonian.txt"), &h.to_text())?);
            }
            Ok((hams, outs))
        })
        .unwrap_or_default();

    let mut solutions: BTreeMap<Method, Vec<Solution>> = BTreeMap::new();

    if cfg.stages.hf {
        if let Some(v) = r.stage("hf", |_| {
            let sols = per_label(labels, |i, _| {
                let state = StateVector::basis(n, reference as usize);
                Ok(Solution {
                    energy: expectation(&state, &hams[i])?,
                    state,
                    circuit: None,
                    layout: vec![],
                    two_qubit: None,
                })
            })?;
            Ok((sols, vec![]))
        }) {
            solutions.insert(Method::Hf, v);
        }
    }

    if cfg.stages.casci {
        if let Some(v) = r.stage("casci", |r| {
            let gs = per_label(labels, |i, _| exact_ground_state(&hams[i], Some(&sector)))?;
            let mut outs = Vec::new();
            let mut sols = Vec::new();
            for (l, g) in labels.iter().zip(gs) {
                let entropy = proton_entropy(&g.state, &layout)?;
                let body = serde_json::json!({ "energy": g.energy, "dimension": g.dimension, "proton_entropy": entropy });
                outs.push(r.write(format!("casci/{l}/result.json"), &json(&body)?)?);
                sols.push(Solution {
                    energy: g.energy,
                    state: g.state,
                    circuit: None,
                    layout: vec![],
                    two_qubit: None,
                });
            }
            Ok((sols, outs))
        }) {
            solutions.insert(Method::Casci, v);
        }
    }

    if let Some(vqe) = &cfg.stages.vqe {
        let pool: Option<Vec<Generator>> = r.stage("pool", |_| {
            let p = excitation_pool(&layout, &cfg.occupied_electrons, &cfg.occupied_protons)?;
            let gens = match vqe.pool {
                PoolKind::Fermionic => fermionic_generators(&p, &layout)?,
                PoolKind::Qubit => qubit_generators(&qubit_pool(&p.qubit_images(&layout)?), n),
            };
            Ok((gens, vec![]))
        });
        for (method, threshold) in [(Method::VqeShallow, vqe.shallow), (Method::VqeDeep, vqe.deep)] {
            let Some(threshold) = threshold else { continue };
            let exact: Option<Vec<f64>> = solutions.get(&Method::Casci).map(|s| s.iter().map(|x| x.energy).collect());
            let pool = pool.clone().unwrap_or_default();
            let v = r.stage(method_dir(method), |r| {
                let states: Vec<AdaptState> = per_label(labels, |i, _| {
                    let mut opts = AdaptOptions::new(threshold, exact.as_ref().map(|e| e[i]));
                    if let Some(m) = vqe.max_iterations {
                        opts.max_iterations = m;
                    }
                    adapt_vqe(&hams[i], &pool, reference, &opts)
                })?;
                let mut outs = Vec::new();
                let mut sols = Vec::new();
                for (i, (l, s)) in labels.iter().zip(states).enumerate() {
                    let circuit = s.circuit()?;
                    let t = transpile(&circuit, &r.coupling, &Layout::Trivial)?;
                    let (count, depth) = t.circuit.two_qubit_metrics();
                    let dir = format!("{}/{l}", method_dir(method));
                    outs.push(r.write(format!("{dir}/state.json"), &(s.to_json()? + "\n"))?);
                    outs.push(r.write(format!("{dir}/circuit.txt"), &circuit.to_text())?);
                    let body = serde_json::json!({
                        "energy": s.energy(),
                        "error": exact.as_ref().map(|e| s.energy() - e[i]),
                        "iterations": s.selected.len(),
                        "status": s.status,
                        "two_qubit_count": count,
                        "two_qubit_depth": depth,
                    });
                    outs.push(r.write(format!("{dir}/result.json"), &json(&body)?)?);
                    sols.push(Solution {
                        energy: s.energy(),
                        state: s.prepare()?,
                        circuit: Some(circuit),
                        layout: (0..n).collect(),
                        two_qubit: Some((count, depth)),
                    });
                }
                Ok((sols, outs))
            });
            if let Some(v) = v {
                solutions.insert(method, v);
            }
        }
    }

    if let Some(aqc) = &cfg.stages.aqc {
        let source_method = match aqc.source {
            VqeDepth::Shallow => Method::VqeShallow,
            VqeDepth::Deep => Method::VqeDeep,
        };
        for &preset in &aqc.presets {
            let method = match preset {
                Preset::High => Method::AqcHigh,
                Preset::Low => Method::AqcLow,
            };
            let source = solutions.get(&source_method).cloned().unwrap_or_default();
            let v = r.stage(method_dir(method), |r| {
                if source.len() != labels.len() {
                    return Err(Error::Data(format!("no {source_method} states to compile")));
                }
                let results: Vec<AqcResult> = per_label(labels, |i, _| {
                    compile(&source[i].state, &AqcConfig::preset(preset, r.coupling.clone(), cfg.seed))
                })?;
                let mut outs = Vec::new();
                let mut sols = Vec::new();
                for (i, (l, res)) in labels.iter().zip(results).enumerate() {
                    let t = transpile(&res.circuit, &r.coupling, &Layout::Explicit(res.layout.clone()))?;
                    let (count, depth) = t.circuit.two_qubit_metrics();
                    let state = run(&res.circuit, &StateVector::zero(n))?;
                    let energy = expectation(&state, &hams[i])?;
                    let dir = format!("{}/{l}", method_dir(method));
                    outs.push(r.write(format!("{dir}/circuit.txt"), &res.circuit.to_text())?);
                    let body = serde_json::json!({
                        "energy": energy,
                        "fidelity": res.fidelity(),
                        "converged": res.converged,
                        "blocks": res.blocks.len(),
                        "layout": res.layout,
                        "cost_history": res.history,
                        "two_qubit_count": count,
                        "two_qubit_depth": depth,
                        "swaps": t.swaps_inserted,
                    });
                    outs.push(r.write(format!("{dir}/result.json"), &json(&body)?)?);
                    sols.push(Solution {
                        energy,
                        state,
                        circuit: Some(res.circuit),
                        layout: res.layout,
                        two_qubit: Some((count, depth)),
                    });
                }
                Ok((sols, outs))
            });
            if let Some(v) = v {
                solutions.insert(method, v);
            }
        }
    }

    let zne = cfg.stages.zne.as_ref().and_then(|z| {
        let source = solutions.get(&z.source).cloned().unwrap_or_default();
        r.stage("zne", |r| run_zne(r, z, &source, &hams))
    });

    let mut path_points = Vec::new();
    for (&method, sols) in &solutions {
        for (l, s) in labels.iter().zip(sols) {
            path_points.push(PathPoint::new(l, method, s.energy)?);
        }
    }
    if let Some(z) = &zne {
        for (l, f) in &z.fits {
            path_points.push(PathPoint::new(l, Method::Zne, f.intercept)?.with_uncertainty(f.intercept_se));
        }
    }
    let barriers: Vec<Barrier> = Method::ALL
        .into_iter()
        .filter_map(|m| barrier(&path_points, m).ok())
        .collect();

    let casci = solutions.get(&Method::Casci);
    let mut table3 = Vec::new();
    for (&method, sols) in &solutions {
        for (i, (l, s)) in labels.iter().zip(sols).enumerate() {
            table3.push(Table3Row {
                label: l.clone(),
                method,
                energy: s.energy,
                error: casci.map(|c| s.energy - c[i].energy),
                two_qubit_depth: s.two_qubit.map(|t| t.1),
                two_qubit_count: s.two_qubit.map(|t| t.0),
            });
        }
    }

    let mut entropies = Vec::new();
    for (&method, sols) in &solutions {
        if method == Method::Hf {
            continue;
        }
        for (l, s) in labels.iter().zip(sols) {
            if let Ok(e) = proton_entropy(&s.state, &layout) {
                entropies.push((l.clone(), method, e));
            }
        }
    }

    let mut checks = Vec::new();
    if let Some(band) = cfg.stages.vqe.as_ref().and_then(|v| v.barrier_band) {
        let find = |m| barriers.iter().find(|b| b.method == m);
        if let (Some(v), Some(c)) = (find(Method::VqeShallow), find(Method::Casci)) {
            let dev = (v.delta - c.delta).abs();
            checks.push(Check {
                name: "VQE-shallow barrier vs CASCI".into(),
                value: dev,
                limit: band,
                pass: dev <= band,
            });
        }
    }

    if let Some(rate) = &cfg.stages.rate {
        r.stage("rate", |r| {
            let reference = barriers.iter().find(|b| b.method == Method::Casci);
            let mut s = String::from("method,temperature,delta_e,ratio,relative_to_casci\n");
            for b in &barriers {
                for &t in &rate.temperatures {
                    let k = rate_constant_ratio(b.delta, t)?;
                    let rel = match reference {
                        Some(c) => num(k / rate_constant_ratio(c.delta, t)?),
                        None => String::new(),
                    };
                    let _ = writeln!(s, "{},{t},{},{},{rel}", b.method, num(b.delta), num(k));
                }
            }
            Ok(((), vec![r.write("results/rates.csv", &s)?]))
        });
    }

    if let Some(d) = &cfg.stages.density {
        let casci = solutions.get(&Method::Casci).cloned().unwrap_or_default();
        r.stage("density", |r| {
            if casci.len() != labels.len() {
                return Err(Error::Data("density needs CASCI states".into()));
            }
            let np = layout.count(Species::Proton);
            let centers: Vec<[f64; 3]> = (0..np)
                .map(|a| [d.spacing * (a as f64 - (np as f64 - 1.0) / 2.0), 0.0, 0.0])
                .collect();
            let grid = OrbitalGrid::gaussians(&centers, d.sigma, d.half_width, d.points_per_axis)?;
            let mut outs = Vec::new();
            let mut summary = String::from("label,integral,x,y,z\n");
            for (l, s) in labels.iter().zip(&casci) {
                let gamma = orbital_1rdm(&s.state, &layout, Species::Proton)?;
                let dens = proton_density(&gamma, &grid)?;
                outs.push(r.write(format!("density/{l}/density.csv"), &density_csv(&grid, &dens))?);
                let [x, y, z] = dens.mean_position.map(num);
                let _ = writeln!(summary, "{l},{},{x},{y},{z}", num(dens.integral));
            }
            outs.push(r.write("results/proton_positions.csv", &summary)?);
            Ok(((), outs))
        });
    }

    let mut outs = Vec::new();
    outs.push(r.write("results/path_points.json", &json(&path_points)?)?);
    let mut csv = String::from("label,alpha,beta,gamma,method,energy,uncertainty\n");
    for p in &path_points {
        let u = p.uncertainty.map(num).unwrap_or_default();
        let w = p.weights;
        let _ = writeln!(csv, "{},{},{},{},{},{},{u}", p.label, num(w.alpha), num(w.beta), num(w.gamma), p.method, num(p.energy));
    }
    outs.push(r.write("results/path_points.csv", &csv)?);
    let mut t3 = String::from("label,method,energy,error,two_qubit_depth,two_qubit_count\n");
    let opt = |v: Option<String>| v.unwrap_or_default();
    for row in &table3 {
        let _ = writeln!(
            t3,
            "{},{},{},{},{},{}",
            row.label,
            row.method,
            num(row.energy),
            opt(row.error.map(num)),
            opt(row.two_qubit_depth.map(|e| e.to_string())),
            opt(row.two_qubit_count.map(|e| e.to_string())),
        );
    }
    outs.push(r.write("results/table3.csv", &t3)?);
    outs.push(r.write("results/barriers.json", &json(&barriers)?)?);
    let mut ent = String::from("label,method,entropy\n");
    for (l, m, e) in &entropies {
        let _ = writeln!(ent, "{l},{m},{}", num(*e));
    }
    outs.push(r.write("results/entropies.csv", &ent)?);
    outs.push(r.write("results/checks.json", &json(&checks)?)?);
    if let Some(z) = &zne {
        outs.push(r.write("results/zne.json", &json(z)?)?);
        let table = bootstrap_table(
            &[("Fit first", &z.bootstrap_fit_first), ("Diff first", &z.bootstrap_diff_first)],
            2,
        );
        outs.push(r.write("results/bootstrap.txt", &table)?);
    }
    r.stages.push(StageRecord {
        stage: "report".into(),
        status: StageStatus::Ok,
        reason: None,
        outputs: outs,
    });

    let manifest = Manifest {
        name: cfg.name.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: cfg.hash(),
        seed: cfg.seed,
        labels: labels.clone(),
        stages: r.stages,
    };
    let path = out.join("manifest.json");
    std::fs::write(&path, json(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(PipelineReport {
        manifest,
        path_points,
        table3,
        barriers,
        entropies,
        checks,
        zne,
    })
}

fn run_zne(r: &Run, z: &ZneStage, source: &[Solution], hams: &[PauliSum]) -> Result<(ZneSummary, Vec<String>)> {
    let labels = &r.cfg.labels;
    let device = match &z.noise {
        NoiseSpec::Depolarizing { error_1q, error_2q } => NoiseModel::depolarizing(r.coupling.n_qubits(), *error_1q, *error_2q)?,
        NoiseSpec::Calibration { path } => NoiseModel::read(path)?,
    };
    if device.n_qubits() < r.coupling.n_qubits() {
        return Err(Error::Config(format!(
            "noise model covers {} qubits, coupling map has {}",
            device.n_qubits(),
            r.coupling.n_qubits()
        )));
    }
    let shots = |seed| match z.shots {
        Some(s) => Shots::Sampled { shots: s, seed },
        None => Shots::Exact,
    };
    let opts = FitOptions {
        degrees: z.degrees.clone(),
        seed: r.cfg.seed,
        ..FitOptions::default()
    };
    let mut outs = Vec::new();
    let mut data = BTreeMap::new();
    let mut noiseless = BTreeMap::new();
    let mut unmitigated = BTreeMap::new();
    let mut fits = BTreeMap::new();
    let mut physical_qubits = BTreeMap::new();
    for (li, label) in labels.iter().enumerate() {
        if label != "300" && label != "030" {
            continue;
        }
        let sol = &source[li];
        let logical = sol
            .circuit
            .as_ref()
            .ok_or_else(|| Error::Data(format!("{} has no circuit for {label}", z.source)))?;
        let ex = executable(logical, &sol.layout, &hams[li], &r.coupling)?;
        let nm = device.restrict(&ex.physical)?;
        let label_seed = label.parse::<u64>().unwrap_or(0);
        let jobs: Vec<(f64, usize)> = z.lambdas.iter().flat_map(|&l| (0..z.replicates).map(move |k| (l, k))).collect();
        let values: Vec<f64> = jobs
            .par_iter()
            .map(|&(l, k)| {
                let seed = mix_seed(&[r.cfg.seed, label_seed, l.to_bits(), k as u64]);
                let folded = fold(&ex.circuit, l, seed)?;
                noisy_expectation(&folded, &ex.observable, &nm, shots(seed ^ 0x5107))
            })
            .collect::<Result<_>>()?;
        let d = ZneDataset::from_samples(jobs.iter().map(|j| j.0).zip(values))?;
        outs.push(r.write(format!("zne/{label}/samples.csv"), &samples_csv(&d))?);
        let fit = fit_extrapolate(&d, &opts)?;
        outs.push(r.write(format!("zne/{label}/fit.json"), &json(&fit)?)?);
        noiseless.insert(label.clone(), sol.energy);
        unmitigated.insert(label.clone(), d.means()[0]);
        fits.insert(label.clone(), fit);
        physical_qubits.insert(label.clone(), ex.physical);
        data.insert(label.clone(), d);
    }
    let (left, middle) = (&data["300"], &data["030"]);
    let fit_first = barrier_fit_first(left, middle, &opts)?;
    let diff_first = barrier_diff_first(left, middle, &opts)?;
    let degrees = (fits["300"].degree, fits["030"].degree);
    let bootstrap_fit_first = bootstrap_fit_first(left, middle, degrees, z.n_boot, r.cfg.seed)?;
    let diff = left.paired_difference(middle)?;
    let bootstrap_diff_first = bootstrap_interval(&diff, diff_first.fits[0].degree, z.n_boot, r.cfg.seed)?;
    let summary = ZneSummary {
        source: z.source,
        noiseless,
        unmitigated,
        fits,
        fit_first,
        diff_first,
        bootstrap_fit_first,
        bootstrap_diff_first,
        physical_qubits,
    };
    Ok((summary, outs))
}
