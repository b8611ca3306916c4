//! Command-line front end behind the `protonpipe` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::json;

use crate::adapt::{adapt_vqe, fermionic_generators, qubit_generators, AdaptOptions, AdaptState};
use crate::analysis::{density_csv, proton_density, proton_entropy, rate_constant_ratio, rate_sensitivity, OrbitalGrid};
use crate::aqc::{compile, AqcConfig, Preset};
use crate::circuit::{heavy_hex, transpile, Circuit, Layout};
use crate::error::{Error, Result};
use crate::fermion::{excitation_pool, qubit_pool, ModeLayout};
use crate::hamiltonian::{assemble, interpolate, parse_integrals, toy::toy_lmr, LmrWeights};
use crate::noise::{fold, noisy_expectation, NoiseModel, Shots};
use crate::pauli::PauliSum;
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::sim::{exact_ground_state, read_state, Sector, StateVector};
use crate::zne::{
    barrier_diff_first, barrier_fit_first, bootstrap_fit_first, bootstrap_interval, bootstrap_table, fit_extrapolate,
    FitOptions, ZneDataset,
};

#[derive(Parser, Debug)]
#[command(name = "protonpipe", version, about = "Electron–proton Hamiltonians to mitigated barrier heights")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Assemble (and interpolate) a qubit Hamiltonian.
    Ham {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Transpile a circuit onto a heavy-hex device and report two-qubit metrics.
    Circ {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        heavy_hex: usize,
        /// Physical qubit of each logical qubit, comma separated.
        #[arg(long, value_delimiter = ',')]
        layout: Option<Vec<usize>>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact ground state in the reference particle-number sector.
    Exact {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        occ: OccupationArgs,
    },
    /// ADAPT-VQE from the reference determinant.
    Adapt {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        occ: OccupationArgs,
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = PoolArg::Fermionic)]
        pool: PoolArg,
        /// Write the ADAPT state (JSON).
        #[arg(long)]
        state: Option<PathBuf>,
        /// Write the prepared circuit.
        #[arg(long)]
        circuit: Option<PathBuf>,
    },
    /// Compile a target state into a shallow block circuit.
    Aqc {
        /// ADAPT state JSON, or an amplitude file with `--amplitudes`.
        input: PathBuf,
        #[arg(long)]
        amplitudes: bool,
        #[arg(long, default_value = "high")]
        preset: Preset,
        /// Overrides the preset's fidelity target.
        #[arg(long)]
        fidelity: Option<f64>,
        #[arg(long, default_value_t = 1)]
        heavy_hex: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Noisy energy of a circuit against a Hamiltonian on the same register.
    Noise {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        hamiltonian: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Noise scale for gate folding.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Shots per Pauli term; exact expectations when absent.
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Extrapolate `lambda,…,energy` samples to zero noise.
    Zne {
        /// Samples of the Left (or only) state.
        samples: PathBuf,
        /// Samples of the Middle state: reports the barrier.
        #[arg(long)]
        middle: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        degrees: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        n_boot: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rate-constant ratio and sensitivity for a barrier.
    Rate {
        /// Barrier height, Ha.
        #[arg(long, allow_hyphen_values = true)]
        barrier: f64,
        /// Temperatures, K.
        #[arg(long, value_delimiter = ',', default_value = "120,300")]
        temperature: Vec<f64>,
        /// Barrier error for the sensitivity estimate, Ha.
        #[arg(long, allow_hyphen_values = true)]
        error: Option<f64>,
    },
    /// Proton density on a grid from a protonic 1-RDM.
    Density {
        /// Real 1-RDM as a JSON array of rows.
        #[arg(long)]
        gamma: PathBuf,
        /// Orbital grid JSON.
        #[arg(long)]
        grid: PathBuf,
        /// CSV `x,y,z,rho`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the full staged workflow from a JSON config.
    Pipeline {
        config: PathBuf,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct SystemArgs {
    /// Toy system `NE,NP` (electronic and protonic modes).
    #[arg(long, value_delimiter = ',', conflicts_with = "fcidump")]
    pub toy: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub toy_seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub toy_barrier: f64,
    /// One integral file, or Left, Middle and Right files.
    #[arg(long, num_args = 1..=3)]
    pub fcidump: Vec<PathBuf>,
    /// LMR point to interpolate to.
    #[arg(long, default_value = "300")]
    pub label: String,
}

impl SystemArgs {
    pub fn load(&self) -> Result<(ModeLayout, PauliSum)> {
        let sets = match (&self.toy, self.fcidump.len()) {
            (Some(t), _) if t.len() != 2 => {
                return Err(Error::Argument(format!("--toy takes NE,NP, got {} values", t.len())))
            }
            (Some(t), _) => toy_lmr(ModeLayout::new(t[0], t[1]), self.toy_seed, self.toy_barrier).to_vec(),
            (None, 1) => {
                let ints = parse_integrals(&self.fcidump[0])?;
                return Ok((ints.layout, assemble(&ints)?));
            }
            (None, 3) => self.fcidump.iter().map(parse_integrals).collect::<Result<_>>()?,
            _ => return Err(Error::Argument("give --toy NE,NP or one or three --fcidump files".into())),
        };
        let h: Vec<PauliSum> = sets.iter().map(assemble).collect::<Result<_>>()?;
        Ok((sets[0].layout, interpolate(&h[0], &h[1], &h[2], LmrWeights::from_label(&self.label)?)?))
    }
}

#[derive(Args, Debug)]
pub struct OccupationArgs {
    /// Occupied electronic modes of the reference.
    #[arg(long, value_delimiter = ',', required = true)]
    pub electrons: Vec<usize>,
    /// Occupied protonic modes of the reference.
    #[arg(long, value_delimiter = ',', required = true)]
    pub protons: Vec<usize>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct NoiseArgs {
    /// Calibration JSON.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Uniform depolarizing model `E1,E2`.
    #[arg(long, value_delimiter = ',')]
    pub depolarizing: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PoolArg {
    Fermionic,
    Qubit,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

/// `lambda[,replicate],energy` rows with a header line.
fn read_samples(path: &Path) -> Result<ZneDataset> {
    let text = read_text(path)?;
    let mut d = ZneDataset::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |msg: String| Error::Parse {
            path: path.into(),
            line: i + 1,
            msg,
        };
        if fields.len() < 2 {
            return Err(bad("expected `lambda,…,energy`".into()));
        }
        let l: f64 = fields[0].parse().map_err(|e| bad(format!("{e}")))?;
        let v: f64 = fields[fields.len() - 1].parse().map_err(|e| bad(format!("{e}")))?;
        d.push(l, v)?;
    }
    Ok(d)
}

fn sector(layout: ModeLayout, occ: &OccupationArgs) -> Sector {
    Sector {
        layout,
        n_electrons: occ.electrons.len(),
        n_protons: occ.protons.len(),
    }
}

/// Runs one command; the returned error carries the process exit code.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ham { system, output } => {
            let (_, h) = system.load()?;
            write_or_print(output.as_deref(), &h.to_text())
        }
        Command::Circ {
            input,
            heavy_hex: d,
            layout,
            output,
        } => {
            let c = Circuit::read(&input)?;
            let map = heavy_hex(d)?;
            let layout = layout.map_or(Layout::Trivial, Layout::Explicit);
            let t = transpile(&c, &map, &layout)?;
            let (count, depth) = t.circuit.two_qubit_metrics();
            let (src_count, src_depth) = c.two_qubit_metrics();
            if let Some(p) = output {
                t.circuit.write(p)?;
            }
            print_json(&json!({
                "source": { "two_qubit_count": src_count, "two_qubit_depth": src_depth },
                "transpiled": { "two_qubit_count": count, "two_qubit_depth": depth, "swaps": t.swaps_inserted },
                "final_layout": t.final_layout,
            }))
        }
        Command::Exact { system, occ } => {
            let (layout, h) = system.load()?;
            let g = exact_ground_state(&h, Some(&sector(layout, &occ)))?;
            print_json(&json!({
                "energy": g.energy,
                "dimension": g.dimension,
                "proton_entropy": proton_entropy(&g.state, &layout)?,
            }))
        }
        Command::Adapt {
            system,
            occ,
            threshold,
            pool,
            state,
            circuit,
        } => {
            let (layout, h) = system.load()?;
            let exact = exact_ground_state(&h, Some(&sector(layout, &occ)))?.energy;
            let p = excitation_pool(&layout, &occ.electrons, &occ.protons)?;
            let gens = match pool {
                PoolArg::Fermionic => fermionic_generators(&p, &layout)?,
                PoolArg::Qubit => qubit_generators(&qubit_pool(&p.qubit_images(&layout)?), layout.n_modes()),
            };
            let reference = layout.occupation_mask(&occ.electrons, &occ.protons)?;
            let s = adapt_vqe(&h, &gens, reference, &AdaptOptions::new(threshold, Some(exact)))?;
            if let Some(p) = state {
                std::fs::write(&p, s.to_json()?).map_err(|e| Error::io(&p, e))?;
            }
            let c = s.circuit()?;
            if let Some(p) = circuit {
                c.write(p)?;
            }
            let (count, depth) = c.two_qubit_metrics();
            print_json(&json!({
                "energy": s.energy(),
                "exact": exact,
                "error": s.energy() - exact,
                "status": s.status,
                "operators": s.selected.iter().map(|x| &x.label).collect::<Vec<_>>(),
                "two_qubit_count": count,
                "two_qubit_depth": depth,
            }))
        }
        Command::Aqc {
            input,
            amplitudes,
            preset,
            fidelity,
            heavy_hex: d,
            seed,
            output,
        } => {
            let target: StateVector = if amplitudes {
                read_state(&input)?
            } else {
                AdaptState::from_json(&read_text(&input)?)?.prepare()?
            };
            let map = heavy_hex(d)?;
            let mut cfg = AqcConfig::preset(preset, map.clone(), seed);
            if let Some(f) = fidelity {
                cfg.fidelity_target = f;
            }
            let res = compile(&target, &cfg)?;
            let t = transpile(&res.circuit, &map, &Layout::Explicit(res.layout.clone()))?;
            let (count, depth) = t.circuit.two_qubit_metrics();
            if let Some(p) = output {
                res.circuit.write(p)?;
            }
            print_json(&json!({
                "fidelity": res.fidelity(),
                "converged": res.converged,
                "blocks": res.blocks.len(),
                "layout": res.layout,
                "two_qubit_count": count,
                "two_qubit_depth": depth,
                "swaps": t.swaps_inserted,
            }))
        }
        Command::Noise {
            circuit,
            hamiltonian,
            noise,
            lambda,
            seed,
            shots,
        } => {
            let c = Circuit::read(&circuit)?;
            let h = PauliSum::from_text(&read_text(&hamiltonian)?, Some(c.n_qubits()))?;
            let n = c.n_qubits();
            let nm = match (noise.calibration, noise.depolarizing) {
                (Some(p), _) => NoiseModel::read(p)?.restrict(&(0..n).collect::<Vec<_>>())?,
                (None, Some(e)) if e.len() != 2 => {
                    return Err(Error::Argument(format!("--depolarizing takes E1,E2, got {} values", e.len())))
                }
                (None, Some(e)) => NoiseModel::depolarizing(n, e[0], e[1])?,
                (None, None) => unreachable!("clap enforces one noise source"),
            };
            let folded = fold(&c, lambda, seed)?;
            let shots = shots.map_or(Shots::Exact, |s| Shots::Sampled { shots: s, seed });
            let e = noisy_expectation(&folded, &h, &nm, shots)?;
            print_json(&json!({ "lambda": lambda, "energy": e, "two_qubit_count": folded.count_two_qubit() }))
        }
        Command::Zne {
            samples,
            middle,
            degrees,
            n_boot,
            seed,
        } => {
            let left = read_samples(&samples)?;
            let opts = FitOptions {
                degrees,
                seed,
                ..FitOptions::default()
            };
            match middle {
                None => {
                    let fit = fit_extrapolate(&left, &opts)?;
                    let boot = bootstrap_interval(&left, fit.degree, n_boot, seed)?;
                    print_json(&json!({ "fit": fit, "bootstrap": boot }))
                }
                Some(m) => {
                    let middle = read_samples(&m)?;
                    let ff = barrier_fit_first(&left, &middle, &opts)?;
                    let df = barrier_diff_first(&left, &middle, &opts)?;
                    let bff = bootstrap_fit_first(&left, &middle, (ff.fits[0].degree, ff.fits[1].degree), n_boot, seed)?;
                    let bdf = bootstrap_interval(&left.paired_difference(&middle)?, df.fits[0].degree, n_boot, seed)?;
                    eprint!("{}", bootstrap_table(&[("Fit first", &bff), ("Diff first", &bdf)], 2));
                    print_json(&json!({
                        "fit_first": ff,
                        "diff_first": df,
                        "bootstrap_fit_first": bff,
                        "bootstrap_diff_first": bdf,
                    }))
                }
            }
        }
        Command::Rate {
            barrier,
            temperature,
            error,
        } => {
            let rows = temperature
                .iter()
                .map(|&t| {
                    let mut row = json!({ "temperature": t, "ratio": rate_constant_ratio(barrier, t)? });
                    if let Some(de) = error {
                        let s = rate_sensitivity(de, t)?;
                        row["linearized"] = json!(s.linearized);
                        row["exact"] = json!(s.exact);
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            print_json(&json!({ "barrier": barrier, "rates": rows }))
        }
        Command::Density { gamma, grid, output } => {
            let rows: Vec<Vec<f64>> = serde_json::from_str(&read_text(&gamma)?)?;
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(Error::Dimension("1-RDM must be square".into()));
            }
            let g = DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0));
            let grid = OrbitalGrid::read(&grid)?;
            let d = proton_density(&g, &grid)?;
            if let Some(p) = output {
                std::fs::write(&p, density_csv(&grid, &d)).map_err(|e| Error::io(&p, e))?;
            }
            print_json(&json!({ "integral": d.integral, "mean_position": d.mean_position }))
        }
        Command::Pipeline { config, out } => {
            let cfg = PipelineConfig::read(&config)?;
            let report = run_pipeline(&cfg, &out)?;
            for b in &report.barriers {
                println!("{:<12} ΔE = {:>9.3} mHa", b.method.as_str(), b.delta * 1e3);
            }
            if let Some(s) = report.failed_stages().first() {
                return Err(Error::Stage {
                    stage: s.stage.clone(),
                    reason: s.reason.clone().unwrap_or_default(),
                });
            }
            Ok(())
        }
    }
}
