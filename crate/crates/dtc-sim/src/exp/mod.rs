//! Batch experiment front-end: configuration ingestion, sweep orchestration
//! with deterministic per-unit seeds, disorder ensembles, CSV emitters, and
//! run manifests.

pub mod circuit;
pub mod figures;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{self, StateVector};
use crate::lattice::{
    CouplingProfile, FloquetSpec, InitialState, PulseProfile, PRNG_NAME,
};
use crate::metrology::{self, DEFAULT_CFI_TOL};
use crate::spectrum::{self, REPORT_PAIRING_TOL};

/// Largest chain accepted for kernel dynamics in a run.
pub const MAX_DYNAMICS_SITES: usize = evolve::MAX_KERNEL_SITES;
/// Largest chain accepted for dense-spectrum observables in a run.
pub const MAX_SPECTRUM_SITES: usize = spectrum::MAX_SPECTRUM_SITES;

/// Deviation grid specification: explicit values or log-spaced.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OmegaGrid {
    Explicit { values: Vec<f64> },
    LogSpaced { lo: f64, hi: f64, per_decade: usize },
}

impl OmegaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            OmegaGrid::Explicit { values } => {
                if values.is_empty() {
                    return Err(Error::Validation {
                        field: "omega_grid.values".into(),
                        message: "grid must be non-empty".into(),
                    });
                }
                Ok(values.clone())
            }
            OmegaGrid::LogSpaced { lo, hi, per_decade } => {
                if !(*lo > 0.0 && hi > lo && *per_decade > 0) {
                    return Err(Error::Validation {
                        field: "omega_grid".into(),
                        message: format!(
                            "log grid needs 0 < lo < hi and per_decade > 0, got lo={lo} hi={hi} per_decade={per_decade}"
                        ),
                    });
                }
                Ok(metrology::log_grid(*lo, *hi, *per_decade))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PulseModeConfig {
    Uniform,
    SiteRandom,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum InitialStateConfig {
    AllUp,
    Neel,
    Random,
    #[serde(untagged)]
    Basis {
        basis: usize,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Fidelity,
    Qfi,
    Cfi,
    Entropies,
    Pairing,
}

/// One batch-run request. A single JSON document, echoed into the manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    /// Chain sizes to sweep.
    pub sites: Vec<usize>,
    /// Deviation grid (radians).
    pub omega_grid: OmegaGrid,
    /// Pulse imperfection.
    pub epsilon: f64,
    pub pulse_mode: PulseModeConfig,
    /// Coupling disorder strength D (0 for the clean chain).
    #[serde(default)]
    pub coupling_disorder: f64,
    /// Disorder realizations per grid point.
    #[serde(default = "one")]
    pub realizations: usize,
    pub initial_state: InitialStateConfig,
    /// Cycle counts at which dynamical observables are recorded.
    #[serde(default)]
    pub cycles: Vec<usize>,
    pub observables: Vec<Observable>,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    /// Figure bundles to emit from the result set after the sweep.
    #[serde(default)]
    pub figures: Vec<String>,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sites.is_empty() {
            return Err(Error::Validation {
                field: "sites".into(),
                message: "at least one chain size is required".into(),
            });
        }
        for &l in &self.sites {
            if l < 2 || l % 2 != 0 {
                return Err(Error::Validation {
                    field: "sites".into(),
                    message: format!("site counts must be even and >= 2, got {l}"),
                });
            }
        }
        self.omega_grid.values()?;
        if !(self.epsilon >= 0.0) {
            return Err(Error::Validation {
                field: "epsilon".into(),
                message: format!("epsilon must be >= 0, got {}", self.epsilon),
            });
        }
        if !(self.coupling_disorder >= 0.0) {
            return Err(Error::Validation {
                field: "coupling_disorder".into(),
                message: format!("disorder must be >= 0, got {}", self.coupling_disorder),
            });
        }
        if self.realizations < 1 {
            return Err(Error::Validation {
                field: "realizations".into(),
                message: "at least one realization is required".into(),
            });
        }
        if self.observables.is_empty() {
            return Err(Error::Validation {
                field: "observables".into(),
                message: "at least one observable is required".into(),
            });
        }
        let dynamical = self.observables.iter().any(|o| {
            matches!(o, Observable::Fidelity | Observable::Qfi | Observable::Cfi)
        });
        if dynamical && self.cycles.is_empty() {
            return Err(Error::Validation {
                field: "cycles".into(),
                message: "dynamical observables need a non-empty cycle list".into(),
            });
        }
        if dynamical {
            if let Some(&l) = self.sites.iter().find(|&&l| l > MAX_DYNAMICS_SITES) {
                return Err(Error::ResourceLimit(format!(
                    "dynamics limited to L <= {MAX_DYNAMICS_SITES}; refusing L={l} \
                     (split the run or drop the size)"
                )));
            }
        }
        let spectral = self
            .observables
            .iter()
            .any(|o| matches!(o, Observable::Entropies | Observable::Pairing));
        if spectral {
            if let Some(&l) = self.sites.iter().find(|&&l| l > MAX_SPECTRUM_SITES) {
                return Err(Error::ResourceLimit(format!(
                    "dense spectra limited to L <= {MAX_SPECTRUM_SITES}; refusing L={l} \
                     (split the run or drop the size)"
                )));
            }
        }
        for f in &self.figures {
            figures::check_figure_id(f)?;
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)?;
        Ok(config)
    }
}

/// SplitMix64 finalizer; a bijection on u64.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Child seed for one work unit. Injective over `(grid_index, realization)`
/// for a fixed master seed: the pair is packed bijectively below the
/// documented bounds and pushed through a bijective mixer.
pub fn derive_seed(master_seed: u64, grid_index: usize, realization: usize) -> u64 {
    assert!(realization < 1 << 20, "realization index above 2^20");
    assert!((grid_index as u64) < 1 << 43, "grid index above 2^43");
    let packed = ((grid_index as u64) << 20) | realization as u64;
    splitmix64(master_seed ^ packed.wrapping_add(1))
}

/// Per-cycle fidelity record.
#[derive(Debug, Clone, Serialize)]
pub struct FidelityRow {
    #[serde(rename = "L")]
    pub sites: usize,
    pub omega_rad: f64,
    pub epsilon: f64,
    #[serde(rename = "D")]
    pub disorder: f64,
    pub realization: usize,
    pub seed: u64,
    pub n: usize,
    #[serde(rename = "F")]
    pub fidelity: f64,
}

/// Per-cycle Fisher-information record; the sweep CSV contract
/// `L,omega_rad,epsilon,n,FQ,FC,seed`.
#[derive(Debug, Clone, Serialize)]
pub struct FisherRow {
    #[serde(rename = "L")]
    pub sites: usize,
    pub omega_rad: f64,
    pub epsilon: f64,
    pub n: usize,
    #[serde(rename = "FQ")]
    pub qfi: f64,
    #[serde(rename = "FC")]
    pub cfi: f64,
    pub seed: u64,
}

/// Per-grid-point Floquet-spectrum summary.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummaryRow {
    #[serde(rename = "L")]
    pub sites: usize,
    pub omega_rad: f64,
    pub epsilon: f64,
    pub realization: usize,
    pub seed: u64,
    #[serde(rename = "S_EE_avg")]
    pub mean_ee: f64,
    #[serde(rename = "S_DE_avg")]
    pub mean_de: f64,
    pub pairing_fraction: f64,
    #[serde(rename = "page_S_EE")]
    pub page_ee: f64,
    #[serde(rename = "page_S_DE")]
    pub page_de: f64,
}

/// In-memory result of a run; merge several to pool sweeps (e.g. over
/// epsilon) before figure emission.
#[derive(Debug, Clone, Default)]
pub struct ResultSet {
    pub fidelity: Vec<FidelityRow>,
    pub fisher: Vec<FisherRow>,
    pub spectrum: Vec<SpectrumSummaryRow>,
}

impl ResultSet {
    pub fn merge(&mut self, other: ResultSet) {
        self.fidelity.extend(other.fidelity);
        self.fisher.extend(other.fisher);
        self.spectrum.extend(other.spectrum);
    }
}

/// Output of [`run`].
#[derive(Debug)]
pub struct RunOutput {
    pub results: ResultSet,
    pub csv_paths: Vec<PathBuf>,
    pub manifest_path: PathBuf,
}

struct WorkUnit {
    site_idx: usize,
    sites: usize,
    omega_idx: usize,
    omega: f64,
    realization: usize,
    seed: u64,
}

#[derive(Default)]
struct UnitOutput {
    fidelity: Vec<FidelityRow>,
    fisher: Vec<FisherRow>,
    spectrum: Vec<SpectrumSummaryRow>,
}

fn build_spec(config: &RunConfig, sites: usize, omega: f64, seed: u64) -> Result<FloquetSpec> {
    let coupling = if config.coupling_disorder > 0.0 {
        CouplingProfile::disordered(sites, config.coupling_disorder, splitmix64(seed ^ 0xC0))?
    } else {
        CouplingProfile::clean(sites)
    };
    let pulse = match config.pulse_mode {
        PulseModeConfig::Uniform => PulseProfile::uniform(sites, config.epsilon),
        PulseModeConfig::SiteRandom => {
            PulseProfile::site_random(sites, config.epsilon, splitmix64(seed ^ 0xB1))?
        }
    };
    FloquetSpec::from_deviation(sites, omega, coupling, pulse)
}

fn build_initial(config: &RunConfig, sites: usize, seed: u64) -> Result<StateVector> {
    let kind = match config.initial_state {
        InitialStateConfig::AllUp => InitialState::AllUp,
        InitialStateConfig::Neel => InitialState::Neel,
        InitialStateConfig::Random => InitialState::Random {
            seed: splitmix64(seed ^ 0xA2),
        },
        InitialStateConfig::Basis { basis } => InitialState::Basis(basis),
    };
    crate::lattice::initial_state(kind, sites)
}

fn run_unit(config: &RunConfig, unit: &WorkUnit) -> Result<UnitOutput> {
    let spec = build_spec(config, unit.sites, unit.omega, unit.seed)?;
    let mut out = UnitOutput::default();

    let want = |o: Observable| config.observables.contains(&o);
    let record: BTreeSet<usize> = config.cycles.iter().copied().collect();
    let max_cycle = record.iter().next_back().copied().unwrap_or(0);

    if want(Observable::Fidelity) {
        let psi0 = build_initial(config, unit.sites, unit.seed)?;
        evolve::evolve_with(&spec, &psi0, max_cycle, |cycle, psi| {
            if record.contains(&cycle) {
                out.fidelity.push(FidelityRow {
                    sites: unit.sites,
                    omega_rad: unit.omega,
                    epsilon: config.epsilon,
                    disorder: config.coupling_disorder,
                    realization: unit.realization,
                    seed: unit.seed,
                    n: cycle,
                    fidelity: psi0.overlap(psi),
                });
            }
        })?;
    }

    if want(Observable::Qfi) || want(Observable::Cfi) {
        let psi0 = build_initial(config, unit.sites, unit.seed)?;
        metrology::evolve_tangent_with(&spec, &psi0, max_cycle, |cycle, pair| {
            if record.contains(&cycle) {
                out.fisher.push(FisherRow {
                    sites: unit.sites,
                    omega_rad: unit.omega,
                    epsilon: config.epsilon,
                    n: cycle,
                    qfi: metrology::qfi(pair),
                    cfi: metrology::cfi_computational(pair, DEFAULT_CFI_TOL).value,
                    seed: unit.seed,
                });
            }
        })?;
    }

    if want(Observable::Entropies) || want(Observable::Pairing) {
        let report = spectrum::averaged_entropies(&spec)?;
        out.spectrum.push(SpectrumSummaryRow {
            sites: unit.sites,
            omega_rad: unit.omega,
            epsilon: config.epsilon,
            realization: unit.realization,
            seed: unit.seed,
            mean_ee: report.mean_ee,
            mean_de: report.mean_de,
            pairing_fraction: report.pairing_fraction,
            page_ee: spectrum::page_entanglement_entropy(unit.sites),
            page_de: spectrum::page_diagonal_entropy(unit.sites),
        });
    }

    Ok(out)
}

/// Execute the cross-product of grid points and realizations; write one CSV
/// per observable family plus a JSON manifest. Deterministic for a fixed
/// master seed: units compute in parallel but rows land in sweep order.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let started = std::time::Instant::now();
    let start_stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let omegas = config.omega_grid.values()?;

    let mut units = Vec::new();
    for (site_idx, &sites) in config.sites.iter().enumerate() {
        for (omega_idx, &omega) in omegas.iter().enumerate() {
            let grid_index = site_idx * omegas.len() + omega_idx;
            for realization in 0..config.realizations {
                units.push(WorkUnit {
                    site_idx,
                    sites,
                    omega_idx,
                    omega,
                    realization,
                    seed: derive_seed(config.master_seed, grid_index, realization),
                });
            }
        }
    }

    let mut outputs: Vec<(usize, UnitOutput)> = units
        .par_iter()
        .enumerate()
        .map(|(i, unit)| run_unit(config, unit).map(|o| (i, o)))
        .collect::<Result<_>>()?;
    outputs.sort_by_key(|(i, _)| *i);
    let _ = &units; // sweep order == unit construction order

    let mut results = ResultSet::default();
    for (_, o) in outputs {
        results.fidelity.extend(o.fidelity);
        results.fisher.extend(o.fisher);
        results.spectrum.extend(o.spectrum);
    }

    std::fs::create_dir_all(&config.output_dir)?;
    let mut csv_paths = Vec::new();
    if !results.fidelity.is_empty() {
        let path = config.output_dir.join("fidelity.csv");
        write_csv(&path, &results.fidelity)?;
        csv_paths.push(path);
        if config.realizations > 1 {
            let path = config.output_dir.join("fidelity_mean.csv");
            write_csv(&path, &ensemble_mean_fidelity(&results.fidelity))?;
            csv_paths.push(path);
        }
    }
    if !results.fisher.is_empty() {
        let path = config.output_dir.join("fisher.csv");
        write_csv(&path, &results.fisher)?;
        csv_paths.push(path);
        if config.realizations > 1 {
            let path = config.output_dir.join("fisher_mean.csv");
            write_csv(&path, &ensemble_mean_fisher(&results.fisher))?;
            csv_paths.push(path);
        }
    }
    if !results.spectrum.is_empty() {
        let path = config.output_dir.join("spectrum_summary.csv");
        write_csv(&path, &results.spectrum)?;
        csv_paths.push(path);
    }
    for figure in &config.figures {
        let path = figures::emit_figure_data(&results, figure, &config.output_dir)?;
        csv_paths.push(path);
    }

    let manifest_path = config.output_dir.join("manifest.json");
    let manifest = serde_json::json!({
        "config": config,
        "prng": PRNG_NAME,
        "seed_derivation": "splitmix64(master_seed xor ((grid_index << 20 | realization) + 1))",
        "grid_order": "sites outer, omega inner; grid_index = site_idx * n_omega + omega_idx",
        "omega_values": omegas,
        "cfi_probability_floor": DEFAULT_CFI_TOL,
        "pairing_tolerance": REPORT_PAIRING_TOL,
        "version": env!("CARGO_PKG_VERSION"),
        "started_unix": start_stamp,
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    let mut file = std::fs::File::create(&manifest_path)?;
    serde_json::to_writer_pretty(&mut file, &manifest)?;
    file.write_all(b"\n")?;

    Ok(RunOutput {
        results,
        csv_paths,
        manifest_path,
    })
}

/// Arithmetic ensemble mean of fidelity rows over realizations.
pub fn ensemble_mean_fidelity(rows: &[FidelityRow]) -> Vec<FidelityMeanRow> {
    let mut keys: Vec<(usize, u64, u64, usize)> = Vec::new();
    let mut acc: std::collections::BTreeMap<(usize, u64, u64, usize), (f64, usize)> =
        std::collections::BTreeMap::new();
    for r in rows {
        let key = (r.sites, r.omega_rad.to_bits(), r.epsilon.to_bits(), r.n);
        if !acc.contains_key(&key) {
            keys.push(key);
        }
        let e = acc.entry(key).or_insert((0.0, 0));
        e.0 += r.fidelity;
        e.1 += 1;
    }
    keys.into_iter()
        .map(|key| {
            let (sum, count) = acc[&key];
            FidelityMeanRow {
                sites: key.0,
                omega_rad: f64::from_bits(key.1),
                epsilon: f64::from_bits(key.2),
                n: key.3,
                fidelity_mean: sum / count as f64,
                realizations: count,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FidelityMeanRow {
    #[serde(rename = "L")]
    pub sites: usize,
    pub omega_rad: f64,
    pub epsilon: f64,
    pub n: usize,
    #[serde(rename = "F_mean")]
    pub fidelity_mean: f64,
    pub realizations: usize,
}

/// Arithmetic ensemble mean of Fisher rows over realizations.
pub fn ensemble_mean_fisher(rows: &[FisherRow]) -> Vec<FisherMeanRow> {
    let mut keys: Vec<(usize, u64, u64, usize)> = Vec::new();
    let mut acc: std::collections::BTreeMap<(usize, u64, u64, usize), (f64, f64, usize)> =
        std::collections::BTreeMap::new();
    for r in rows {
        let key = (r.sites, r.omega_rad.to_bits(), r.epsilon.to_bits(), r.n);
        if !acc.contains_key(&key) {
            keys.push(key);
        }
        let e = acc.entry(key).or_insert((0.0, 0.0, 0));
        e.0 += r.qfi;
        e.1 += r.cfi;
        e.2 += 1;
    }
    keys.into_iter()
        .map(|key| {
            let (fq, fc, count) = acc[&key];
            FisherMeanRow {
                sites: key.0,
                omega_rad: f64::from_bits(key.1),
                epsilon: f64::from_bits(key.2),
                n: key.3,
                qfi_mean: fq / count as f64,
                cfi_mean: fc / count as f64,
                realizations: count,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FisherMeanRow {
    #[serde(rename = "L")]
    pub sites: usize,
    pub omega_rad: f64,
    pub epsilon: f64,
    pub n: usize,
    #[serde(rename = "FQ_mean")]
    pub qfi_mean: f64,
    #[serde(rename = "FC_mean")]
    pub cfi_mean: f64,
    pub realizations: usize,
}

/// Serialize rows with a header, comma separators, `.` decimals, LF endings.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    std::fs::write(path, buf)?;
    Ok(())
}
