//! Spin-chain model definitions: basis encoding, gradient-Ising bond couplings,
//! pulse profiles, and initial states.
//!
//! Bit convention: a computational basis label `z = (j_1 j_2 ... j_L)_2` stores
//! site 1 in the most significant bit. `j_k = 0` means site `k` points up, so
//! `z = 0` is the all-up state and the spin value is `s_k = +1 - 2 j_k`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evolve::StateVector;

/// Name of the deterministic generator used for every seeded draw in this
/// crate; recorded in run manifests so ensembles are replayable.
pub const PRNG_NAME: &str = "chacha8";

/// A computational basis label for a chain of `sites` spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinBasisState {
    index: usize,
    sites: usize,
}

impl SpinBasisState {
    pub fn new(index: usize, sites: usize) -> Result<Self> {
        check_even_sites(sites)?;
        let dim = 1usize << sites;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, sites, dim });
        }
        Ok(Self { index, sites })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Spin value at 1-based site `k`: +1 for up, -1 for down.
    pub fn spin(&self, k: usize) -> i64 {
        debug_assert!(k >= 1 && k <= self.sites);
        1 - 2 * (((self.index >> (self.sites - k)) & 1) as i64)
    }

    /// Number of down spins (`u_z` in the dynamical-phase rule).
    pub fn down_count(&self) -> u32 {
        self.index.count_ones()
    }

    /// The global spin flip partner `2^L - 1 - z`.
    pub fn flipped(&self) -> Self {
        Self {
            index: ((1usize << self.sites) - 1) ^ self.index,
            sites: self.sites,
        }
    }
}

pub(crate) fn check_even_sites(sites: usize) -> Result<()> {
    if sites < 2 || sites % 2 != 0 {
        return Err(Error::UnsupportedConfiguration(format!(
            "site count must be even and >= 2, got {sites}"
        )));
    }
    Ok(())
}

/// Which disorder law produced a [`CouplingProfile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    Clean,
    Disordered,
}

/// Bond coefficients `c_j = j (1 - d_j)` for `j = 1..L-1`.
///
/// The clean profile has `d_j = 0`; the disordered one draws each `d_j`
/// uniformly from `[-D, D]`, reproducibly from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingProfile {
    coefficients: Vec<f64>,
    disorder: Vec<f64>,
    strength: f64,
    seed: Option<u64>,
    kind: CouplingKind,
}

impl CouplingProfile {
    pub fn clean(sites: usize) -> Self {
        let coefficients = (1..sites).map(|j| j as f64).collect();
        Self {
            coefficients,
            disorder: vec![0.0; sites.saturating_sub(1)],
            strength: 0.0,
            seed: None,
            kind: CouplingKind::Clean,
        }
    }

    pub fn disordered(sites: usize, strength: f64, seed: u64) -> Result<Self> {
        if !(strength >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "disorder strength must be >= 0, got {strength}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let disorder: Vec<f64> = if strength == 0.0 {
            vec![0.0; sites - 1]
        } else {
            let dist = Uniform::new_inclusive(-strength, strength);
            (1..sites).map(|_| dist.sample(&mut rng)).collect()
        };
        let coefficients = disorder
            .iter()
            .enumerate()
            .map(|(i, d)| (i + 1) as f64 * (1.0 - d))
            .collect();
        Ok(Self {
            coefficients,
            disorder,
            strength,
            seed: Some(seed),
            kind: CouplingKind::Disordered,
        })
    }

    pub fn bond_count(&self) -> usize {
        self.coefficients.len()
    }

    pub fn sites(&self) -> usize {
        self.coefficients.len() + 1
    }

    /// Coefficient of bond `j` (1-based, connecting sites `j` and `j+1`).
    pub fn coefficient(&self, j: usize) -> f64 {
        self.coefficients[j - 1]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_clean(&self) -> bool {
        self.kind == CouplingKind::Clean
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Which pulse-imperfection law produced a [`PulseProfile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseMode {
    Uniform,
    SiteRandom,
    Explicit,
}

/// Per-site rotation angles of the kick layer.
///
/// Uniform mode sets every angle to `(1 - eps) * pi/2`; site-random mode draws
/// `eps_j` uniformly from `[-eps, eps]` and sets `(1 - eps_j) * pi/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseProfile {
    angles: Vec<f64>,
    epsilon: f64,
    mode: PulseMode,
    seed: Option<u64>,
}

impl PulseProfile {
    pub fn uniform(sites: usize, epsilon: f64) -> Self {
        Self {
            angles: vec![(1.0 - epsilon) * FRAC_PI_2; sites],
            epsilon,
            mode: PulseMode::Uniform,
            seed: None,
        }
    }

    /// Explicit per-site angles (radians); no synthesis parameter applies.
    pub fn from_angles(angles: Vec<f64>) -> Self {
        Self {
            angles,
            epsilon: 0.0,
            mode: PulseMode::Explicit,
            seed: None,
        }
    }

    pub fn site_random(sites: usize, epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "pulse imperfection must be >= 0, got {epsilon}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angles: Vec<f64> = if epsilon == 0.0 {
            vec![FRAC_PI_2; sites]
        } else {
            let dist = Uniform::new_inclusive(-epsilon, epsilon);
            (0..sites)
                .map(|_| (1.0 - dist.sample(&mut rng)) * FRAC_PI_2)
                .collect()
        };
        Ok(Self {
            angles,
            epsilon,
            mode: PulseMode::SiteRandom,
            seed: Some(seed),
        })
    }

    pub fn sites(&self) -> usize {
        self.angles.len()
    }

    /// Angle at 1-based site `j`, in radians.
    pub fn angle(&self, j: usize) -> f64 {
        self.angles[j - 1]
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mode(&self) -> PulseMode {
        self.mode
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Full model specification for one Floquet evolution.
///
/// The stored primary parameter is the kick-free evolution angle `Omega`; the
/// deviation `omega = pi/2 - Omega` (signed, radians) is derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetSpec {
    sites: usize,
    drive_angle: f64,
    coupling: CouplingProfile,
    pulse: PulseProfile,
}

impl FloquetSpec {
    pub fn new(
        sites: usize,
        drive_angle: f64,
        coupling: CouplingProfile,
        pulse: PulseProfile,
    ) -> Result<Self> {
        check_even_sites(sites)?;
        if coupling.sites() != sites {
            return Err(Error::DimensionMismatch {
                expected: sites - 1,
                got: coupling.bond_count(),
            });
        }
        if pulse.sites() != sites {
            return Err(Error::DimensionMismatch {
                expected: sites,
                got: pulse.sites(),
            });
        }
        Ok(Self {
            sites,
            drive_angle,
            coupling,
            pulse,
        })
    }

    /// Build a spec from the deviation `omega = pi/2 - Omega` (signed, radians).
    pub fn from_deviation(
        sites: usize,
        omega: f64,
        coupling: CouplingProfile,
        pulse: PulseProfile,
    ) -> Result<Self> {
        Self::new(sites, FRAC_PI_2 - omega, coupling, pulse)
    }

    /// Clean chain with a uniform pulse; the common sweep configuration.
    pub fn clean_uniform(sites: usize, omega: f64, epsilon: f64) -> Result<Self> {
        Self::from_deviation(
            sites,
            omega,
            CouplingProfile::clean(sites),
            PulseProfile::uniform(sites, epsilon),
        )
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.sites
    }

    /// Kick-free evolution angle `Omega`, radians.
    pub fn drive_angle(&self) -> f64 {
        self.drive_angle
    }

    /// Signed deviation `omega = pi/2 - Omega`, radians.
    pub fn deviation(&self) -> f64 {
        FRAC_PI_2 - self.drive_angle
    }

    pub fn coupling(&self) -> &CouplingProfile {
        &self.coupling
    }

    pub fn pulse(&self) -> &PulseProfile {
        &self.pulse
    }

    /// Same chain with the deviation replaced; used by sweep drivers.
    pub fn with_deviation(&self, omega: f64) -> Self {
        Self {
            sites: self.sites,
            drive_angle: FRAC_PI_2 - omega,
            coupling: self.coupling.clone(),
            pulse: self.pulse.clone(),
        }
    }
}

/// Diagonal interaction energy `E_z = sum_j c_j s_j s_{j+1}`.
///
/// Integer-valued for the clean profile.
pub fn diag_energy(state: SpinBasisState, coupling: &CouplingProfile) -> Result<f64> {
    if coupling.sites() != state.sites() {
        return Err(Error::DimensionMismatch {
            expected: state.sites() - 1,
            got: coupling.bond_count(),
        });
    }
    Ok(diag_energy_unchecked(
        state.index(),
        state.sites(),
        coupling.coefficients(),
    ))
}

#[inline]
pub(crate) fn diag_energy_unchecked(z: usize, sites: usize, coefficients: &[f64]) -> f64 {
    // Bit b of z ^ (z >> 1) flags anti-aligned neighbors across bond L-1-b.
    let x = z ^ (z >> 1);
    let mut energy = 0.0;
    for (i, &c) in coefficients.iter().enumerate() {
        let j = i + 1; // bond index
        let bit = (x >> (sites - 1 - j)) & 1;
        energy += c * (1.0 - 2.0 * bit as f64);
    }
    energy
}

/// All `2^L` diagonal energies, indexed by the basis label.
pub fn diag_energies(sites: usize, coupling: &CouplingProfile) -> Result<Vec<f64>> {
    if coupling.sites() != sites {
        return Err(Error::DimensionMismatch {
            expected: sites - 1,
            got: coupling.bond_count(),
        });
    }
    let coefficients = coupling.coefficients();
    Ok((0..1usize << sites)
        .map(|z| diag_energy_unchecked(z, sites, coefficients))
        .collect())
}

/// Exact unit phase `(-i)^k` for integer `k`.
pub fn quarter_phase(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// Dynamical phase of a basis state under the clean quarter-period free
/// evolution: `(-i)^{L/2} (-1)^{u_z}`, equal to `exp(-i pi/2 E_z)` exactly.
pub fn dtc_phase(state: SpinBasisState) -> Result<Complex64> {
    check_even_sites(state.sites())?;
    let k = (state.sites() / 2) as i64 + 2 * state.down_count() as i64;
    Ok(quarter_phase(k))
}

/// Initial probe state selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    AllUp,
    Basis(usize),
    Neel,
    Random { seed: u64 },
}

/// The Neel basis label `(0101...01)_2` (alternating, site 1 up).
pub fn neel_index(sites: usize) -> usize {
    let mut z = 0usize;
    for k in 2..=sites {
        if k % 2 == 0 {
            z |= 1 << (sites - k);
        }
    }
    z
}

/// Materialize an initial state on `sites` spins.
pub fn initial_state(kind: InitialState, sites: usize) -> Result<StateVector> {
    check_even_sites(sites)?;
    match kind {
        InitialState::AllUp => StateVector::basis(sites, 0),
        InitialState::Basis(z) => StateVector::basis(sites, z),
        InitialState::Neel => StateVector::basis(sites, neel_index(sites)),
        InitialState::Random { seed } => Ok(StateVector::haar_random(sites, seed)),
    }
}
