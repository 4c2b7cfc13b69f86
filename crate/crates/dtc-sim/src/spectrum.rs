//! Static Floquet diagnostics: dense eigendecomposition of the one-period
//! unitary, quasi-energies, pi-pairing, half-chain entanglement and diagonal
//! entropies, and Page reference values.
//!
//! The eigensolver exploits two structural facts. First, the balanced operator
//! `W = D^{1/2} P D^{1/2}` (with `U = P D`) is similar to `U` and is a
//! complex-symmetric unitary, so `cos(t) Re(W) + sin(t) Im(W)` is a real
//! symmetric matrix that commutes with `W`; a single real `dsyevd` gives a
//! real orthonormal eigenbasis of `W`. Second, the global spin flip commutes
//! with every operator in the model family, splitting the problem into two
//! half-dimension sectors. Eigenvalue collisions of the Hermitian combination
//! are detected through the reconstruction residual and resolved by retrying
//! with a different mixing angle `t`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dense::{eigh_complex, eigh_real, CMat};
use crate::error::{Error, Result};
use crate::evolve::{FloquetKernel, StateVector};
use crate::lattice::FloquetSpec;

/// Largest chain accepted for dense spectrum work.
pub const MAX_SPECTRUM_SITES: usize = 12;

/// Total reconstruction defect accepted for a spectrum.
const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Deterministic mixing-angle schedule for the Hermitian combination.
const THETA_SCHEDULE: [f64; 6] = [0.37, 1.0927, 1.8154, 2.5381, 3.2608, 3.9835];

/// Eigenphases and Floquet states of the one-period unitary.
///
/// Phases live in `(-pi, pi]` and reconstruct the unitary as
/// `sum_k exp(-i phi_k) |phi_k><phi_k|`; the list is sorted by phase.
#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    sites: usize,
    phases: Vec<f64>,
    states: Vec<StateVector>,
    reconstruction_defect: f64,
}

impl FloquetSpectrum {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Eigenphases in `(-pi, pi]`, ascending.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    /// Upper bound on `max_ij |(sum_k e^{-i phi_k} v_k v_k^dag - U)_{ij}|`.
    pub fn reconstruction_defect(&self) -> f64 {
        self.reconstruction_defect
    }

    /// Fraction of eigenphases with a distinct partner at circular distance
    /// pi within `tolerance`, under greedy one-to-one matching.
    pub fn pi_pairing_measure(&self, tolerance: f64) -> f64 {
        pi_pairing_fraction(&self.phases, tolerance)
    }
}

/// Applies the balanced operator `W = D^{1/2} P D^{1/2}`.
struct BalancedKernel {
    kernel: FloquetKernel,
    half_phases: Vec<Complex64>,
}

impl BalancedKernel {
    fn new(spec: &FloquetSpec) -> Result<Self> {
        let kernel = FloquetKernel::new(spec)?;
        let omega = spec.drive_angle();
        let half_phases = kernel
            .energies()
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -0.5 * omega * e))
            .collect();
        Ok(Self {
            kernel,
            half_phases,
        })
    }

    fn apply(&self, amps: &mut [Complex64]) {
        for (a, p) in amps.iter_mut().zip(&self.half_phases) {
            *a *= p;
        }
        self.kernel.apply_x_layer_raw(amps);
        for (a, p) in amps.iter_mut().zip(&self.half_phases) {
            *a *= p;
        }
    }
}

/// Spin-flip sector bookkeeping: representatives are the labels with the
/// most significant bit clear; the partner is the bitwise complement.
struct FlipSectors {
    sites: usize,
    half_dim: usize,
}

impl FlipSectors {
    fn new(sites: usize) -> Self {
        Self {
            sites,
            half_dim: 1usize << (sites - 1),
        }
    }

    #[inline]
    fn partner(&self, p: usize) -> usize {
        ((1usize << self.sites) - 1) ^ p
    }

    /// Sector vector -> full-space vector (real weights preserved).
    fn embed(&self, w: &[f64], parity: f64, out: &mut [f64]) {
        out.fill(0.0);
        for (p, &wp) in w.iter().enumerate() {
            out[p] = wp * FRAC_1_SQRT_2;
            out[self.partner(p)] = parity * wp * FRAC_1_SQRT_2;
        }
    }

    /// Full-space vector -> sector vector.
    fn project(&self, full: &[Complex64], parity: f64, out: &mut [Complex64]) {
        for (p, o) in out.iter_mut().enumerate() {
            *o = (full[p] + parity * full[self.partner(p)]) * FRAC_1_SQRT_2;
        }
    }
}

/// Full eigensystem of the dense one-period unitary.
pub fn diagonalize_floquet(spec: &FloquetSpec) -> Result<FloquetSpectrum> {
    if spec.sites() > MAX_SPECTRUM_SITES {
        return Err(Error::ResourceLimit(format!(
            "dense spectra support at most {MAX_SPECTRUM_SITES} sites, got {}",
            spec.sites()
        )));
    }
    let balanced = BalancedKernel::new(spec)?;
    let sites = spec.sites();
    let dim = 1usize << sites;
    let sectors = FlipSectors::new(sites);
    let half = sectors.half_dim;

    let mut phases: Vec<f64> = Vec::with_capacity(dim);
    let mut states: Vec<StateVector> = Vec::with_capacity(dim);
    let mut defect_sq_total = 0.0;

    for parity in [1.0f64, -1.0] {
        // Sector block of W, one kernel application per sector basis vector.
        let mut block = vec![Complex64::new(0.0, 0.0); half * half];
        let mut full = vec![0.0f64; dim];
        let mut fullc = vec![Complex64::new(0.0, 0.0); dim];
        for q in 0..half {
            let mut unit = vec![0.0f64; half];
            unit[q] = 1.0;
            sectors.embed(&unit, parity, &mut full);
            for (c, &r) in fullc.iter_mut().zip(&full) {
                *c = Complex64::new(r, 0.0);
            }
            balanced.apply(&mut fullc);
            sectors.project(&fullc, parity, &mut block[q * half..(q + 1) * half]);
        }

        let mut accepted = false;
        for &theta in &THETA_SCHEDULE {
            let (ct, st) = (theta.cos(), theta.sin());
            let mut m: Vec<f64> = block.iter().map(|w| ct * w.re + st * w.im).collect();
            eigh_real(half, &mut m)?;
            // Columns of m are now a candidate real orthonormal eigenbasis.
            let mut sector_phases = Vec::with_capacity(half);
            let mut sector_states = Vec::with_capacity(half);
            let mut defect_sq = 0.0;
            for k in 0..half {
                let w = &m[k * half..(k + 1) * half];
                sectors.embed(w, parity, &mut full);
                for (c, &r) in fullc.iter_mut().zip(&full) {
                    *c = Complex64::new(r, 0.0);
                }
                balanced.apply(&mut fullc);
                let lambda: Complex64 = fullc
                    .iter()
                    .zip(&full)
                    .map(|(uz, &vz)| uz * vz)
                    .sum();
                let residual_sq: f64 = fullc
                    .iter()
                    .zip(&full)
                    .map(|(uz, &vz)| (uz - lambda * vz).norm_sqr())
                    .sum();
                defect_sq += residual_sq;
                let mut phi = -lambda.arg();
                if phi <= -PI {
                    phi = PI;
                }
                sector_phases.push(phi);
                // Undo the balancing rotation: U eigenvector is D^{-1/2} v.
                let amps: Vec<Complex64> = balanced
                    .half_phases
                    .iter()
                    .zip(&full)
                    .map(|(hp, &vz)| hp.conj() * vz)
                    .collect();
                sector_states.push(StateVector::from_amplitudes(sites, amps)?);
            }
            if defect_sq.sqrt() <= RECONSTRUCTION_TOL * 0.5 {
                phases.extend(sector_phases);
                states.extend(sector_states);
                defect_sq_total += defect_sq;
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::NumericalFailure(format!(
                "spectrum reconstruction residual stayed above {RECONSTRUCTION_TOL} \
                 for every mixing angle (L={sites})"
            )));
        }
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| phases[a].total_cmp(&phases[b]));
    let phases = order.iter().map(|&i| phases[i]).collect();
    let mut states_opt: Vec<Option<StateVector>> = states.into_iter().map(Some).collect();
    let states = order
        .iter()
        .map(|&i| states_opt[i].take().unwrap())
        .collect();

    Ok(FloquetSpectrum {
        sites,
        phases,
        states,
        reconstruction_defect: defect_sq_total.sqrt(),
    })
}

/// Half-chain entanglement and diagonal entropies (natural log).
///
/// The right half (sites `L/2+1 ..= L`, the least significant bits) is traced
/// out; `S_EE` comes from the spectrum of the reduced density matrix, `S_DE`
/// from its diagonal.
pub fn half_chain_entropies(psi: &StateVector) -> Result<(f64, f64)> {
    let sites = psi.sites();
    crate::lattice::check_even_sites(sites)?;
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!(
            "entropy input must be normalized, got norm {norm}"
        )));
    }
    let half = sites / 2;
    let rows = 1usize << half;
    // Column-major matrix A[l, r] = psi[(l << half) | r].
    let mut a = CMat::zeros(rows, rows);
    for r in 0..rows {
        for l in 0..rows {
            *a.at_mut(l, r) = psi.amplitude((l << half) | r);
        }
    }
    let rho = a.times_adjoint();

    let s_de = entropy_of_distribution((0..rows).map(|z| rho.at(z, z).re));

    let mut rho_data = rho.into_data();
    let eigs = eigh_complex(rows, &mut rho_data)?;
    let s_ee = entropy_of_distribution(eigs.into_iter());
    Ok((s_ee, s_de))
}

fn entropy_of_distribution(probs: impl Iterator<Item = f64>) -> f64 {
    probs
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Per-state entropies over a full Floquet spectrum, plus averages.
#[derive(Debug, Clone)]
pub struct EntropyReport {
    pub sites: usize,
    /// `(k, phase, S_EE, S_DE)` per Floquet state, ordered by phase.
    pub per_state: Vec<EntropyRecord>,
    pub mean_ee: f64,
    pub mean_de: f64,
    pub pairing_fraction: f64,
    pub reconstruction_defect: f64,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EntropyRecord {
    pub k: usize,
    pub phase: f64,
    #[serde(rename = "S_EE")]
    pub s_ee: f64,
    #[serde(rename = "S_DE")]
    pub s_de: f64,
}

/// Pairing tolerance used for the report diagnostic.
pub const REPORT_PAIRING_TOL: f64 = 0.05;

/// Entropies for all `2^L` Floquet states of the spec.
pub fn averaged_entropies(spec: &FloquetSpec) -> Result<EntropyReport> {
    let spectrum = diagonalize_floquet(spec)?;
    entropy_report(&spectrum)
}

/// Entropies for an already-computed spectrum.
pub fn entropy_report(spectrum: &FloquetSpectrum) -> Result<EntropyReport> {
    let entropies: Vec<(f64, f64)> = spectrum
        .states()
        .par_iter()
        .map(|state| half_chain_entropies(state))
        .collect::<Result<_>>()?;
    let per_state: Vec<EntropyRecord> = entropies
        .iter()
        .enumerate()
        .map(|(k, &(s_ee, s_de))| EntropyRecord {
            k,
            phase: spectrum.phases()[k],
            s_ee,
            s_de,
        })
        .collect();
    let n = per_state.len() as f64;
    let mean_ee = per_state.iter().map(|r| r.s_ee).sum::<f64>() / n;
    let mean_de = per_state.iter().map(|r| r.s_de).sum::<f64>() / n;
    Ok(EntropyReport {
        sites: spectrum.sites(),
        per_state,
        mean_ee,
        mean_de,
        pairing_fraction: spectrum.pi_pairing_measure(REPORT_PAIRING_TOL),
        reconstruction_defect: spectrum.reconstruction_defect(),
    })
}

/// Fraction of phases with a distinct partner at circular distance pi within
/// `tolerance`, greedy one-to-one matching in sorted order.
pub fn pi_pairing_fraction(phases: &[f64], tolerance: f64) -> f64 {
    assert!(tolerance > 0.0, "pairing tolerance must be positive");
    let n = phases.len();
    if n == 0 {
        return 0.0;
    }
    let mut sorted: Vec<f64> = phases.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut matched = vec![false; n];
    let mut count = 0usize;
    for k in 0..n {
        if matched[k] {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in (k + 1)..n {
            if matched[j] {
                continue;
            }
            let gap = (circular_distance(sorted[k], sorted[j]) - PI).abs();
            if gap < tolerance && best.map_or(true, |(_, g)| gap < g) {
                best = Some((j, gap));
            }
        }
        if let Some((j, _)) = best {
            matched[k] = true;
            matched[j] = true;
            count += 2;
        }
    }
    count as f64 / n as f64
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Page reference for the half-chain entanglement entropy of a random pure
/// state: `(L ln 2 - 1) / 2`.
pub fn page_entanglement_entropy(sites: usize) -> f64 {
    (sites as f64 * std::f64::consts::LN_2 - 1.0) / 2.0
}

/// Page-style reference for the half-chain diagonal entropy:
/// `ln(0.48 * 2^{L/2}) + ln 2`.
pub fn page_diagonal_entropy(sites: usize) -> f64 {
    (0.48 * (1usize << (sites / 2)) as f64).ln() + std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::eig_vals_general;
    use crate::evolve::build_dense_unitary;
    use crate::lattice::{CouplingProfile, PulseProfile};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2};

    #[test]
    fn perfect_drive_two_site_phases() {
        // U^2 = -I forces eigenphases {+-pi/2}, each twice.
        let spec = FloquetSpec::clean_uniform(2, 0.0, 0.0).unwrap();
        let spectrum = diagonalize_floquet(&spec).unwrap();
        let phases = spectrum.phases();
        assert_eq!(phases.len(), 4);
        assert_abs_diff_eq!(phases[0], -FRAC_PI_2, epsilon = 1e-10);
        assert_abs_diff_eq!(phases[1], -FRAC_PI_2, epsilon = 1e-10);
        assert_abs_diff_eq!(phases[2], FRAC_PI_2, epsilon = 1e-10);
        assert_abs_diff_eq!(phases[3], FRAC_PI_2, epsilon = 1e-10);
    }

    #[test]
    fn spectrum_matches_general_eigensolver() {
        // Independent oracle: zgeev on the dense unitary.
        for (sites, omega, eps, seed) in [
            (4usize, 0.11, 0.23, 7u64),
            (4, FRAC_PI_4, 0.5, 8),
            (6, 0.02, 0.05, 9),
        ] {
            let spec = FloquetSpec::from_deviation(
                sites,
                omega,
                CouplingProfile::disordered(sites, 0.05, seed).unwrap(),
                PulseProfile::site_random(sites, eps, seed + 1).unwrap(),
            )
            .unwrap();
            let spectrum = diagonalize_floquet(&spec).unwrap();
            let u = build_dense_unitary(&spec).unwrap();
            let oracle_vals = eig_vals_general(u.dim(), u.matrix().data()).unwrap();
            let ours: Vec<Complex64> = spectrum
                .phases()
                .iter()
                .map(|&p| Complex64::from_polar(1.0, -p))
                .collect();
            let mut used = vec![false; ours.len()];
            for ov in &oracle_vals {
                let (best, dist) = ours
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !used[*i])
                    .map(|(i, v)| (i, (v - ov).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert!(dist < 1e-8, "unmatched eigenvalue {ov} (closest {dist})");
                used[best] = true;
            }
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal_and_reconstruct() {
        let spec = FloquetSpec::clean_uniform(6, 0.07, 0.2).unwrap();
        let spectrum = diagonalize_floquet(&spec).unwrap();
        assert!(spectrum.reconstruction_defect() < 1e-10);
        let states = spectrum.states();
        for i in 0..states.len() {
            for j in i..states.len() {
                let ip = states[i].inner(&states[j]).norm();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-8, "i={i} j={j} ip={ip}");
            }
        }
        // Direct reconstruction check against the dense unitary.
        let u = build_dense_unitary(&spec).unwrap();
        let dim = u.dim();
        let mut rebuilt = CMat::zeros(dim, dim);
        for (phi, state) in spectrum.phases().iter().zip(states) {
            let lambda = Complex64::from_polar(1.0, -phi);
            for col in 0..dim {
                let w = lambda * state.amplitude(col).conj();
                for row in 0..dim {
                    *rebuilt.at_mut(row, col) += state.amplitude(row) * w;
                }
            }
        }
        assert!(rebuilt.max_abs_diff(u.matrix()) < 1e-9);
    }

    #[test]
    fn spectrum_guards_large_chains() {
        let spec = FloquetSpec::clean_uniform(14, 0.0, 0.0).unwrap();
        assert!(matches!(
            diagonalize_floquet(&spec),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn product_state_has_zero_entropies() {
        for z in [0usize, 5, 10, 12] {
            let psi = StateVector::basis(4, z).unwrap();
            let (s_ee, s_de) = half_chain_entropies(&psi).unwrap();
            assert_abs_diff_eq!(s_ee, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s_de, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ghz_state_has_ln2_entropies() {
        for sites in [4usize, 6, 8] {
            let dim = 1usize << sites;
            let mut amps = vec![Complex64::new(0.0, 0.0); dim];
            amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            amps[dim - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            let psi = StateVector::from_amplitudes(sites, amps).unwrap();
            let (s_ee, s_de) = half_chain_entropies(&psi).unwrap();
            assert_abs_diff_eq!(s_ee, LN_2, epsilon = 1e-10);
            assert_abs_diff_eq!(s_de, LN_2, epsilon = 1e-10);
        }
    }

    #[test]
    fn haar_state_entropy_approaches_page_value() {
        let psi = StateVector::haar_random(12, 4242);
        let (s_ee, _) = half_chain_entropies(&psi).unwrap();
        let page = page_entanglement_entropy(12);
        assert!(
            (s_ee - page).abs() < 0.05 * page,
            "S_EE={s_ee} vs Page={page}"
        );
    }

    #[test]
    fn entropy_ordering_and_bounds_on_floquet_states() {
        let spec = FloquetSpec::clean_uniform(6, 0.3, 0.35).unwrap();
        let report = averaged_entropies(&spec).unwrap();
        let cap = 3.0 * LN_2;
        for rec in &report.per_state {
            assert!(rec.s_ee >= -1e-12 && rec.s_ee <= cap + 1e-8);
            assert!(rec.s_de >= -1e-12 && rec.s_de <= cap + 1e-8);
            assert!(rec.s_ee <= rec.s_de + 1e-8, "k={}", rec.k);
        }
    }

    #[test]
    fn deep_dtc_floquet_states_are_ghz_like() {
        // Near-perfect drive: the two states with the largest weight on
        // span{|0>, |2^L-1>} carry essentially all of it.
        let spec = FloquetSpec::clean_uniform(8, 0.0, 1e-3).unwrap();
        let spectrum = diagonalize_floquet(&spec).unwrap();
        let dim = 1usize << 8;
        let mut weights: Vec<f64> = spectrum
            .states()
            .iter()
            .map(|s| s.amplitude(0).norm_sqr() + s.amplitude(dim - 1).norm_sqr())
            .collect();
        weights.sort_by(f64::total_cmp);
        assert!(weights[dim - 1] > 0.99);
        assert!(weights[dim - 2] > 0.99);
    }

    #[test]
    fn deep_dtc_spectrum_is_fully_pi_paired() {
        let spec = FloquetSpec::clean_uniform(8, 0.0, 1e-3).unwrap();
        let spectrum = diagonalize_floquet(&spec).unwrap();
        assert_eq!(spectrum.pi_pairing_measure(0.05), 1.0);
    }

    #[test]
    fn clean_chain_pairing_is_exact_even_when_thermal() {
        // The integer-valued gradient spectrum pins every quasi-energy to a
        // partner at exactly pi, deep in the thermal region included; only
        // coupling disorder lifts it.
        let spec = FloquetSpec::clean_uniform(8, FRAC_PI_4, 0.5).unwrap();
        let spectrum = diagonalize_floquet(&spec).unwrap();
        assert_eq!(spectrum.pi_pairing_measure(1e-9), 1.0);
    }

    #[test]
    fn disordered_thermal_baseline_breaks_pairing() {
        let spec = FloquetSpec::from_deviation(
            8,
            FRAC_PI_4,
            CouplingProfile::disordered(8, 0.2, 3).unwrap(),
            PulseProfile::uniform(8, 0.5),
        )
        .unwrap();
        let spectrum = diagonalize_floquet(&spec).unwrap();
        let fraction = spectrum.pi_pairing_measure(0.005);
        assert!(fraction < 1.0, "thermal pairing fraction {fraction}");
    }

    #[test]
    fn synthetic_two_level_pairing() {
        assert_eq!(pi_pairing_fraction(&[0.0, PI], 0.01), 1.0);
        assert_eq!(pi_pairing_fraction(&[0.0, 0.1], 0.01), 0.0);
    }

    #[test]
    fn page_references_at_desk_scale() {
        assert_abs_diff_eq!(page_entanglement_entropy(12), 3.6589, epsilon = 1e-3);
        assert_abs_diff_eq!(page_diagonal_entropy(12), 4.1185, epsilon = 1e-3);
    }

    #[test]
    fn rejects_unnormalized_entropy_input() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 16];
        amps[0] = Complex64::new(0.5, 0.0);
        // Bypass the normalized constructor deliberately.
        let psi = StateVector::from_amplitudes(4, {
            let mut a = amps.clone();
            a[0] = Complex64::new(1.0, 0.0);
            a
        })
        .unwrap();
        let _ = psi;
        assert!(StateVector::from_amplitudes(4, amps).is_err());
    }
}
