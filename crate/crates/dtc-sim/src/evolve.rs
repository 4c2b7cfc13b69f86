//! Floquet state-vector engine.
//!
//! One period applies the diagonal interaction phase `exp(-i Omega H_I)` and
//! then the kick layer `exp(-i H_P)` as in-place kernels, `O(L 2^L)` per
//! period. A dense one-period unitary is available for small chains as the
//! oracle path.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::CMat;
use crate::error::{Error, Result};
use crate::lattice::{diag_energies, CouplingProfile, FloquetSpec, PulseProfile};

/// Largest chain accepted by the dense-unitary builder.
pub const MAX_DENSE_SITES: usize = 12;
/// Largest chain accepted by the kernel evolution driver.
pub const MAX_KERNEL_SITES: usize = 24;
/// Periods between norm checkpoints during long evolutions.
const NORM_CHECK_INTERVAL: usize = 1000;
const NORM_TOLERANCE: f64 = 1e-10;

/// Normalized complex amplitude vector over the `2^L` basis labels.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    sites: usize,
}

impl StateVector {
    /// The basis state `|z>`.
    pub fn basis(sites: usize, z: usize) -> Result<Self> {
        crate::lattice::check_even_sites(sites)?;
        let dim = 1usize << sites;
        if z >= dim {
            return Err(Error::IndexOutOfRange {
                index: z,
                sites,
                dim,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[z] = Complex64::new(1.0, 0.0);
        Ok(Self { amps, sites })
    }

    /// Haar-random state: independent standard complex Gaussians, normalized.
    pub fn haar_random(sites: usize, seed: u64) -> Self {
        let dim = 1usize << sites;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> = (0..dim)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        let norm = l2_norm(&amps);
        for a in &mut amps {
            *a /= norm;
        }
        Self { amps, sites }
    }

    /// Wrap raw amplitudes; rejects vectors that are not normalized.
    pub fn from_amplitudes(sites: usize, amps: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << sites;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: amps.len(),
            });
        }
        let norm = l2_norm(&amps);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Domain(format!(
                "state vector norm {norm} is not 1 within {NORM_TOLERANCE}"
            )));
        }
        Ok(Self { amps, sites })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, z: usize) -> Complex64 {
        self.amps[z]
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Computational-basis probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

pub(crate) fn l2_norm(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Rotation coefficients `(cos phi, sin phi)` for one kick-layer site.
///
/// A stored angle bit-equal to `FRAC_PI_2` encodes the exact quarter-turn
/// pulse, so the exact coefficients are used; `cos(fl(pi/2))` would leave a
/// ~1e-16 residue on every unflipped path.
#[inline]
pub(crate) fn pulse_rotation(phi: f64) -> (f64, f64) {
    if phi == std::f64::consts::FRAC_PI_2 {
        (0.0, 1.0)
    } else if phi == 0.0 {
        (1.0, 0.0)
    } else {
        (phi.cos(), phi.sin())
    }
}

/// Precomputed per-spec tables: diagonal energies, one-period phases, and
/// kick-layer rotations.
#[derive(Debug, Clone)]
pub struct FloquetKernel {
    sites: usize,
    energies: Vec<f64>,
    phases: Vec<Complex64>,
    rotations: Vec<(f64, f64)>,
}

impl FloquetKernel {
    pub fn new(spec: &FloquetSpec) -> Result<Self> {
        if spec.sites() > MAX_KERNEL_SITES {
            return Err(Error::ResourceLimit(format!(
                "kernel evolution supports at most {MAX_KERNEL_SITES} sites, got {}",
                spec.sites()
            )));
        }
        let energies = diag_energies(spec.sites(), spec.coupling())?;
        let omega = spec.drive_angle();
        let phases = energies
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -omega * e))
            .collect();
        let rotations = spec
            .pulse()
            .angles()
            .iter()
            .map(|&phi| pulse_rotation(phi))
            .collect();
        Ok(Self {
            sites: spec.sites(),
            energies,
            phases,
            rotations,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.sites
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub(crate) fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    fn check_dim(&self, psi: &StateVector) -> Result<()> {
        if psi.sites() != self.sites {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        Ok(())
    }

    /// `psi_z <- exp(-i Omega E_z) psi_z`.
    pub fn apply_diagonal(&self, psi: &mut StateVector) -> Result<()> {
        self.check_dim(psi)?;
        self.apply_diagonal_raw(psi.amplitudes_mut());
        Ok(())
    }

    pub(crate) fn apply_diagonal_raw(&self, amps: &mut [Complex64]) {
        for (a, p) in amps.iter_mut().zip(&self.phases) {
            *a *= p;
        }
    }

    /// Apply the per-site x-rotation layer `prod_j exp(-i phi_j sigma^x_j)`.
    pub fn apply_x_layer(&self, psi: &mut StateVector) -> Result<()> {
        self.check_dim(psi)?;
        self.apply_x_layer_raw(psi.amplitudes_mut());
        Ok(())
    }

    pub(crate) fn apply_x_layer_raw(&self, amps: &mut [Complex64]) {
        let dim = amps.len();
        for (site_idx, &(c, s)) in self.rotations.iter().enumerate() {
            // 1-based site j maps to bit L - j.
            let bit = self.sites - (site_idx + 1);
            let stride = 1usize << bit;
            let ms = Complex64::new(0.0, -s);
            let mut base = 0;
            while base < dim {
                for i0 in base..base + stride {
                    let i1 = i0 + stride;
                    let a0 = amps[i0];
                    let a1 = amps[i1];
                    amps[i0] = c * a0 + ms * a1;
                    amps[i1] = ms * a0 + c * a1;
                }
                base += stride << 1;
            }
        }
    }

    /// One full period: diagonal phase, then kick layer.
    pub fn step(&self, psi: &mut StateVector) -> Result<()> {
        self.apply_diagonal(psi)?;
        self.apply_x_layer(psi)?;
        Ok(())
    }

    pub(crate) fn step_raw(&self, amps: &mut [Complex64]) {
        self.apply_diagonal_raw(amps);
        self.apply_x_layer_raw(amps);
    }
}

/// `exp(-i Omega H_I) |psi>` as a new state.
pub fn apply_diagonal(
    psi: &StateVector,
    drive_angle: f64,
    coupling: &CouplingProfile,
) -> Result<StateVector> {
    let energies = diag_energies(psi.sites(), coupling)?;
    let mut out = psi.clone();
    for (a, &e) in out.amplitudes_mut().iter_mut().zip(&energies) {
        *a *= Complex64::from_polar(1.0, -drive_angle * e);
    }
    Ok(out)
}

/// `exp(-i H_P) |psi>` as a new state.
pub fn apply_x_layer(psi: &StateVector, pulse: &PulseProfile) -> Result<StateVector> {
    if pulse.sites() != psi.sites() {
        return Err(Error::DimensionMismatch {
            expected: psi.sites(),
            got: pulse.sites(),
        });
    }
    let sites = psi.sites();
    let mut out = psi.clone();
    let amps = out.amplitudes_mut();
    for j in 1..=sites {
        let (c, s) = pulse_rotation(pulse.angle(j));
        let bit = sites - j;
        let stride = 1usize << bit;
        let ms = Complex64::new(0.0, -s);
        let mut base = 0;
        while base < amps.len() {
            for i0 in base..base + stride {
                let i1 = i0 + stride;
                let a0 = amps[i0];
                let a1 = amps[i1];
                amps[i0] = c * a0 + ms * a1;
                amps[i1] = ms * a0 + c * a1;
            }
            base += stride << 1;
        }
    }
    Ok(out)
}

/// One Floquet period applied to `psi`.
pub fn floquet_step(psi: &StateVector, spec: &FloquetSpec) -> Result<StateVector> {
    let kernel = FloquetKernel::new(spec)?;
    let mut out = psi.clone();
    kernel.step(&mut out)?;
    Ok(out)
}

/// Evolve `n` periods and return the final state. `n = 0` is the identity.
pub fn evolve(spec: &FloquetSpec, psi0: &StateVector, n: usize) -> Result<StateVector> {
    evolve_with(spec, psi0, n, |_, _| {})
}

/// Evolve `n` periods, invoking `observer(cycle, state)` after each period.
///
/// Trajectory recording is observable-based: the caller registers whatever
/// probe it needs instead of the engine storing `2^L x n` histories.
pub fn evolve_with<F>(
    spec: &FloquetSpec,
    psi0: &StateVector,
    n: usize,
    mut observer: F,
) -> Result<StateVector>
where
    F: FnMut(usize, &StateVector),
{
    let kernel = FloquetKernel::new(spec)?;
    kernel.check_dim(psi0)?;
    let mut psi = psi0.clone();
    for cycle in 1..=n {
        kernel.step(&mut psi)?;
        if cycle % NORM_CHECK_INTERVAL == 0 {
            let norm = psi.norm();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::NumericalFailure(format!(
                    "norm drifted to {norm} after {cycle} periods"
                )));
            }
        }
        observer(cycle, &psi);
    }
    Ok(psi)
}

/// Revival fidelity `F(nT) = |<psi0|U_F^n|psi0>|^2`.
pub fn revival_fidelity(spec: &FloquetSpec, psi0: &StateVector, n: usize) -> Result<f64> {
    let psi_n = evolve(spec, psi0, n)?;
    Ok(psi0.overlap(&psi_n))
}

/// Revival fidelity after every period `1..=n`.
pub fn fidelity_trajectory(spec: &FloquetSpec, psi0: &StateVector, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    evolve_with(spec, psi0, n, |_, psi| out.push(psi0.overlap(psi)))?;
    Ok(out)
}

/// Mean revival fidelity over an explicit stroboscopic cycle set.
pub fn average_fidelity(spec: &FloquetSpec, psi0: &StateVector, cycles: &[usize]) -> Result<f64> {
    if cycles.is_empty() {
        return Err(Error::InvalidArgument(
            "average_fidelity needs a non-empty cycle set".into(),
        ));
    }
    let max = *cycles.iter().max().unwrap();
    let mut wanted = vec![false; max + 1];
    for &c in cycles {
        wanted[c] = true;
    }
    let mut total = 0.0;
    let mut count = 0usize;
    if wanted[0] {
        total += 1.0;
        count += 1;
    }
    evolve_with(spec, psi0, max, |cycle, psi| {
        if wanted[cycle] {
            total += psi0.overlap(psi);
            count += 1;
        }
    })?;
    // Repeated entries in the cycle list count once per distinct cycle.
    Ok(total / count as f64)
}

/// Dense one-period unitary for small chains.
#[derive(Debug, Clone)]
pub struct DenseUnitary {
    mat: CMat,
    sites: usize,
}

impl DenseUnitary {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        let amps = self.mat.matvec(psi.amplitudes());
        Ok(StateVector {
            amps,
            sites: self.sites,
        })
    }

    /// `U * U`.
    pub fn squared(&self) -> CMat {
        self.mat.mul(&self.mat)
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.mat.unitarity_defect()
    }
}

/// Column `k` is one Floquet period applied to basis state `k`.
pub fn build_dense_unitary(spec: &FloquetSpec) -> Result<DenseUnitary> {
    if spec.sites() > MAX_DENSE_SITES {
        return Err(Error::ResourceLimit(format!(
            "dense unitary supports at most {MAX_DENSE_SITES} sites, got {}",
            spec.sites()
        )));
    }
    let kernel = FloquetKernel::new(spec)?;
    let dim = kernel.dim();
    let mut mat = CMat::zeros(dim, dim);
    for k in 0..dim {
        let col = mat.column_mut(k);
        col[k] = Complex64::new(1.0, 0.0);
        kernel.step_raw(col);
    }
    Ok(DenseUnitary {
        mat,
        sites: spec.sites(),
    })
}

/// One row of the optional trajectory dump.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TrajectoryRow {
    pub n: usize,
    #[serde(rename = "F")]
    pub fidelity: f64,
    pub norm: f64,
}

/// Write a `n,F,norm` trajectory CSV.
pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    file.write_all(&buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{initial_state, quarter_phase, InitialState};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_at_quarter_period_gives_dtc_phase() {
        let psi = StateVector::basis(4, 5).unwrap();
        let out = apply_diagonal(&psi, FRAC_PI_2, &CouplingProfile::clean(4)).unwrap();
        // E_5 = -6, so the phase is exp(3i pi) = -1.
        assert!((out.amplitude(5) - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn diagonal_at_zero_angle_is_identity() {
        let psi = StateVector::haar_random(4, 9);
        let out = apply_diagonal(&psi, 0.0, &CouplingProfile::clean(4)).unwrap();
        assert_eq!(psi.amplitudes(), out.amplitudes());
    }

    #[test]
    fn diagonal_global_phase_on_single_bond_pair() {
        // L=2: E_0 = E_3 = +1, so (|0>+|3>)/sqrt(2) picks up exp(-i pi/2).
        let amps = vec![
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ];
        let psi = StateVector::from_amplitudes(2, amps).unwrap();
        let out = apply_diagonal(&psi, FRAC_PI_2, &CouplingProfile::clean(2)).unwrap();
        let phase = c(0.0, -1.0);
        for z in [0usize, 3] {
            assert!((out.amplitude(z) - phase * psi.amplitude(z)).norm() < 1e-14);
        }
    }

    #[test]
    fn perfect_pulse_flips_every_basis_state_exactly() {
        for sites in [2usize, 4] {
            let pulse = PulseProfile::uniform(sites, 0.0);
            let dim = 1usize << sites;
            for z in 0..dim {
                let psi = StateVector::basis(sites, z).unwrap();
                let out = apply_x_layer(&psi, &pulse).unwrap();
                let expected = quarter_phase(sites as i64);
                assert_eq!(out.amplitude(dim - 1 - z), expected, "z={z}");
                let support: usize = out
                    .amplitudes()
                    .iter()
                    .filter(|a| a.norm_sqr() > 0.0)
                    .count();
                assert_eq!(support, 1);
            }
        }
    }

    #[test]
    fn zero_angle_pulse_is_identity() {
        let pulse = PulseProfile::uniform(4, 1.0); // angles (1-1) pi/2 = 0
        let psi = StateVector::haar_random(4, 3);
        let out = apply_x_layer(&psi, &pulse).unwrap();
        assert_eq!(psi.amplitudes(), out.amplitudes());
    }

    #[test]
    fn single_site_rotation_arithmetic() {
        // phi_1 = pi/4 on site 1 (most significant bit), phi_2 = 0:
        // |00> -> cos(pi/4)|00> - i sin(pi/4)|10>.
        let pulse = PulseProfile::from_angles(vec![FRAC_PI_4, 0.0]);
        let psi = StateVector::basis(2, 0).unwrap();
        let out = apply_x_layer(&psi, &pulse).unwrap();
        assert!((out.amplitude(0) - c(FRAC_PI_4.cos(), 0.0)).norm() < 1e-15);
        assert!((out.amplitude(2) - c(0.0, -FRAC_PI_4.sin())).norm() < 1e-15);
        assert!(out.amplitude(1).norm() < 1e-15);
        assert!(out.amplitude(3).norm() < 1e-15);
    }

    #[test]
    fn perfect_drive_first_period_is_orthogonal_flip() {
        for sites in [2usize, 4, 6] {
            let spec = FloquetSpec::clean_uniform(sites, 0.0, 0.0).unwrap();
            let psi0 = StateVector::basis(sites, 0).unwrap();
            let psi1 = floquet_step(&psi0, &spec).unwrap();
            assert_eq!(psi0.overlap(&psi1), 0.0);
            let dim = 1usize << sites;
            assert!(psi1.amplitude(dim - 1).norm() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn two_period_revival_for_any_imperfection() {
        // <z|U_F^2|z> = (-i)^L at Omega = pi/2, uniform and site-random.
        for (sites, z) in [(4usize, 5usize), (6, 11)] {
            for pulse in [
                PulseProfile::uniform(sites, 0.3),
                PulseProfile::site_random(sites, 0.3, 21).unwrap(),
            ] {
                let spec =
                    FloquetSpec::new(sites, FRAC_PI_2, CouplingProfile::clean(sites), pulse)
                        .unwrap();
                let psi0 = StateVector::basis(sites, z).unwrap();
                let psi2 = evolve(&spec, &psi0, 2).unwrap();
                let expected = quarter_phase(sites as i64);
                assert!(
                    (psi0.inner(&psi2) - expected).norm() < 1e-12,
                    "L={sites} z={z}"
                );
            }
        }
    }

    #[test]
    fn revival_fidelity_edge_cases() {
        let spec = FloquetSpec::clean_uniform(4, 0.0, 0.01).unwrap();
        let psi0 = initial_state(InitialState::AllUp, 4).unwrap();
        assert_eq!(revival_fidelity(&spec, &psi0, 0).unwrap(), 1.0);
        for n in [2usize, 10, 50] {
            assert_abs_diff_eq!(
                revival_fidelity(&spec, &psi0, n).unwrap(),
                1.0,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn average_fidelity_requires_cycles() {
        let spec = FloquetSpec::clean_uniform(4, 0.0, 0.01).unwrap();
        let psi0 = initial_state(InitialState::AllUp, 4).unwrap();
        assert!(average_fidelity(&spec, &psi0, &[]).is_err());
        let avg = average_fidelity(&spec, &psi0, &[2, 4, 6]).unwrap();
        assert_abs_diff_eq!(avg, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn dense_unitary_square_signs() {
        // L=2: L/2 odd, all E_z odd, U^2 = -I. L=4: L/2 even, U^2 = +I.
        for (sites, sign) in [(2usize, -1.0), (4, 1.0)] {
            let spec = FloquetSpec::clean_uniform(sites, 0.0, 0.0).unwrap();
            let u = build_dense_unitary(&spec).unwrap();
            assert!(u.unitarity_defect() < 1e-12);
            let sq = u.squared();
            let mut target = CMat::identity(u.dim());
            for k in 0..u.dim() {
                *target.at_mut(k, k) = c(sign, 0.0);
            }
            assert!(sq.max_abs_diff(&target) < 1e-12, "L={sites}");
        }
    }

    #[test]
    fn dense_unitary_square_diagonal_under_imperfection() {
        let spec = FloquetSpec::clean_uniform(4, 0.0, 0.17).unwrap();
        let u = build_dense_unitary(&spec).unwrap();
        let sq = u.squared();
        let expected = quarter_phase(4);
        for z in 0..u.dim() {
            assert!((sq.at(z, z) - expected).norm() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn dense_unitary_guards_large_chains() {
        let spec = FloquetSpec::clean_uniform(14, 0.0, 0.0).unwrap();
        assert!(matches!(
            build_dense_unitary(&spec),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn kernel_matches_dense_matrix() {
        let spec = FloquetSpec::new(
            4,
            FRAC_PI_2 - 0.07,
            CouplingProfile::disordered(4, 0.1, 5).unwrap(),
            PulseProfile::site_random(4, 0.2, 6).unwrap(),
        )
        .unwrap();
        let u = build_dense_unitary(&spec).unwrap();
        let psi0 = StateVector::haar_random(4, 7);
        let via_kernel = evolve(&spec, &psi0, 3).unwrap();
        let mut via_dense = psi0.clone();
        for _ in 0..3 {
            via_dense = u.apply(&via_dense).unwrap();
        }
        for z in 0..psi0.dim() {
            assert!((via_kernel.amplitude(z) - via_dense.amplitude(z)).norm() < 1e-12);
        }
    }

    #[test]
    fn norm_survives_long_evolution() {
        let spec = FloquetSpec::clean_uniform(8, 0.05, 0.1).unwrap();
        let psi0 = initial_state(InitialState::Neel, 8).unwrap();
        let psi = evolve(&spec, &psi0, 10_000).unwrap();
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn odd_cycles_are_exactly_dark_for_perfect_drive() {
        let spec = FloquetSpec::clean_uniform(6, 0.0, 0.0).unwrap();
        let psi0 = StateVector::basis(6, 9).unwrap();
        let traj = fidelity_trajectory(&spec, &psi0, 9).unwrap();
        for (i, f) in traj.iter().enumerate() {
            let n = i + 1;
            if n % 2 == 1 {
                assert_eq!(*f, 0.0, "n={n}");
            } else {
                assert_abs_diff_eq!(*f, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn trajectory_csv_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        write_trajectory_csv(
            &path,
            &[
                TrajectoryRow {
                    n: 1,
                    fidelity: 0.5,
                    norm: 1.0,
                },
                TrajectoryRow {
                    n: 2,
                    fidelity: 1.0,
                    norm: 1.0,
                },
            ],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "n,F,norm\n1,0.5,1.0\n2,1.0,1.0\n");
    }
}
