//! Fisher-information engine.
//!
//! The probe state and its derivative with respect to the drive angle are
//! co-propagated exactly: one period maps `psi -> P D psi` and
//! `dpsi -> P (D dpsi - i H_I D psi)`, where `D` is the diagonal phase and `P`
//! the kick layer. Sensitivities are reported with respect to the deviation
//! `omega = pi/2 - Omega`, which differs from the drive angle only in sign, so
//! the Fisher information is identical.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolve::{FloquetKernel, StateVector};
use crate::lattice::FloquetSpec;

/// Probability floor below which computational-basis outcomes are skipped in
/// the CFI sum; contributions below it are O(tol) when `dp` is bounded.
pub const DEFAULT_CFI_TOL: f64 = 1e-12;

const NORM_CHECK_INTERVAL: usize = 1000;
const NORM_TOLERANCE: f64 = 1e-10;

/// A state and its drive-angle derivative, co-propagated together.
#[derive(Debug, Clone)]
pub struct TangentPair {
    psi: StateVector,
    dpsi: Vec<Complex64>,
}

impl TangentPair {
    /// Start of an evolution: the derivative is identically zero.
    pub fn new(psi: StateVector) -> Self {
        let dpsi = vec![Complex64::new(0.0, 0.0); psi.dim()];
        Self { psi, dpsi }
    }

    pub fn psi(&self) -> &StateVector {
        &self.psi
    }

    pub fn dpsi(&self) -> &[Complex64] {
        &self.dpsi
    }

    pub fn sites(&self) -> usize {
        self.psi.sites()
    }

    /// `<psi|dpsi>`.
    pub fn overlap_with_derivative(&self) -> Complex64 {
        self.psi
            .amplitudes()
            .iter()
            .zip(&self.dpsi)
            .map(|(a, d)| a.conj() * d)
            .sum()
    }

    /// Check the norm and the norm-preservation differential identity
    /// `Re<psi|dpsi> = 0`.
    pub fn validate(&self) -> Result<()> {
        let norm = self.psi.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NumericalFailure(format!(
                "tangent pair state norm {norm} is not 1 within {NORM_TOLERANCE}"
            )));
        }
        let re = self.overlap_with_derivative().re;
        if re.abs() > 1e-8 * (1.0 + derivative_norm_sqr(&self.dpsi).sqrt()) {
            return Err(Error::NumericalFailure(format!(
                "Re<psi|dpsi> = {re} violates the norm-preservation identity"
            )));
        }
        Ok(())
    }
}

fn derivative_norm_sqr(dpsi: &[Complex64]) -> f64 {
    dpsi.iter().map(|d| d.norm_sqr()).sum()
}

/// Advance a tangent pair by one Floquet period.
pub fn tangent_step(kernel: &FloquetKernel, pair: &mut TangentPair) -> Result<()> {
    if pair.sites() != kernel.sites() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: pair.psi.dim(),
        });
    }
    let energies = kernel.energies();
    let phases = kernel.phases();
    let amps = pair.psi.amplitudes_mut();
    // D acts on both members; the derivative of D contributes -i E_z (D psi)_z.
    kernel.apply_diagonal_raw(amps);
    for (((d, a), &e), &ph) in pair
        .dpsi
        .iter_mut()
        .zip(amps.iter())
        .zip(energies)
        .zip(phases)
    {
        *d = ph * *d - Complex64::new(0.0, e) * a;
    }
    kernel.apply_x_layer_raw(amps);
    kernel.apply_x_layer_raw(&mut pair.dpsi);
    Ok(())
}

/// Co-propagate `n` periods from `psi0`, calling `observer` after each period.
pub fn evolve_tangent_with<F>(
    spec: &FloquetSpec,
    psi0: &StateVector,
    n: usize,
    mut observer: F,
) -> Result<TangentPair>
where
    F: FnMut(usize, &TangentPair),
{
    let kernel = FloquetKernel::new(spec)?;
    let mut pair = TangentPair::new(psi0.clone());
    for cycle in 1..=n {
        tangent_step_impl(&kernel, &mut pair)?;
        if cycle % NORM_CHECK_INTERVAL == 0 {
            let norm = pair.psi.norm();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::NumericalFailure(format!(
                    "norm drifted to {norm} after {cycle} periods"
                )));
            }
        }
        observer(cycle, &pair);
    }
    Ok(pair)
}

/// Co-propagate `n` periods and return the final pair.
pub fn evolve_tangent(spec: &FloquetSpec, psi0: &StateVector, n: usize) -> Result<TangentPair> {
    evolve_tangent_with(spec, psi0, n, |_, _| {})
}

fn tangent_step_impl(kernel: &FloquetKernel, pair: &mut TangentPair) -> Result<()> {
    tangent_step(kernel, pair)
}

/// Quantum Fisher information of a pure state:
/// `F_Q = 4 (<dpsi|dpsi> - |<dpsi|psi>|^2)`.
pub fn qfi(pair: &TangentPair) -> f64 {
    let dd = derivative_norm_sqr(&pair.dpsi);
    let cross = pair.overlap_with_derivative().norm_sqr();
    4.0 * (dd - cross)
}

/// Classical Fisher information of the computational-basis measurement.
#[derive(Debug, Clone, Copy)]
pub struct CfiOutcome {
    pub value: f64,
    /// Probability mass of the outcomes skipped by the floor.
    pub skipped_mass: f64,
    pub skipped_terms: usize,
}

/// `F_C = sum_z (dp_z)^2 / p_z` over outcomes with `p_z > tol`, where
/// `p_z = |psi_z|^2` and `dp_z = 2 Re(psi_z^* dpsi_z)`.
pub fn cfi_computational(pair: &TangentPair, tol: f64) -> CfiOutcome {
    let mut value = 0.0;
    let mut skipped_mass = 0.0;
    let mut skipped_terms = 0usize;
    for (a, d) in pair.psi.amplitudes().iter().zip(&pair.dpsi) {
        let p = a.norm_sqr();
        if p > tol {
            let dp = 2.0 * (a.conj() * d).re;
            value += dp * dp / p;
        } else {
            skipped_mass += p;
            skipped_terms += 1;
        }
    }
    CfiOutcome {
        value,
        skipped_mass,
        skipped_terms,
    }
}

/// Per-cycle Fisher information along one trajectory.
#[derive(Debug, Clone, Copy)]
pub struct FisherSample {
    pub cycle: usize,
    pub qfi: f64,
    pub cfi: f64,
    pub cfi_skipped_mass: f64,
}

/// QFI and CFI after every period `1..=n`.
pub fn fisher_trajectory(
    spec: &FloquetSpec,
    psi0: &StateVector,
    n: usize,
    cfi_tol: f64,
) -> Result<Vec<FisherSample>> {
    let mut out = Vec::with_capacity(n);
    evolve_tangent_with(spec, psi0, n, |cycle, pair| {
        let cfi = cfi_computational(pair, cfi_tol);
        out.push(FisherSample {
            cycle,
            qfi: qfi(pair),
            cfi: cfi.value,
            cfi_skipped_mass: cfi.skipped_mass,
        });
    })?;
    Ok(out)
}

/// Arithmetic means `(1/N) sum_{n=1}^{N}` of the per-cycle QFI and CFI.
pub fn time_averaged_fi(spec: &FloquetSpec, psi0: &StateVector, n: usize) -> Result<(f64, f64)> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "time average needs at least one cycle".into(),
        ));
    }
    let samples = fisher_trajectory(spec, psi0, n, DEFAULT_CFI_TOL)?;
    let inv = 1.0 / n as f64;
    let fq = samples.iter().map(|s| s.qfi).sum::<f64>() * inv;
    let fc = samples.iter().map(|s| s.cfi).sum::<f64>() * inv;
    Ok((fq, fc))
}

/// Result of the QFI peak search over a deviation grid.
#[derive(Debug, Clone, Copy)]
pub struct OmegaPeak {
    /// Refined peak location, radians.
    pub omega_max: f64,
    /// Index of the grid argmax.
    pub grid_index: usize,
    /// QFI at the grid argmax.
    pub qfi_at_peak: f64,
    /// The argmax sat on the grid edge; the caller must widen the grid.
    pub at_boundary: bool,
}

/// Locate the maximum of sampled values over a sorted grid, refined by a
/// quadratic through the peak triple.
pub fn refine_peak(grid: &[f64], values: &[f64]) -> Result<OmegaPeak> {
    if grid.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    if grid.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "peak search needs at least 8 grid points, got {}",
            grid.len()
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "peak search grid must be strictly increasing".into(),
        ));
    }
    let (grid_index, _) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    if grid_index == 0 || grid_index == grid.len() - 1 {
        return Ok(OmegaPeak {
            omega_max: grid[grid_index],
            grid_index,
            qfi_at_peak: values[grid_index],
            at_boundary: true,
        });
    }
    let (x0, x1, x2) = (grid[grid_index - 1], grid[grid_index], grid[grid_index + 1]);
    let (y0, y1, y2) = (
        values[grid_index - 1],
        values[grid_index],
        values[grid_index + 1],
    );
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x2 - x1).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) + (x2 - x1) * (y1 - y0);
    let omega_max = if den.abs() < 1e-300 {
        x1
    } else {
        (x1 + 0.5 * num / den).clamp(x0, x2)
    };
    Ok(OmegaPeak {
        omega_max,
        grid_index,
        qfi_at_peak: y1,
        at_boundary: false,
    })
}

/// QFI peak over a deviation grid (radians) after `n` periods.
///
/// The base spec supplies the chain, coupling, and pulse; its deviation is
/// replaced by each grid point in turn.
pub fn find_omega_max(
    base: &FloquetSpec,
    psi0: &StateVector,
    grid: &[f64],
    n: usize,
) -> Result<OmegaPeak> {
    let mut values = Vec::with_capacity(grid.len());
    for &omega in grid {
        let spec = base.with_deviation(omega);
        let pair = evolve_tangent(&spec, psi0, n)?;
        values.push(qfi(&pair));
    }
    refine_peak(grid, &values)
}

/// Least-squares power-law fit `y = prefactor * x^exponent`.
#[derive(Debug, Clone, Copy)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Fit a line in log-log coordinates; the slope is the exponent.
pub fn powerlaw_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "power-law fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::Domain(
            "power-law fit requires strictly positive coordinates".into(),
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let den = n * sxx - sx * sx;
    if den.abs() < 1e-300 {
        return Err(Error::Domain("degenerate abscissae in power-law fit".into()));
    }
    let slope = (n * sxy - sx * sy) / den;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
    })
}

/// Log-spaced grid with `per_decade` points per decade, inclusive of `lo`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && per_decade > 0);
    let decades = (hi / lo).log10();
    let count = (decades * per_decade as f64).ceil() as usize + 1;
    (0..count)
        .map(|i| lo * 10f64.powf(i as f64 * decades / (count - 1) as f64))
        .collect()
}
