//! Finite-size-scaling data collapse.
//!
//! Curve families `y_L(x)` are rescaled by `x' = L^{1/nu} (x - x_c)`,
//! `y' = L^{-zeta/nu} y` and scored with the Houdayer-Hartmann reduced
//! chi-square: each scaled point is compared against a local master-curve
//! estimate obtained from a weighted linear fit through the bracketing points
//! of the *other* sizes. A bounded Nelder-Mead simplex with jittered restarts
//! minimizes the quality over `(x_c, zeta, nu)`.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observation: control parameter, observable, error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

/// All observations for one system size.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeSeries {
    pub size: f64,
    pub points: Vec<DataPoint>,
}

/// A family of per-size curves, validated for collapse work.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFamily {
    series: Vec<SizeSeries>,
    /// True when sigmas were defaulted to 1; Q is then only a relative
    /// objective, not an absolute goodness-of-fit.
    uniform_sigma: bool,
}

impl CurveFamily {
    pub fn new(series: Vec<SizeSeries>) -> Result<Self> {
        Self::build(series, false)
    }

    /// Family without error estimates: assigns uniform `sigma = 1`.
    pub fn with_uniform_sigma(series: Vec<(f64, Vec<(f64, f64)>)>) -> Result<Self> {
        let series = series
            .into_iter()
            .map(|(size, pts)| SizeSeries {
                size,
                points: pts
                    .into_iter()
                    .map(|(x, y)| DataPoint { x, y, sigma: 1.0 })
                    .collect(),
            })
            .collect();
        Self::build(series, true)
    }

    /// Family with a proportional error model `sigma = fraction * |y|`,
    /// floored to keep weights finite; the default for exact-numerics data.
    pub fn with_proportional_sigma(
        series: Vec<(f64, Vec<(f64, f64)>)>,
        fraction: f64,
    ) -> Result<Self> {
        if !(fraction > 0.0) {
            return Err(Error::InvalidArgument(
                "sigma fraction must be positive".into(),
            ));
        }
        let series: Vec<SizeSeries> = series
            .into_iter()
            .map(|(size, pts)| {
                let floor = pts
                    .iter()
                    .map(|&(_, y): &(f64, f64)| y.abs())
                    .fold(0.0, f64::max)
                    * fraction
                    * 1e-6
                    + f64::MIN_POSITIVE;
                SizeSeries {
                    size,
                    points: pts
                        .into_iter()
                        .map(|(x, y)| DataPoint {
                            x,
                            y,
                            sigma: (fraction * y.abs()).max(floor),
                        })
                        .collect(),
                }
            })
            .collect();
        Self::build(series, false)
    }

    fn build(series: Vec<SizeSeries>, uniform_sigma: bool) -> Result<Self> {
        let mut sizes: Vec<f64> = series.iter().map(|s| s.size).collect();
        sizes.sort_by(f64::total_cmp);
        sizes.dedup();
        if sizes.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "collapse needs at least 3 distinct sizes, got {}",
                sizes.len()
            )));
        }
        for s in &series {
            if !(s.size > 0.0) {
                return Err(Error::Domain(format!("non-positive size {}", s.size)));
            }
            if s.points.windows(2).any(|w| w[0].x > w[1].x) {
                return Err(Error::InvalidArgument(format!(
                    "series for size {} is not sorted in x",
                    s.size
                )));
            }
            if s.points.iter().any(|p| !(p.sigma > 0.0)) {
                return Err(Error::Domain(format!(
                    "series for size {} carries non-positive sigma",
                    s.size
                )));
            }
        }
        Ok(Self {
            series,
            uniform_sigma,
        })
    }

    pub fn series(&self) -> &[SizeSeries] {
        &self.series
    }

    pub fn uniform_sigma(&self) -> bool {
        self.uniform_sigma
    }
}

/// Scaling parameters: critical point and exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseParams {
    pub x_c: f64,
    pub zeta: f64,
    pub nu: f64,
}

impl CollapseParams {
    pub fn new(x_c: f64, zeta: f64, nu: f64) -> Result<Self> {
        if nu == 0.0 || !nu.is_finite() {
            return Err(Error::Domain(format!("nu must be finite and nonzero, got {nu}")));
        }
        Ok(Self { x_c, zeta, nu })
    }
}

/// `x' = L^{1/nu}(x - x_c)`, `y' = L^{-zeta/nu} y`, `sigma' = L^{-zeta/nu} sigma`.
pub fn rescale(family: &CurveFamily, params: &CollapseParams) -> Result<CurveFamily> {
    if params.nu == 0.0 || !params.nu.is_finite() {
        return Err(Error::Domain("rescale needs nonzero finite nu".into()));
    }
    let series = family
        .series
        .iter()
        .map(|s| {
            let x_scale = s.size.powf(1.0 / params.nu);
            let y_scale = s.size.powf(-params.zeta / params.nu);
            SizeSeries {
                size: s.size,
                points: s
                    .points
                    .iter()
                    .map(|p| DataPoint {
                        x: x_scale * (p.x - params.x_c),
                        y: y_scale * p.y,
                        sigma: y_scale * p.sigma,
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(CurveFamily {
        series,
        uniform_sigma: family.uniform_sigma,
    })
}

/// Collapse quality and the point bookkeeping behind it.
#[derive(Debug, Clone, Copy)]
pub struct CollapseQuality {
    /// Reduced chi-square of scaled points against local master estimates;
    /// ~1 for a perfect collapse with honest error bars.
    pub q: f64,
    pub points_used: usize,
    pub points_excluded: usize,
}

/// Houdayer-Hartmann quality of the collapse at the given parameters.
pub fn collapse_quality(family: &CurveFamily, params: &CollapseParams) -> Result<CollapseQuality> {
    let scaled = rescale(family, params)?;
    let mut total = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;

    for (i, series) in scaled.series.iter().enumerate() {
        for point in &series.points {
            // Bracketing pairs from every other size; a size whose scaled
            // range does not cover this x contributes nothing, and a point
            // covered by no other size is excluded (extrapolation is not a
            // master-curve estimate).
            let mut sel: Vec<&DataPoint> = Vec::new();
            for (j, other) in scaled.series.iter().enumerate() {
                if j == i || other.points.is_empty() {
                    continue;
                }
                let pos = other.points.partition_point(|p| p.x <= point.x);
                if pos > 0 && pos < other.points.len() {
                    sel.push(&other.points[pos - 1]);
                    sel.push(&other.points[pos]);
                }
            }
            if sel.len() < 2 {
                excluded += 1;
                continue;
            }
            // Weighted line in coordinates centered at the query point; the
            // master value is the intercept and its variance is Ktt/Delta.
            let mut k = 0.0;
            let mut kt = 0.0;
            let mut ky = 0.0;
            let mut ktt = 0.0;
            let mut kty = 0.0;
            for p in &sel {
                let w = 1.0 / (p.sigma * p.sigma);
                let t = p.x - point.x;
                k += w;
                kt += w * t;
                ky += w * p.y;
                ktt += w * t * t;
                kty += w * t * p.y;
            }
            let delta = k * ktt - kt * kt;
            if !(delta > k * ktt * 1e-14) {
                excluded += 1;
                continue;
            }
            let master = (ktt * ky - kt * kty) / delta;
            let master_var = ktt / delta;
            let dev = point.y - master;
            total += dev * dev / (point.sigma * point.sigma + master_var);
            used += 1;
        }
    }
    if used < 2 {
        return Err(Error::Domain(format!(
            "degenerate collapse input: only {used} points have master estimates"
        )));
    }
    Ok(CollapseQuality {
        q: total / used as f64,
        points_used: used,
        points_excluded: excluded,
    })
}

/// Box bounds for the three collapse parameters.
#[derive(Debug, Clone, Copy)]
pub struct ParamBounds {
    pub x_c: (f64, f64),
    pub zeta: (f64, f64),
    pub nu: (f64, f64),
}

impl ParamBounds {
    fn as_arrays(&self) -> ([f64; 3], [f64; 3]) {
        (
            [self.x_c.0, self.zeta.0, self.nu.0],
            [self.x_c.1, self.zeta.1, self.nu.1],
        )
    }

    pub fn contains(&self, p: &CollapseParams) -> bool {
        p.x_c >= self.x_c.0
            && p.x_c <= self.x_c.1
            && p.zeta >= self.zeta.0
            && p.zeta <= self.zeta.1
            && p.nu >= self.nu.0
            && p.nu <= self.nu.1
    }
}

/// Optimizer knobs; the defaults match the intended use.
#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    pub max_iterations: usize,
    /// Stop when the simplex f-spread falls below this.
    pub f_tolerance: f64,
    /// Jittered restarts beyond the plain start.
    pub restarts: usize,
    pub jitter_seed: u64,
    /// Restart jitter as a fraction of each bound interval.
    pub jitter_scale: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            f_tolerance: 1e-10,
            restarts: 3,
            jitter_seed: 0x5ca1ab1e,
            jitter_scale: 0.15,
        }
    }
}

/// One recorded improvement during optimization.
#[derive(Debug, Clone, Copy)]
pub struct TraceEntry {
    pub evaluation: usize,
    pub params: CollapseParams,
    pub q: f64,
}

/// Result of a collapse optimization.
#[derive(Debug, Clone)]
pub struct CollapseResult {
    pub params: CollapseParams,
    pub q: f64,
    pub points_used: usize,
    pub points_excluded: usize,
    /// At least one restart terminated by simplex tolerance.
    pub converged: bool,
    /// `zeta/nu ~ 0`: the family shows no resolvable size dependence.
    pub degenerate: bool,
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
}

impl CollapseResult {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.converged {
            w.push("optimizer hit the iteration limit; best-so-far returned".into());
        }
        if self.degenerate {
            w.push("degenerate collapse: zeta/nu ~ 0 (no size dependence)".into());
        }
        w
    }
}

/// Minimize the collapse quality over `(x_c, zeta, nu)` with a bound-clipped
/// Nelder-Mead simplex and jittered restarts.
pub fn optimize_collapse(
    family: &CurveFamily,
    initial: CollapseParams,
    bounds: ParamBounds,
    options: OptimizeOptions,
) -> Result<CollapseResult> {
    if !bounds.contains(&initial) {
        return Err(Error::InvalidArgument(
            "initial collapse parameters lie outside the bounds".into(),
        ));
    }
    let (lo, hi) = bounds.as_arrays();
    let clip = |p: [f64; 3]| {
        let mut out = p;
        for d in 0..3 {
            out[d] = out[d].clamp(lo[d], hi[d]);
        }
        out
    };
    let mut evaluations = 0usize;
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut best_q = f64::INFINITY;

    let objective = |p: [f64; 3],
                     evaluations: &mut usize,
                     trace: &mut Vec<TraceEntry>,
                     best_q: &mut f64|
     -> f64 {
        let params = CollapseParams {
            x_c: p[0],
            zeta: p[1],
            nu: p[2],
        };
        *evaluations += 1;
        match collapse_quality(family, &params) {
            Ok(cq) => {
                if cq.q < *best_q {
                    *best_q = cq.q;
                    trace.push(TraceEntry {
                        evaluation: *evaluations,
                        params,
                        q: cq.q,
                    });
                }
                cq.q
            }
            Err(_) => f64::INFINITY,
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(options.jitter_seed);
    let start0 = [initial.x_c, initial.zeta, initial.nu];
    let mut best: Option<([f64; 3], f64)> = None;
    let mut any_converged = false;

    for restart in 0..=options.restarts {
        let start = if restart == 0 {
            start0
        } else {
            let mut s = start0;
            for d in 0..3 {
                let span = hi[d] - lo[d];
                s[d] += options.jitter_scale * span * (rng.gen::<f64>() - 0.5) * 2.0;
            }
            clip(s)
        };
        let (point, value, converged) = nelder_mead(
            |p| objective(p, &mut evaluations, &mut trace, &mut best_q),
            start,
            &lo,
            &hi,
            options.max_iterations,
            options.f_tolerance,
        );
        any_converged |= converged;
        if best.map_or(true, |(_, bv)| value < bv) {
            best = Some((point, value));
        }
    }

    let (point, q) = best.unwrap();
    let params = CollapseParams {
        x_c: point[0],
        zeta: point[1],
        nu: point[2],
    };
    let quality = collapse_quality(family, &params)?;
    let degenerate = (params.zeta / params.nu).abs() < 0.05;
    Ok(CollapseResult {
        params,
        q,
        points_used: quality.points_used,
        points_excluded: quality.points_excluded,
        converged: any_converged,
        degenerate,
        evaluations,
        trace,
    })
}

/// Standard Nelder-Mead with bound clipping. Returns (point, value, converged).
fn nelder_mead(
    mut f: impl FnMut([f64; 3]) -> f64,
    start: [f64; 3],
    lo: &[f64; 3],
    hi: &[f64; 3],
    max_iterations: usize,
    f_tolerance: f64,
) -> ([f64; 3], f64, bool) {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;
    let clip = |p: [f64; 3]| {
        let mut out = p;
        for d in 0..3 {
            out[d] = out[d].clamp(lo[d], hi[d]);
        }
        out
    };

    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    let v0 = f(start);
    simplex.push((start, v0));
    for d in 0..3 {
        let mut p = start;
        let step = 0.05 * (hi[d] - lo[d]);
        p[d] = if p[d] + step <= hi[d] {
            p[d] + step
        } else {
            p[d] - step
        };
        let p = clip(p);
        let v = f(p);
        simplex.push((p, v));
    }

    let mut converged = false;
    for _ in 0..max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[3].1 - simplex[0].1;
        if spread.abs() < f_tolerance {
            converged = true;
            break;
        }
        let mut centroid = [0.0f64; 3];
        for (p, _) in simplex.iter().take(3) {
            for d in 0..3 {
                centroid[d] += p[d] / 3.0;
            }
        }
        let worst = simplex[3];
        let reflect = clip(std::array::from_fn(|d| {
            centroid[d] + ALPHA * (centroid[d] - worst.0[d])
        }));
        let fr = f(reflect);
        if fr < simplex[0].1 {
            let expand = clip(std::array::from_fn(|d| {
                centroid[d] + GAMMA * (reflect[d] - centroid[d])
            }));
            let fe = f(expand);
            simplex[3] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (reflect, fr);
        } else {
            let contract = if fr < worst.1 {
                clip(std::array::from_fn(|d| {
                    centroid[d] + RHO * (reflect[d] - centroid[d])
                }))
            } else {
                clip(std::array::from_fn(|d| {
                    centroid[d] + RHO * (worst.0[d] - centroid[d])
                }))
            };
            let fc = f(contract);
            if fc < worst.1.min(fr) {
                simplex[3] = (contract, fc);
            } else {
                let best = simplex[0].0;
                for entry in simplex.iter_mut().skip(1) {
                    let shrunk = clip(std::array::from_fn(|d| {
                        best[d] + SIGMA * (entry.0[d] - best[d])
                    }));
                    *entry = (shrunk, f(shrunk));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1, converged)
}

/// Read a `L,x,y,sigma` CSV into a curve family. A missing or empty sigma
/// column falls back to uniform errors.
pub fn read_curve_family_csv(path: &Path) -> Result<CurveFamily> {
    #[derive(Deserialize)]
    struct Row {
        #[serde(rename = "L")]
        size: f64,
        x: f64,
        y: f64,
        #[serde(default)]
        sigma: Option<f64>,
    }
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let mut rows: Vec<Row> = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    let any_sigma = rows.iter().any(|r| r.sigma.is_some());
    let mut sizes: Vec<f64> = rows.iter().map(|r| r.size).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    let mut series = Vec::new();
    for &size in &sizes {
        let mut points: Vec<DataPoint> = rows
            .iter()
            .filter(|r| r.size == size)
            .map(|r| DataPoint {
                x: r.x,
                y: r.y,
                sigma: r.sigma.unwrap_or(1.0),
            })
            .collect();
        points.sort_by(|a, b| a.x.total_cmp(&b.x));
        series.push(SizeSeries { size, points });
    }
    let mut family = CurveFamily::new(series)?;
    family.uniform_sigma = !any_sigma;
    Ok(family)
}

/// Collapse summary written by the CLI.
#[derive(Debug, Serialize)]
pub struct CollapseSummary<'a> {
    pub x_c: f64,
    pub zeta: f64,
    pub nu: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub n_points_used: usize,
    pub n_points_excluded: usize,
    pub warnings: &'a [String],
}

pub fn write_collapse_json(path: &Path, result: &CollapseResult) -> Result<()> {
    let warnings = result.warnings();
    let summary = CollapseSummary {
        x_c: result.params.x_c,
        zeta: result.params.zeta,
        nu: result.params.nu,
        q: result.q,
        n_points_used: result.points_used,
        n_points_excluded: result.points_excluded,
        warnings: &warnings,
    };
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &summary)?;
    file.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    /// Synthetic family on the master curve G(u) = exp(-u^2) with
    /// y = L^{zeta/nu} G(L^{1/nu}(x - x_c)).
    fn synthetic_family(
        sizes: &[f64],
        truth: CollapseParams,
        points_per_size: usize,
        noise: f64,
        seed: u64,
        sigma_frac: f64,
    ) -> CurveFamily {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut series = Vec::new();
        for (s_idx, &size) in sizes.iter().enumerate() {
            let x_scale = size.powf(1.0 / truth.nu);
            let y_scale = size.powf(truth.zeta / truth.nu);
            // Stagger the grids so scaled points of different sizes interleave.
            let phase = 0.31 * s_idx as f64;
            let mut pts = Vec::new();
            for i in 0..points_per_size {
                let u = -2.5 + 5.0 * (i as f64 + phase) / points_per_size as f64;
                let x = truth.x_c + u / x_scale;
                let clean = y_scale * (-u * u).exp();
                let n: f64 = StandardNormal.sample(&mut rng);
                let y = clean * (1.0 + noise * n);
                pts.push((x, y));
            }
            series.push((size, pts));
        }
        CurveFamily::with_proportional_sigma(series, sigma_frac).unwrap()
    }

    fn truth() -> CollapseParams {
        CollapseParams {
            x_c: 3e-4,
            zeta: 3.0,
            nu: 1.0,
        }
    }

    #[test]
    fn rescale_identity_exponents() {
        // zeta=0, nu=1, x_c=0: x' = L x, y' = y.
        let family = CurveFamily::with_uniform_sigma(vec![
            (2.0, vec![(0.1, 1.0), (0.2, 2.0)]),
            (4.0, vec![(0.1, 1.0), (0.2, 2.0)]),
            (8.0, vec![(0.1, 1.0), (0.2, 2.0)]),
        ])
        .unwrap();
        let scaled = rescale(
            &family,
            &CollapseParams {
                x_c: 0.0,
                zeta: 0.0,
                nu: 1.0,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(scaled.series()[1].points[0].x, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(scaled.series()[1].points[0].y, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rescale_at_truth_collapses_synthetic_family() {
        let family = synthetic_family(&[8.0, 12.0, 16.0, 24.0], truth(), 40, 0.0, 1, 0.005);
        let scaled = rescale(&family, &truth()).unwrap();
        // Every scaled point must sit on exp(-x'^2).
        for s in scaled.series() {
            for p in &s.points {
                assert_abs_diff_eq!(p.y, (-p.x * p.x).exp(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rescale_rejects_zero_nu() {
        let family = synthetic_family(&[8.0, 12.0, 16.0], truth(), 10, 0.0, 1, 0.005);
        assert!(rescale(
            &family,
            &CollapseParams {
                x_c: 0.0,
                zeta: 1.0,
                nu: 0.0
            }
        )
        .is_err());
    }

    #[test]
    fn noiseless_quality_is_tiny() {
        // Flat-exponent truth keeps the nominal unit sigmas meaningful in
        // scaled units; dense sampling keeps the master interpolation error
        // orders of magnitude below them.
        let flat = CollapseParams {
            x_c: 3e-4,
            zeta: 0.0,
            nu: 1.0,
        };
        let mut family = synthetic_family(&[8.0, 12.0, 16.0, 24.0], flat, 150, 0.0, 1, 0.005);
        for s in &mut family.series {
            for p in &mut s.points {
                p.sigma = 1.0;
            }
        }
        let q = collapse_quality(&family, &flat).unwrap();
        assert!(q.q <= 1e-6, "noiseless Q = {}", q.q);
    }

    #[test]
    fn matched_noise_gives_reduced_chi_square_near_one() {
        let family = synthetic_family(&[8.0, 12.0, 16.0, 24.0], truth(), 160, 0.01, 77, 0.01);
        let q = collapse_quality(&family, &truth()).unwrap();
        assert!(
            (q.q - 1.0).abs() < 0.5,
            "Q = {} should be 1 +- 0.5 for matched noise",
            q.q
        );
    }

    #[test]
    fn wrong_exponent_inflates_quality() {
        let family = synthetic_family(&[8.0, 12.0, 16.0, 24.0], truth(), 160, 0.01, 77, 0.01);
        let q_true = collapse_quality(&family, &truth()).unwrap().q;
        let mut wrong = truth();
        wrong.nu *= 1.5;
        let q_wrong = collapse_quality(&family, &wrong).unwrap().q;
        assert!(
            q_wrong > 5.0 * q_true,
            "q_true={q_true} q_wrong={q_wrong}"
        );
    }

    #[test]
    fn quality_invariant_under_common_scaling() {
        let family = synthetic_family(&[8.0, 12.0, 16.0], truth(), 30, 0.01, 5, 0.01);
        let q1 = collapse_quality(&family, &truth()).unwrap().q;
        let mut scaled = family.clone();
        for s in &mut scaled.series {
            for p in &mut s.points {
                p.y *= 7.25;
                p.sigma *= 7.25;
            }
        }
        let q2 = collapse_quality(&scaled, &truth()).unwrap().q;
        assert_abs_diff_eq!(q1, q2, epsilon = 1e-12 * q1.max(1.0));
    }

    #[test]
    fn rescale_then_quality_composes() {
        // quality(rescale(F, p1), p2) == quality(F, p1 compose p2) when p2
        // keeps x_c = 0: 1/nu adds, zeta/nu adds.
        let family = synthetic_family(&[8.0, 12.0, 16.0], truth(), 30, 0.01, 5, 0.01);
        let p1 = CollapseParams {
            x_c: 3e-4,
            zeta: 1.2,
            nu: 0.8,
        };
        let p2 = CollapseParams {
            x_c: 0.0,
            zeta: 0.6,
            nu: 2.0,
        };
        let staged = collapse_quality(&rescale(&family, &p1).unwrap(), &p2).unwrap();
        let inv_nu = 1.0 / p1.nu + 1.0 / p2.nu;
        let zeta_over_nu = p1.zeta / p1.nu + p2.zeta / p2.nu;
        let composed = CollapseParams {
            x_c: p1.x_c,
            zeta: zeta_over_nu / inv_nu,
            nu: 1.0 / inv_nu,
        };
        let direct = collapse_quality(&family, &composed).unwrap();
        assert_abs_diff_eq!(staged.q, direct.q, epsilon = 1e-12 * direct.q.max(1.0));
        assert_eq!(staged.points_used, direct.points_used);
    }

    #[test]
    fn synthetic_recovery_within_five_percent() {
        let family = synthetic_family(&[8.0, 12.0, 16.0, 24.0], truth(), 160, 0.01, 2024, 0.01);
        let initial = CollapseParams {
            x_c: 5e-4,
            zeta: 2.5,
            nu: 1.3,
        };
        let bounds = ParamBounds {
            x_c: (0.0, 1e-3),
            zeta: (1.0, 5.0),
            nu: (0.3, 3.0),
        };
        let result =
            optimize_collapse(&family, initial, bounds, OptimizeOptions::default()).unwrap();
        let t = truth();
        assert!(
            (result.params.x_c - t.x_c).abs() <= 0.05 * t.x_c,
            "x_c = {}",
            result.params.x_c
        );
        assert!(
            (result.params.zeta - t.zeta).abs() <= 0.05 * t.zeta,
            "zeta = {}",
            result.params.zeta
        );
        assert!(
            (result.params.nu - t.nu).abs() <= 0.05 * t.nu,
            "nu = {}",
            result.params.nu
        );
        assert!(result.converged);
        assert!(!result.degenerate);
        assert!(!result.trace.is_empty());
    }

    #[test]
    fn identical_curves_flag_degenerate() {
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / 39.0;
                (x, (-x * x).exp() + 2.0)
            })
            .collect();
        let family = CurveFamily::with_proportional_sigma(
            vec![(8.0, pts.clone()), (12.0, pts.clone()), (16.0, pts)],
            0.01,
        )
        .unwrap();
        let result = optimize_collapse(
            &family,
            CollapseParams {
                x_c: 0.0,
                zeta: 0.3,
                nu: 1.0,
            },
            ParamBounds {
                x_c: (-0.5, 0.5),
                zeta: (-1.0, 2.0),
                nu: (0.3, 3.0),
            },
            OptimizeOptions::default(),
        )
        .unwrap();
        assert!(
            result.degenerate,
            "expected degenerate flag, zeta/nu = {}",
            result.params.zeta / result.params.nu
        );
    }

    #[test]
    fn family_validation() {
        // too few sizes
        assert!(CurveFamily::with_uniform_sigma(vec![
            (8.0, vec![(0.0, 1.0)]),
            (12.0, vec![(0.0, 1.0)]),
        ])
        .is_err());
        // unsorted x
        assert!(CurveFamily::new(vec![
            SizeSeries {
                size: 8.0,
                points: vec![
                    DataPoint {
                        x: 1.0,
                        y: 0.0,
                        sigma: 1.0
                    },
                    DataPoint {
                        x: 0.0,
                        y: 0.0,
                        sigma: 1.0
                    },
                ],
            },
            SizeSeries {
                size: 12.0,
                points: vec![],
            },
            SizeSeries {
                size: 16.0,
                points: vec![],
            },
        ])
        .is_err());
    }

    #[test]
    fn csv_roundtrip_and_json_summary() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("family.csv");
        std::fs::write(
            &csv_path,
            "L,x,y,sigma\n8,0.1,1.5,0.01\n8,0.2,1.1,0.01\n12,0.1,2.0,0.01\n12,0.2,1.4,0.01\n16,0.1,2.6,0.01\n16,0.2,1.8,0.01\n",
        )
        .unwrap();
        let family = read_curve_family_csv(&csv_path).unwrap();
        assert_eq!(family.series().len(), 3);
        assert!(!family.uniform_sigma());
        assert_eq!(family.series()[0].points.len(), 2);

        let family2 = synthetic_family(&[8.0, 12.0, 16.0, 24.0], truth(), 40, 0.01, 9, 0.01);
        let result = optimize_collapse(
            &family2,
            CollapseParams {
                x_c: 4e-4,
                zeta: 2.8,
                nu: 1.1,
            },
            ParamBounds {
                x_c: (0.0, 1e-3),
                zeta: (1.0, 5.0),
                nu: (0.3, 3.0),
            },
            OptimizeOptions::default(),
        )
        .unwrap();
        let json_path = dir.path().join("collapse.json");
        write_collapse_json(&json_path, &result).unwrap();
        let text = std::fs::read_to_string(&json_path).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(parsed["x_c"].is_number());
        assert!(parsed["Q"].is_number());
        assert!(parsed["n_points_used"].as_u64().unwrap() > 0);
    }
}
