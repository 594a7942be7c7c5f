//! Twist-condition checks, twist intervals, and rotation-set sampling for
//! annulus lifts.
//!
//! The twist interval [ρ(f₀), ρ(f₁)] is computed from the two boundary
//! restrictions; per-point rotation data approximates the rotation set,
//! whose containment in the twist interval is checked with explicit finite-n
//! slack. Equality of boundary rotation numbers is never asserted: the
//! separation verdict is three-valued and reports failure-to-separate
//! instead.

use crate::circle::{rotation_number_adaptive, CircleError, RotationEstimate};
use crate::cover::{boundary_restriction, AnnulusLift, Boundary, CoverError};
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum AnnulusError {
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

impl From<crate::cover::EvalError> for AnnulusError {
    fn from(e: crate::cover::EvalError) -> Self {
        AnnulusError::Cover(CoverError::Eval(e))
    }
}

/// Sampled verification of the twist condition: x₁(x, ·) strictly
/// increasing in y.
#[derive(Debug, Clone)]
pub struct TwistReport {
    pub nx: usize,
    pub ny: usize,
    /// Smallest observed x₁(x, y₂) − x₁(x, y₁) over adjacent grid rows.
    pub min_increment: f64,
    /// Grid location (x, y_lo, y_hi) realizing the minimum.
    pub min_at: (f64, f64, f64),
    pub is_twist: bool,
    /// Largest observed |Δx₁/Δy|; feeds the Lipschitz bound heuristic for
    /// invariant-graph checks.
    pub lipschitz_hint: f64,
    pub tol: f64,
}

/// The pair (ρ(f₀), ρ(f₁)) with enclosures.
#[derive(Debug, Clone, Copy)]
pub struct TwistInterval {
    pub rho0: RotationEstimate,
    pub rho1: RotationEstimate,
}

impl TwistInterval {
    pub fn width(&self) -> f64 {
        self.rho1.value - self.rho0.value
    }
}

/// Three-valued boundary-twist verdict at a given tolerance. Equality can
/// never be certified numerically, only failure to separate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationVerdict {
    /// ρ(f₀) < ρ(f₁) certified: the enclosures are disjoint and ordered.
    Separated,
    /// Enclosures overlap at this tolerance.
    Undecided,
    /// ρ(f₀) > ρ(f₁) certified (impossible for a twist map).
    Inverted,
}

/// Per-point rotation data: subsequence extremes approximating the upper
/// and lower rotation numbers, plus the full-orbit average.
#[derive(Debug, Clone, Copy)]
pub struct RotationSample {
    pub point: (f64, f64),
    /// Max of (x̃ₖ − x̃)/k over the checkpoint window (limsup proxy).
    pub upper: f64,
    /// Min over the checkpoint window (liminf proxy).
    pub lower: f64,
    /// Full-orbit average (x̃ₙ − x̃)/n; deviates from a true rotation
    /// number by at most 1/n plus numeric slack.
    pub mean: f64,
    pub n: u64,
    pub window: usize,
    /// Smallest checkpoint index contributing to upper/lower.
    pub k_min: u64,
}

/// Binned rotation values.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn build(values: &[f64], bins: usize) -> Histogram {
        assert!(bins >= 1);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || hi <= lo {
            return Histogram {
                lo,
                hi: lo,
                bin_width: 0.0,
                counts: vec![values.len() as u64],
            };
        }
        let bin_width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for &v in values {
            let idx = (((v - lo) / bin_width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Histogram { lo, hi, bin_width, counts }
    }

    /// Fraction of binned values lying within `dist` of any target value.
    /// Computed from bin centers, so `dist` should exceed half a bin width.
    pub fn mass_near(&self, targets: &[f64], dist: f64) -> f64 {
        let total: u64 = self.counts.iter().sum();
        if total == 0 {
            return 0.0;
        }
        if self.bin_width == 0.0 {
            let near = targets.iter().any(|t| (t - self.lo).abs() <= dist);
            return if near { 1.0 } else { 0.0 };
        }
        let mut near = 0u64;
        for (i, &c) in self.counts.iter().enumerate() {
            let center = self.lo + (i as f64 + 0.5) * self.bin_width;
            if targets.iter().any(|t| (center - t).abs() <= dist) {
                near += c;
            }
        }
        near as f64 / total as f64
    }
}

/// Containment check of sampled rotation data against the twist interval.
#[derive(Debug, Clone)]
pub struct ContainmentReport {
    pub rho0: RotationEstimate,
    pub rho1: RotationEstimate,
    /// Finite-orbit slack added on each side: 1/n plus numeric slack.
    pub slack: f64,
    pub contained: bool,
    /// Smallest sample mean minus the inflated lower bound (negative noise
    /// means a violation).
    pub margin_low: f64,
    pub margin_high: f64,
}

/// Sampled rotation-set evidence: per-point data, hull of full-orbit
/// averages, histogram, and the twist-interval containment verdict.
#[derive(Debug, Clone)]
pub struct RotationSetEstimate {
    pub samples: Vec<RotationSample>,
    /// Interval spanned by the full-orbit averages.
    pub hull: (f64, f64),
    /// Interval spanned by the checkpoint extremes [min lower, max upper];
    /// wider than `hull` by design (subsequence oscillation).
    pub envelope: (f64, f64),
    pub histogram: Histogram,
    pub containment: ContainmentReport,
}

impl RotationSetEstimate {
    /// Fraction of sample means within `dist` of any target value,
    /// computed from the raw values rather than histogram bins.
    pub fn mass_near(&self, targets: &[f64], dist: f64) -> f64 {
        let near = self
            .samples
            .iter()
            .filter(|s| targets.iter().any(|t| (s.mean - t).abs() <= dist))
            .count();
        near as f64 / self.samples.len().max(1) as f64
    }
}

/// Uniform grid on the annulus: x over [0,1) half-open, y over [0,1]
/// inclusive of both boundaries.
pub fn unit_grid(nx: usize, ny: usize) -> Vec<(f64, f64)> {
    assert!(nx >= 1 && ny >= 2);
    let mut pts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = j as f64 / (ny - 1) as f64;
        for i in 0..nx {
            let x = i as f64 / nx as f64;
            pts.push((x, y));
        }
    }
    pts
}

/// Evaluates x₁(x, ·) on an nx × ny grid and reports the minimal increment
/// over adjacent y pairs. `is_twist` iff that minimum exceeds `tol`.
pub fn check_twist(
    f: &AnnulusLift,
    nx: usize,
    ny: usize,
    tol: f64,
) -> Result<TwistReport, AnnulusError> {
    assert!(nx >= 2 && ny >= 2);
    let mut min_increment = f64::INFINITY;
    let mut min_at = (0.0, 0.0, 0.0);
    let mut lipschitz_hint: f64 = 0.0;
    for i in 0..nx {
        let x = i as f64 / nx as f64;
        let mut prev_y = 0.0;
        let (mut prev_x1, _) = f.eval(x, 0.0)?;
        for j in 1..ny {
            let y = j as f64 / (ny - 1) as f64;
            let (x1, _) = f.eval(x, y)?;
            let inc = x1 - prev_x1;
            if inc < min_increment {
                min_increment = inc;
                min_at = (x, prev_y, y);
            }
            lipschitz_hint = lipschitz_hint.max((inc / (y - prev_y)).abs());
            prev_x1 = x1;
            prev_y = y;
        }
    }
    Ok(TwistReport {
        nx,
        ny,
        min_increment,
        min_at,
        is_twist: min_increment > tol,
        lipschitz_hint,
        tol,
    })
}

/// Rotation numbers of the two boundary restrictions, each resolved to
/// halfwidth `tol`. The lift must already be normalized.
pub fn twist_interval(f: &AnnulusLift, tol: f64) -> Result<TwistInterval, AnnulusError> {
    let rho0 = rotation_number_adaptive(&boundary_restriction(f, Boundary::Lower), tol)?;
    let rho1 = rotation_number_adaptive(&boundary_restriction(f, Boundary::Upper), tol)?;
    Ok(TwistInterval { rho0, rho1 })
}

/// Certified comparison of the boundary rotation numbers at tolerance
/// `tol`.
pub fn boundary_twist_condition(
    f: &AnnulusLift,
    tol: f64,
) -> Result<(SeparationVerdict, TwistInterval), AnnulusError> {
    let ti = twist_interval(f, tol)?;
    let verdict = if ti.rho0.upper() < ti.rho1.lower() {
        SeparationVerdict::Separated
    } else if ti.rho1.upper() < ti.rho0.lower() {
        SeparationVerdict::Inverted
    } else {
        SeparationVerdict::Undecided
    };
    Ok((verdict, ti))
}

/// Checkpoint schedule: geometrically spaced indices (ratio 3/2) up to and
/// including n.
fn checkpoints(n: u64) -> Vec<u64> {
    let mut ks = Vec::new();
    let mut k: u64 = 1;
    while k < n {
        ks.push(k);
        k = (k + 1).max(k * 3 / 2);
    }
    ks.push(n);
    ks
}

/// Iterates `n` steps from `p` and reads displacement averages at
/// geometrically spaced checkpoints; `upper`/`lower` are the extremes over
/// the last `window` checkpoints, approximating the upper and lower
/// rotation numbers of the orbit.
pub fn rotation_sample(
    f: &AnnulusLift,
    p: (f64, f64),
    n: u64,
    window: usize,
) -> Result<RotationSample, AnnulusError> {
    assert!(n >= 1 && window >= 1 && n >= window as u64);
    let ks = checkpoints(n);
    let tail_start = ks.len().saturating_sub(window);
    let tail = &ks[tail_start..];
    let k_min = tail[0];

    let (x0, y0) = p;
    let (mut x, mut y) = p;
    let mut upper = f64::NEG_INFINITY;
    let mut lower = f64::INFINITY;
    let mut mean = 0.0;
    let mut next_idx = 0usize;
    let eps = f.eps_eq();
    for step in 1..=n {
        let (x1, y1) = f.eval(x, y)?;
        if !(-eps..=1.0 + eps).contains(&y1) || !x1.is_finite() {
            return Err(AnnulusError::Cover(CoverError::DomainEscape {
                label: f.label().to_string(),
                step: step as usize,
                x: x1,
                y: y1,
            }));
        }
        x = x1;
        y = y1;
        if next_idx < ks.len() && step == ks[next_idx] {
            let avg = (x - x0) / step as f64;
            if step >= k_min {
                upper = upper.max(avg);
                lower = lower.min(avg);
            }
            if step == n {
                mean = avg;
            }
            next_idx += 1;
        }
    }
    Ok(RotationSample {
        point: (x0, y0),
        upper,
        lower,
        mean,
        n,
        window,
        k_min,
    })
}

/// Rotation sampling over an explicit point set, in parallel, with hull,
/// histogram, and containment check against the twist interval.
pub fn rotation_set_from_points(
    f: &AnnulusLift,
    points: &[(f64, f64)],
    n: u64,
    window: usize,
    bins: usize,
    rho_tol: f64,
) -> Result<RotationSetEstimate, AnnulusError> {
    assert!(!points.is_empty());
    let ti = twist_interval(f, rho_tol)?;
    let samples: Vec<RotationSample> = points
        .par_iter()
        .map(|&p| rotation_sample(f, p, n, window))
        .collect::<Result<_, _>>()?;

    let means: Vec<f64> = samples.iter().map(|s| s.mean).collect();
    let hull_lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hull_hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let env_lo = samples.iter().map(|s| s.lower).fold(f64::INFINITY, f64::min);
    let env_hi = samples.iter().map(|s| s.upper).fold(f64::NEG_INFINITY, f64::max);
    let histogram = Histogram::build(&means, bins);

    let slack = 1.0 / n as f64 + 4.0 * f.eval_slack();
    let margin_low = hull_lo - (ti.rho0.lower() - slack);
    let margin_high = (ti.rho1.upper() + slack) - hull_hi;
    let containment = ContainmentReport {
        rho0: ti.rho0,
        rho1: ti.rho1,
        slack,
        contained: margin_low >= 0.0 && margin_high >= 0.0,
        margin_low,
        margin_high,
    };
    Ok(RotationSetEstimate {
        samples,
        hull: (hull_lo, hull_hi),
        envelope: (env_lo, env_hi),
        histogram,
        containment,
    })
}

/// Rotation set sampled on a uniform nx × ny grid.
pub fn rotation_set(
    f: &AnnulusLift,
    nx: usize,
    ny: usize,
    n: u64,
    bins: usize,
    rho_tol: f64,
) -> Result<RotationSetEstimate, AnnulusError> {
    const WINDOW: usize = 8;
    rotation_set_from_points(f, &unit_grid(nx, ny), n, WINDOW, bins, rho_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::AnnulusLift;

    fn shear_identity() -> AnnulusLift {
        AnnulusLift::new("shear[phi=y]", |x, y| (x + y, y)).unwrap()
    }

    #[test]
    fn check_twist_shear_grid_increment() {
        let f = shear_identity();
        let report = check_twist(&f, 32, 32, 1e-12).unwrap();
        assert!(report.is_twist);
        assert!((report.min_increment - 1.0 / 31.0).abs() < 1e-14);
        assert!((report.lipschitz_hint - 1.0).abs() < 1e-12);
    }

    #[test]
    fn check_twist_float_family() {
        let f = AnnulusLift::new("float[y,y2]", |x, y| (x + y, y * y)).unwrap();
        let report = check_twist(&f, 16, 16, 1e-12).unwrap();
        assert!(report.is_twist);
    }

    #[test]
    fn check_twist_degenerate() {
        let f = AnnulusLift::new("rigid[0.3]", |x, _y| (x + 0.3, _y)).unwrap();
        let report = check_twist(&f, 16, 16, 1e-12).unwrap();
        assert!(!report.is_twist);
        assert_eq!(report.min_increment, 0.0);
    }

    #[test]
    fn twist_interval_shear() {
        let f = shear_identity();
        let ti = twist_interval(&f, 1e-6).unwrap();
        assert!(ti.rho0.value.abs() <= 1e-6);
        assert!((ti.rho1.value - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn boundary_condition_shear_separated() {
        let f = shear_identity();
        let (verdict, _) = boundary_twist_condition(&f, 1e-5).unwrap();
        assert_eq!(verdict, SeparationVerdict::Separated);
    }

    #[test]
    fn boundary_condition_inverted_for_reversed_shear() {
        let f = AnnulusLift::new("antishear", |x, y| (x + 1.0 - y, y)).unwrap();
        let (verdict, _) = boundary_twist_condition(&f, 1e-5).unwrap();
        assert_eq!(verdict, SeparationVerdict::Inverted);
    }

    #[test]
    fn rotation_sample_shear_is_exact() {
        let f = shear_identity();
        for y in [0.0, 0.25, 0.7] {
            let s = rotation_sample(&f, (0.0, y), 1000, 4).unwrap();
            assert!((s.mean - y).abs() < 1e-12);
            assert!((s.upper - y).abs() < 1e-12);
            assert!((s.lower - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_sample_float_family_sinks_to_zero() {
        // Brute-force oracle: iterate y_{k+1} = y_k^2 and accumulate the
        // displacement sum directly.
        let n = 50_000u64;
        let mut y = 0.5f64;
        let mut disp = 0.0f64;
        for _ in 0..n {
            disp += y;
            y = y * y;
        }
        let oracle_mean = disp / n as f64;

        let f = AnnulusLift::new("float[y,y2]", |x, y| (x + y, y * y)).unwrap();
        let s = rotation_sample(&f, (0.0, 0.5), n, 8).unwrap();
        assert!((s.mean - oracle_mean).abs() < 1e-12);
        assert!(s.mean < 1e-4, "orbit sinks to y=0 so the average tends to phi(0)=0");
        // Checkpoint extremes decay like (total displacement)/k_min.
        assert!(s.upper < 1.0 / s.k_min as f64);
    }

    #[test]
    fn rotation_sample_fixed_point() {
        let f = shear_identity();
        let s = rotation_sample(&f, (0.37, 0.0), 500, 4).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.upper, 0.0);
        assert_eq!(s.lower, 0.0);
    }

    #[test]
    fn rotation_set_shear_hull_and_support() {
        let f = shear_identity();
        let est = rotation_set(&f, 16, 16, 2000, 16, 1e-6).unwrap();
        assert!(est.hull.0.abs() < 1e-12);
        assert!((est.hull.1 - 1.0).abs() < 1e-12);
        assert!(est.containment.contained);
        // Each sampled mean is exactly phi(y) = y on its grid row.
        for s in &est.samples {
            assert!((s.mean - s.point.1).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_set_float_family_bimodal() {
        let f = AnnulusLift::new("float[y,y2]", |x, y| (x + y, y * y)).unwrap();
        let est = rotation_set(&f, 8, 16, 20_000, 16, 1e-6).unwrap();
        let mass = est.mass_near(&[0.0, 1.0], 1e-2);
        assert!(mass >= 0.99, "mass near {{0,1}} was {mass}");
        assert!(est.containment.contained);
    }

    #[test]
    fn histogram_mass_near_handles_degenerate_span() {
        let h = Histogram::build(&[0.5, 0.5, 0.5], 8);
        assert_eq!(h.bin_width, 0.0);
        assert_eq!(h.mass_near(&[0.5], 1e-9), 1.0);
        assert_eq!(h.mass_near(&[0.0], 1e-3), 0.0);
    }

    #[test]
    fn checkpoints_end_at_n() {
        for n in [1u64, 2, 10, 1000, 12345] {
            let ks = checkpoints(n);
            assert_eq!(*ks.last().unwrap(), n);
            for w in ks.windows(2) {
                assert!(w[0] < w[1]);
            }
        }
    }
}
