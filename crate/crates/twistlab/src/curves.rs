//! Invariant-curve candidates and their diagnostics: Lipschitz-graph
//! verification, per-curve rotation numbers, the distinct-rotation check
//! for disjoint invariant curves, and recurrence scanning as a
//! non-wandering heuristic.
//!
//! Curve candidates are sampled point sets (orbit closures or explicit
//! graphs), so every verdict here is evidence at a stated resolution, not
//! a certificate. Recurrence scanning in particular is a heuristic witness:
//! non-wandering is not finitely verifiable.

use crate::annulus::AnnulusError;
use crate::circle::{rotation_number_adaptive, CircleError, RotationEstimate};
use crate::cover::{AnnulusLift, CircleLift, CoverError};
use crate::util::{circle_dist, frac};
use rayon::prelude::*;

/// Largest x-gap a candidate may have before slope estimates become
/// meaningless.
pub const GAP_LIMIT: f64 = 0.05;

/// Points closer than this in x are treated as the same abscissa.
const DUPLICATE_DX: f64 = 1e-12;
const DUPLICATE_DY: f64 = 1e-9;

/// Vertical separation below which two curves count as intersecting.
pub const DISJOINT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CurveError {
    #[error("candidate too sparse: largest x-gap {gap_max:.4} exceeds {limit}")]
    InsufficientDensity { gap_max: f64, limit: f64 },
    #[error("curve is not invariant: residual {residual:.3e} exceeds {tol:.3e}")]
    NotInvariant { residual: f64, tol: f64 },
    #[error("curves are not disjoint: vertical separation {min_separation:.3e} at x = {at_x}")]
    NotDisjoint { min_separation: f64, at_x: f64 },
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Annulus(#[from] AnnulusError),
}

/// A sampled closed-curve candidate: points sorted by x mod 1.
#[derive(Debug, Clone)]
pub struct CurveCandidate {
    /// (x mod 1, y), sorted lexicographically; true duplicates merged.
    pub points: Vec<(f64, f64)>,
    pub source: String,
    /// Largest gap between consecutive x values, including the wrap gap.
    pub gap_max: f64,
}

impl CurveCandidate {
    /// Builds a candidate from raw annulus points: reduces x mod 1, sorts,
    /// merges duplicates, and measures the largest x-gap.
    pub fn from_points(source: impl Into<String>, raw: &[(f64, f64)]) -> CurveCandidate {
        let mut pts: Vec<(f64, f64)> = raw.iter().map(|&(x, y)| (frac(x), y)).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for p in pts {
            match merged.last() {
                Some(&(lx, ly))
                    if (p.0 - lx).abs() <= DUPLICATE_DX && (p.1 - ly).abs() <= DUPLICATE_DY =>
                {
                    // Same point at sampling resolution.
                }
                _ => merged.push(p),
            }
        }
        // The wrap can split one duplicate across x = 0.
        while merged.len() >= 2 {
            let first = merged[0];
            let last = *merged.last().unwrap();
            if 1.0 + first.0 - last.0 <= DUPLICATE_DX && (first.1 - last.1).abs() <= DUPLICATE_DY {
                merged.pop();
            } else {
                break;
            }
        }
        let gap_max = if merged.len() < 2 {
            1.0
        } else {
            let mut g: f64 = 1.0 + merged[0].0 - merged.last().unwrap().0;
            for w in merged.windows(2) {
                g = g.max(w[1].0 - w[0].0);
            }
            g
        };
        CurveCandidate { points: merged, source: source.into(), gap_max }
    }

    /// Samples an explicit graph y = g(x) at `m` equispaced abscissas.
    pub fn from_graph_fn(
        source: impl Into<String>,
        g: impl Fn(f64) -> f64,
        m: usize,
    ) -> CurveCandidate {
        assert!(m >= 4);
        let raw: Vec<(f64, f64)> = (0..m).map(|i| {
            let x = i as f64 / m as f64;
            (x, g(x))
        }).collect();
        Self::from_points(source, &raw)
    }

    /// Pools several candidates sampling the same invariant set.
    pub fn merge(source: impl Into<String>, parts: &[CurveCandidate]) -> CurveCandidate {
        let raw: Vec<(f64, f64)> = parts.iter().flat_map(|c| c.points.iter().copied()).collect();
        Self::from_points(source, &raw)
    }

    /// Piecewise-linear interpolation of y over x, wrap-aware.
    pub fn interpolate_y(&self, x: f64) -> f64 {
        let x = frac(x);
        let pts = &self.points;
        let n = pts.len();
        debug_assert!(n >= 2);
        let idx = pts.partition_point(|p| p.0 <= x);
        let (x0, y0, x1, y1) = if idx == 0 || idx == n {
            // Between the last point and the first (wrapped).
            let (xa, ya) = pts[n - 1];
            let (xb, yb) = pts[0];
            (xa, ya, xb + 1.0, yb)
        } else {
            let (xa, ya) = pts[idx - 1];
            let (xb, yb) = pts[idx];
            (xa, ya, xb, yb)
        };
        let xq = if x < x0 { x + 1.0 } else { x };
        if x1 == x0 {
            return 0.5 * (y0 + y1);
        }
        y0 + (y1 - y0) * (xq - x0) / (x1 - x0)
    }
}

/// Result of the Lipschitz-graph verification.
#[derive(Debug, Clone, Copy)]
pub struct GraphReport {
    pub is_graph: bool,
    pub single_valued: bool,
    /// Max |Δy/Δx| over consecutive points.
    pub lipschitz_estimate: f64,
    /// The working bound L the estimate was compared against.
    pub lipschitz_bound_used: f64,
    /// Max distance from image points to the interpolated curve.
    pub invariance_residual: f64,
}

/// Grid of recurrence flags: whether each point's orbit re-enters its
/// ε-ball within N steps.
#[derive(Debug, Clone)]
pub struct RecurrenceMap {
    pub points: Vec<(f64, f64)>,
    pub returned: Vec<bool>,
    pub eps: f64,
    pub n_max: u64,
}

impl RecurrenceMap {
    pub fn fraction_returned(&self) -> f64 {
        let c = self.returned.iter().filter(|&&r| r).count();
        c as f64 / self.returned.len().max(1) as f64
    }
}

/// Iterates a seed and collects its orbit closure sample as a curve
/// candidate.
pub fn trace_curve(
    f: &AnnulusLift,
    seed: (f64, f64),
    n: usize,
) -> Result<CurveCandidate, CurveError> {
    assert!(n >= 100, "trace_curve needs n >= 100");
    let mut raw = Vec::with_capacity(n + 1);
    let (mut x, mut y) = seed;
    raw.push((x, y));
    let eps = f.eps_eq();
    for step in 1..=n {
        let (x1, y1) = f.eval(x, y).map_err(CoverError::from)?;
        if !(-eps..=1.0 + eps).contains(&y1) || !x1.is_finite() {
            return Err(CurveError::Cover(CoverError::DomainEscape {
                label: f.label().to_string(),
                step,
                x: x1,
                y: y1,
            }));
        }
        raw.push((x1, y1));
        x = x1;
        y = y1;
    }
    Ok(CurveCandidate::from_points(
        format!("orbit[{}; seed=({}, {}); n={}]", f.label(), seed.0, seed.1, n),
        &raw,
    ))
}

/// Traces several seeds of the same invariant set and pools the samples.
pub fn trace_curve_merged(
    f: &AnnulusLift,
    seeds: &[(f64, f64)],
    n: usize,
) -> Result<CurveCandidate, CurveError> {
    let parts: Vec<CurveCandidate> = seeds
        .iter()
        .map(|&s| trace_curve(f, s, n))
        .collect::<Result<_, _>>()?;
    Ok(CurveCandidate::merge(
        format!("orbits[{}; {} seeds; n={}]", f.label(), seeds.len(), n),
        &parts,
    ))
}

fn invariance_residual(f: &AnnulusLift, c: &CurveCandidate) -> Result<f64, CurveError> {
    let mut worst = 0.0f64;
    for &(x, y) in &c.points {
        let (x1, y1) = f.eval(x, y).map_err(CoverError::from)?;
        let y_curve = c.interpolate_y(x1);
        worst = worst.max((y_curve - y1).abs());
    }
    Ok(worst)
}

/// Verifies the Birkhoff graph property on a candidate: single-valuedness
/// over x, slope bounded by the working Lipschitz constant `l_bound`, and
/// invariance of the interpolated curve.
pub fn birkhoff_graph_check(
    f: &AnnulusLift,
    c: &CurveCandidate,
    l_bound: f64,
    tol: f64,
) -> Result<GraphReport, CurveError> {
    if c.gap_max > GAP_LIMIT {
        return Err(CurveError::InsufficientDensity { gap_max: c.gap_max, limit: GAP_LIMIT });
    }
    let mut single_valued = true;
    let mut lipschitz_estimate = 0.0f64;
    let n = c.points.len();
    for i in 0..n {
        let (x0, y0) = c.points[i];
        let (mut x1, y1) = c.points[(i + 1) % n];
        if i + 1 == n {
            x1 += 1.0;
        }
        let dx = x1 - x0;
        let dy = (y1 - y0).abs();
        if dx <= 1e-9 {
            if dy > 1e-6 {
                single_valued = false;
            }
        } else {
            lipschitz_estimate = lipschitz_estimate.max(dy / dx);
        }
    }
    let residual = invariance_residual(f, c)?;
    Ok(GraphReport {
        is_graph: single_valued && lipschitz_estimate <= l_bound + tol,
        single_valued,
        lipschitz_estimate,
        lipschitz_bound_used: l_bound,
        invariance_residual: residual,
    })
}

/// Rotation number of the circle map induced on an invariant graph.
///
/// The candidate must be invariant to within `tol`; the induced lift
/// evaluates the annulus map at the interpolated graph point over each x.
pub fn curve_rotation_number(
    f: &AnnulusLift,
    c: &CurveCandidate,
    tol: f64,
) -> Result<RotationEstimate, CurveError> {
    if c.gap_max > GAP_LIMIT {
        return Err(CurveError::InsufficientDensity { gap_max: c.gap_max, limit: GAP_LIMIT });
    }
    let residual = invariance_residual(f, c)?;
    if residual > tol {
        return Err(CurveError::NotInvariant { residual, tol });
    }
    let curve = c.clone();
    let annulus = f.clone();
    let induced = CircleLift::new_unchecked(
        format!("induced[{} on {}]", f.label(), c.source),
        move |x| {
            let y = curve.interpolate_y(x);
            annulus
                .eval(x, y)
                .expect("graph points stay inside the strip")
                .0
        },
    )
    .with_eval_slack(f.eval_slack().max(tol * 1e-3));
    Ok(rotation_number_adaptive(&induced, tol)?)
}

/// Verdict of the distinct-rotation-number comparison. Equality is never
/// asserted: overlapping enclosures stay undecided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distinctness {
    Distinct,
    Undecided,
}

/// Checks that two disjoint invariant curves carry different rotation
/// numbers, certified beyond the estimate enclosures.
pub fn distinct_rotation_check(
    f: &AnnulusLift,
    c1: &CurveCandidate,
    c2: &CurveCandidate,
    tol: f64,
) -> Result<(Distinctness, RotationEstimate, RotationEstimate), CurveError> {
    // Disjointness on the union x-grid.
    let mut min_separation = f64::INFINITY;
    let mut at_x = 0.0;
    for &(x, _) in c1.points.iter().chain(c2.points.iter()) {
        let sep = (c1.interpolate_y(x) - c2.interpolate_y(x)).abs();
        if sep < min_separation {
            min_separation = sep;
            at_x = x;
        }
    }
    if min_separation <= DISJOINT_THRESHOLD {
        return Err(CurveError::NotDisjoint { min_separation, at_x });
    }
    let r1 = curve_rotation_number(f, c1, tol)?;
    let r2 = curve_rotation_number(f, c2, tol)?;
    let distinct = r1.upper() < r2.lower() || r2.upper() < r1.lower();
    Ok((
        if distinct { Distinctness::Distinct } else { Distinctness::Undecided },
        r1,
        r2,
    ))
}

/// Annulus distance: x measured mod 1.
fn annulus_dist(p: (f64, f64), q: (f64, f64)) -> f64 {
    let dx = circle_dist(p.0, q.0);
    let dy = p.1 - q.1;
    (dx * dx + dy * dy).sqrt()
}

/// Flags, for each grid point, whether its orbit re-enters the ε-ball of
/// the start within N steps. A heuristic witness for recurrence, never a
/// certificate.
pub fn recurrence_scan(
    f: &AnnulusLift,
    grid: &[(f64, f64)],
    n_max: u64,
    eps: f64,
) -> Result<RecurrenceMap, CurveError> {
    assert!(n_max >= 1 && eps > 0.0);
    let returned: Vec<bool> = grid
        .par_iter()
        .map(|&p| -> Result<bool, CurveError> {
            let start = (frac(p.0), p.1);
            let (mut x, mut y) = start;
            for _ in 0..n_max {
                let (x1, y1) = f.eval(x, y).map_err(CoverError::from)?;
                x = x1;
                y = y1;
                if annulus_dist((frac(x), y), start) < eps {
                    return Ok(true);
                }
            }
            Ok(false)
        })
        .collect::<Result<_, _>>()?;
    Ok(RecurrenceMap { points: grid.to_vec(), returned, eps, n_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::unit_grid;
    use crate::families::{float_map, shear};

    #[test]
    fn trace_irrational_circle_becomes_dense() {
        let f = shear(|y| y).unwrap();
        // phi(y) = y at y = golden fraction: irrational rotation.
        let c = trace_curve(&f, (0.0, 0.6180339887), 3000).unwrap();
        assert!(c.gap_max < 0.01, "gap_max = {}", c.gap_max);
    }

    #[test]
    fn trace_rational_circle_has_q_points() {
        // Short orbit: the lifted-x roundoff drift stays below the merge
        // threshold, so the five clusters collapse to five points.
        let f = shear(|_| 0.4).unwrap();
        let c = trace_curve(&f, (0.0, 0.5), 100).unwrap();
        assert_eq!(c.points.len(), 5);
        assert!((c.gap_max - 0.2).abs() < 1e-9);
    }

    #[test]
    fn horizontal_circle_is_exact_invariant_graph() {
        let f = shear(|y| y).unwrap();
        let c = CurveCandidate::from_graph_fn("y=0.4", |_| 0.4, 256);
        let report = birkhoff_graph_check(&f, &c, 1.0, 1e-9).unwrap();
        assert!(report.is_graph);
        assert_eq!(report.lipschitz_estimate, 0.0);
        assert!(report.invariance_residual < 1e-15);
    }

    #[test]
    fn vertical_cloud_fails_single_valuedness() {
        // A dense horizontal curve with a vertical stack glued in at x=0.5.
        let mut raw: Vec<(f64, f64)> = (0..200).map(|i| (i as f64 / 200.0, 0.3)).collect();
        for j in 0..20 {
            raw.push((0.5, 0.3 + 0.01 * (j + 1) as f64));
        }
        let c = CurveCandidate::from_points("synthetic-vertical", &raw);
        let f = shear(|y| y).unwrap();
        let report = birkhoff_graph_check(&f, &c, 10.0, 1e-9).unwrap();
        assert!(!report.single_valued);
        assert!(!report.is_graph);
    }

    #[test]
    fn sparse_candidate_rejected() {
        let f = shear(|y| y).unwrap();
        let c = CurveCandidate::from_graph_fn("coarse", |_| 0.5, 8);
        let err = birkhoff_graph_check(&f, &c, 1.0, 1e-9).unwrap_err();
        assert!(matches!(err, CurveError::InsufficientDensity { .. }));
    }

    #[test]
    fn lipschitz_estimate_of_known_graph() {
        // y = 0.5 + 0.1 sin(2πx): Lipschitz constant 0.2π.
        let f = shear(|y| y).unwrap();
        let c = CurveCandidate::from_graph_fn(
            "sine-graph",
            |x| 0.5 + 0.1 * (std::f64::consts::TAU * x).sin(),
            2000,
        );
        let truth = 0.2 * std::f64::consts::PI;
        let report = birkhoff_graph_check(&f, &c, truth, 1e-3).unwrap();
        assert!(report.lipschitz_estimate <= truth + 1e-3);
        assert!(report.lipschitz_estimate >= truth - 0.01);
    }

    #[test]
    fn curve_rotation_on_shear_equals_phi() {
        let f = shear(|y| y).unwrap();
        for y in [0.25, 0.75] {
            let c = CurveCandidate::from_graph_fn(format!("y={y}"), |_| y, 256);
            let est = curve_rotation_number(&f, &c, 1e-7).unwrap();
            assert!((est.value - y).abs() <= 1e-7 + est.halfwidth);
        }
    }

    #[test]
    fn non_invariant_curve_rejected() {
        let f = shear(|y| y).unwrap();
        // A sloped graph is not invariant under the shear.
        let c = CurveCandidate::from_graph_fn("tilted", |x| 0.2 + 0.3 * (1.0 - (2.0 * x - 1.0).abs()), 512);
        let err = curve_rotation_number(&f, &c, 1e-6).unwrap_err();
        assert!(matches!(err, CurveError::NotInvariant { .. }));
    }

    #[test]
    fn distinct_rotation_on_shear_curves() {
        let f = shear(|y| y).unwrap();
        let c1 = CurveCandidate::from_graph_fn("y=0.2", |_| 0.2, 256);
        let c2 = CurveCandidate::from_graph_fn("y=0.7", |_| 0.7, 256);
        let (verdict, r1, r2) = distinct_rotation_check(&f, &c1, &c2, 1e-6).unwrap();
        assert_eq!(verdict, Distinctness::Distinct);
        assert!(r1.upper() < r2.lower());
    }

    #[test]
    fn same_curve_twice_is_not_disjoint() {
        let f = shear(|y| y).unwrap();
        let c = CurveCandidate::from_graph_fn("y=0.5", |_| 0.5, 256);
        let err = distinct_rotation_check(&f, &c, &c, 1e-6).unwrap_err();
        assert!(matches!(err, CurveError::NotDisjoint { .. }));
    }

    #[test]
    fn recurrence_shear_all_return_by_pigeonhole() {
        let f = shear(|y| y).unwrap();
        let grid = unit_grid(8, 8);
        let eps = 0.05f64;
        // Pigeonhole on a rigid rotation: some k <= ceil(1/eps)+1 returns
        // within eps.
        let n = (1.0 / eps).ceil() as u64 + 1;
        let map = recurrence_scan(&f, &grid, n, eps).unwrap();
        assert_eq!(map.fraction_returned(), 1.0);
    }

    #[test]
    fn recurrence_float_interior_never_returns() {
        let f = float_map(|y| y, |y| y * y).unwrap();
        let pts: Vec<(f64, f64)> = (1..8)
            .flat_map(|j| (0..4).map(move |i| (i as f64 / 4.0, j as f64 / 8.0)))
            .collect();
        let map = recurrence_scan(&f, &pts, 10_000, 1e-3).unwrap();
        assert_eq!(map.fraction_returned(), 0.0);
    }

    #[test]
    fn billiard_rotational_curve_is_invariant_graph() {
        use crate::annulus::check_twist;
        use crate::billiard::{as_annulus_lift, Ellipse};

        let e = Ellipse::new(2.0, 1.0).unwrap();
        let f = as_annulus_lift(&e).unwrap();
        let hint = check_twist(&f, 16, 16, 0.0).unwrap().lipschitz_hint;
        // Seed in the caustic region: the orbit closure is a rotational
        // invariant curve.
        let c = trace_curve(&f, (0.0, 0.1), 6000).unwrap();
        assert!(c.gap_max <= 0.05);
        let rep = birkhoff_graph_check(&f, &c, hint * 4.0, 1e-6).unwrap();
        assert!(rep.is_graph);
        assert!(rep.invariance_residual <= 1e-6, "residual {}", rep.invariance_residual);
        let est = curve_rotation_number(&f, &c, 1e-3).unwrap();
        assert!(est.value > 0.0 && est.value < 0.5);
    }

    #[test]
    fn circle_billiard_curve_rotation_matches_chord_advance() {
        use crate::billiard::{as_annulus_lift, Ellipse};

        // Geometric oracle: on a circular table the chord at angle θ
        // advances the arclength by 2rθ, i.e. the normalized rotation
        // number of the θ-circle is exactly θ/π = y.
        let e = Ellipse::new(1.0, 1.0).unwrap();
        let f = as_annulus_lift(&e).unwrap();
        let y = 0.37;
        let c = CurveCandidate::from_graph_fn("theta-circle", |_| y, 256);
        let est = curve_rotation_number(&f, &c, 1e-5).unwrap();
        assert!((est.value - y).abs() <= 1e-5 + est.halfwidth);
    }

    #[test]
    fn locked_suspension_slices_stay_undecided() {
        use crate::families::{arnold_circle, locked_band_above, locked_suspension};

        let g0 = arnold_circle(0.5, 0.25).unwrap();
        let band = locked_band_above(&g0, 1, 2, 0.2).unwrap();
        let f = locked_suspension(g0, 1, 2, 0.5 * band).unwrap();
        // Horizontal slices are invariant (the suspension fixes y) and both
        // rotate by exactly 1/2; no tolerance can separate them.
        let c1 = CurveCandidate::from_graph_fn("t=0.2", |_| 0.2, 256);
        let c2 = CurveCandidate::from_graph_fn("t=0.8", |_| 0.8, 256);
        let (verdict, r1, r2) = distinct_rotation_check(&f, &c1, &c2, 1e-5).unwrap();
        assert_eq!(verdict, Distinctness::Undecided);
        assert!(r1.lower() <= 0.5 && 0.5 <= r1.upper());
        assert!(r2.lower() <= 0.5 && 0.5 <= r2.upper());
    }

    #[test]
    fn recurrence_monotone_in_eps_and_n() {
        let f = float_map(|y| y, |y| y * y).unwrap();
        let grid = unit_grid(6, 6);
        let base = recurrence_scan(&f, &grid, 500, 1e-3).unwrap();
        let more_eps = recurrence_scan(&f, &grid, 500, 1e-2).unwrap();
        let more_n = recurrence_scan(&f, &grid, 5000, 1e-3).unwrap();
        for i in 0..grid.len() {
            if base.returned[i] {
                assert!(more_eps.returned[i], "enlarging eps lost a return");
                assert!(more_n.returned[i], "enlarging N lost a return");
            }
        }
    }
}
