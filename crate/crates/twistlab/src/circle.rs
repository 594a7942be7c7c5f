//! Rotation numbers of circle homeomorphisms with rigorous error bounds,
//! rational-rotation detection, and mode-locking intervals.
//!
//! All estimates rest on the displacement bound |g̃ⁿ(x) − x − nρ| < 1 for
//! degree-one lifts, so every returned interval is a true enclosure up to
//! the lift's per-evaluation slack.

use crate::cover::CircleLift;
use crate::util::bisect_sign_change;

/// Hard ceiling on adaptive iteration counts.
pub const DEFAULT_ITERATION_CAP: u64 = 100_000_000;

/// Grid density used when scanning g̃^q(x) − x − p for sign changes,
/// in samples per unit period q.
const SCAN_POINTS_PER_Q: u64 = 64;

#[derive(Debug, thiserror::Error)]
pub enum CircleError {
    #[error("map `{label}` is not strictly increasing near x = {x}: g({x}) = {gx} but g({x2}) = {gx2}")]
    NonMonotone { label: String, x: f64, gx: f64, x2: f64, gx2: f64 },
    #[error("iteration cap {cap} reached before halfwidth {halfwidth:.3e} met tolerance {tol:.3e}")]
    BudgetExceeded { tol: f64, cap: u64, halfwidth: f64 },
    #[error("no parameter in [{t_lo}, {t_hi}] locks the rotation number at {p}/{q}")]
    TongueMissed { p: i64, q: u64, t_lo: f64, t_hi: f64 },
}

/// A rotation-number value with a rigorous enclosure: the true rotation
/// number lies in [value − halfwidth, value + halfwidth].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationEstimate {
    pub value: f64,
    pub halfwidth: f64,
    pub iterations: u64,
    /// Initial lifted point of the orbit the estimate was read from.
    pub seed: f64,
}

impl RotationEstimate {
    pub fn lower(&self) -> f64 {
        self.value - self.halfwidth
    }

    pub fn upper(&self) -> f64 {
        self.value + self.halfwidth
    }

    pub fn overlaps(&self, other: &RotationEstimate) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }
}

/// A parameter interval on which a one-parameter family is mode-locked
/// at rotation number p/q.
#[derive(Debug, Clone, Copy)]
pub struct LockingInterval {
    pub p: i64,
    pub q: u64,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Resolution to which each endpoint was located by bisection.
    pub tol: f64,
}

impl LockingInterval {
    pub fn width(&self) -> f64 {
        self.t_hi - self.t_lo
    }
}

fn check_monotone_at(g: &CircleLift, x: f64) -> Result<(), CircleError> {
    let dx = 1e-6;
    let gx = g.eval(x);
    let gx2 = g.eval(x + dx);
    if gx2 <= gx {
        return Err(CircleError::NonMonotone {
            label: g.label().to_string(),
            x,
            gx,
            x2: x + dx,
            gx2,
        });
    }
    Ok(())
}

/// Finite-n rotation-number estimate: value = (g̃ⁿ(x0) − x0)/n with the
/// displacement-bound halfwidth (1 + n·slack)/n.
///
/// Monotonicity is spot-checked at geometrically spaced points along the
/// orbit; a violation means the input is not a homeomorphism lift.
pub fn rotation_number(g: &CircleLift, x0: f64, n: u64) -> Result<RotationEstimate, CircleError> {
    assert!(n >= 1, "rotation_number needs n >= 1");
    let mut x = x0;
    let mut next_check = 1u64;
    for k in 0..n {
        if k + 1 == next_check {
            check_monotone_at(g, x)?;
            next_check *= 2;
        }
        x = g.eval(x);
    }
    let displacement = x - x0;
    Ok(RotationEstimate {
        value: displacement / n as f64,
        halfwidth: (1.0 + n as f64 * g.eval_slack()) / n as f64,
        iterations: n,
        seed: x0,
    })
}

/// Iterates with geometrically growing n until the enclosure halfwidth
/// drops to `tol`, intersecting the two-sided displacement bounds
/// [(aₙ−1)/n, (aₙ+1)/n] across stages.
pub fn rotation_number_adaptive(g: &CircleLift, tol: f64) -> Result<RotationEstimate, CircleError> {
    rotation_number_adaptive_with(g, 0.0, tol, DEFAULT_ITERATION_CAP)
}

pub fn rotation_number_adaptive_with(
    g: &CircleLift,
    x0: f64,
    tol: f64,
    cap: u64,
) -> Result<RotationEstimate, CircleError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let slack = g.eval_slack();
    let mut x = x0;
    let mut n: u64 = 0;
    let mut stage: u64 = 1;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut next_check = 1u64;
    loop {
        while n < stage {
            if n + 1 == next_check {
                check_monotone_at(g, x)?;
                next_check *= 2;
            }
            x = g.eval(x);
            n += 1;
        }
        let nf = n as f64;
        let a = x - x0;
        let band = 1.0 + nf * slack;
        lo = lo.max((a - band) / nf);
        hi = hi.min((a + band) / nf);
        if lo > hi {
            // Enclosures of the same number cannot be disjoint; if rounding
            // ever produces an inverted intersection, collapse it.
            let mid = 0.5 * (lo + hi);
            lo = mid;
            hi = mid;
        }
        let halfwidth = 0.5 * (hi - lo);
        if halfwidth <= tol {
            return Ok(RotationEstimate {
                value: 0.5 * (lo + hi),
                halfwidth,
                iterations: n,
                seed: x0,
            });
        }
        if stage >= cap {
            return Err(CircleError::BudgetExceeded { tol, cap, halfwidth });
        }
        stage = (stage * 2).min(cap);
    }
}

/// Where a map's rotation number sits relative to p/q, judged from a grid
/// scan of h(x) = g̃^q(x) − x − p over one fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RationalSide {
    Below,
    Locked,
    Above,
}

pub(crate) fn compare_to_rational(g: &CircleLift, p: i64, q: u64) -> RationalSide {
    let points = SCAN_POINTS_PER_Q * q + 1;
    let band = 64.0 * q as f64 * g.eval_slack();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..points {
        let x = i as f64 / (points - 1) as f64;
        let h = g.eval_n(x, q) - x - p as f64;
        min = min.min(h);
        max = max.max(h);
    }
    if min > band {
        RationalSide::Above
    } else if max < -band {
        RationalSide::Below
    } else {
        RationalSide::Locked
    }
}

/// True if the scan certifies a period-q orbit with total displacement p,
/// i.e. the rotation number equals p/q on this sampling resolution.
pub fn is_locked_at(g: &CircleLift, p: i64, q: u64) -> bool {
    compare_to_rational(g, p, q) == RationalSide::Locked
}

/// Searches for a rational rotation number p/q with q ≤ q_max by
/// sign-change bisection of h(x) = g̃^q(x) − x − p.
///
/// Returns the fraction in lowest terms with minimal period, or `None`
/// when no candidate consistent with a coarse rotation estimate produces
/// a sign change. Absence is a valid answer: irrational rotations have no
/// periodic points.
pub fn detect_rational(
    g: &CircleLift,
    q_max: u64,
    tol: f64,
) -> Result<Option<(i64, u64)>, CircleError> {
    detect_rational_with(g, q_max, tol, SCAN_POINTS_PER_Q)
}

/// `detect_rational` with an explicit scan density. Transverse crossings
/// are caught by moderate grids; raise `points_per_q` for nearly tangent
/// periodic orbits.
pub fn detect_rational_with(
    g: &CircleLift,
    q_max: u64,
    tol: f64,
    points_per_q: u64,
) -> Result<Option<(i64, u64)>, CircleError> {
    assert!(q_max >= 1 && tol > 0.0 && points_per_q >= 2);
    let coarse = rotation_number_adaptive_with(g, 0.0, 1e-4, 1 << 20)
        .or_else(|_| rotation_number(g, 0.0, 1 << 20))?;
    for q in 1..=q_max {
        let qf = q as f64;
        let p_lo = (qf * coarse.lower()).floor() as i64;
        let p_hi = (qf * coarse.upper()).ceil() as i64;
        for p in p_lo..=p_hi {
            if gcd(p.unsigned_abs(), q) != 1 {
                continue;
            }
            if let Some(root) = find_periodic_point_with(g, p, q, tol, points_per_q) {
                debug_assert!((g.eval_n(root, q) - root - p as f64).abs() <= tol);
                return Ok(Some((p, q)));
            }
        }
    }
    Ok(None)
}

/// Locates x with |g̃^q(x) − x − p| ≤ tol via grid scan plus bisection.
#[cfg(test)]
pub(crate) fn find_periodic_point(g: &CircleLift, p: i64, q: u64, tol: f64) -> Option<f64> {
    find_periodic_point_with(g, p, q, tol, SCAN_POINTS_PER_Q)
}

fn find_periodic_point_with(
    g: &CircleLift,
    p: i64,
    q: u64,
    tol: f64,
    points_per_q: u64,
) -> Option<f64> {
    let h = |x: f64| g.eval_n(x, q) - x - p as f64;
    let points = points_per_q * q + 1;
    let mut prev_x = 0.0;
    let mut prev_h = h(0.0);
    if prev_h.abs() <= tol {
        return Some(prev_x);
    }
    for i in 1..points {
        let x = i as f64 / (points - 1) as f64;
        let hx = h(x);
        if hx.abs() <= tol {
            return Some(x);
        }
        if prev_h * hx < 0.0 {
            let root = bisect_sign_change(h, prev_x, x, 1e-15);
            if h(root).abs() <= tol {
                return Some(root);
            }
        }
        prev_x = x;
        prev_h = hx;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    if a == 0 {
        1
    } else {
        a
    }
}

/// Brackets the maximal parameter interval on which `family` is locked at
/// p/q, assuming the family's rotation number is monotone non-decreasing
/// in the parameter.
///
/// Each endpoint is located to within `tol` by bisection on the grid-scan
/// classification (below / locked / above). A tongue narrower than the
/// scan resolution collapses to a degenerate interval at the crossing
/// parameter.
pub fn locking_interval(
    family: impl Fn(f64) -> CircleLift,
    p: i64,
    q: u64,
    t_range: (f64, f64),
    tol: f64,
) -> Result<LockingInterval, CircleError> {
    assert!(t_range.0 < t_range.1 && tol > 0.0);
    let (range_lo, range_hi) = t_range;
    let side = |t: f64| compare_to_rational(&family(t), p, q);

    let side_lo = side(range_lo);
    let side_hi = side(range_hi);
    let missed = || CircleError::TongueMissed { p, q, t_lo: range_lo, t_hi: range_hi };
    if side_lo == RationalSide::Above || side_hi == RationalSide::Below {
        return Err(missed());
    }

    // Find one locked parameter: coarse scan first, then squeeze the
    // below/above transition.
    let mut locked_at = None;
    let mut below_at = range_lo;
    let mut above_at = range_hi;
    const SCAN: usize = 64;
    for i in 0..=SCAN {
        let t = range_lo + (range_hi - range_lo) * i as f64 / SCAN as f64;
        match side(t) {
            RationalSide::Locked => {
                locked_at = Some(t);
                break;
            }
            RationalSide::Below => below_at = t,
            RationalSide::Above => {
                above_at = t;
                break;
            }
        }
    }
    if locked_at.is_none() {
        // Monotonicity confines the tongue to (below_at, above_at).
        let mut lo = below_at;
        let mut hi = above_at;
        while hi - lo > tol.min(1e-13) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match side(mid) {
                RationalSide::Locked => {
                    locked_at = Some(mid);
                    break;
                }
                RationalSide::Below => lo = mid,
                RationalSide::Above => hi = mid,
            }
        }
        if locked_at.is_none() {
            // Tongue narrower than the bisection resolution: report the
            // degenerate interval at the crossing.
            let mid = 0.5 * (lo + hi);
            return Ok(LockingInterval { p, q, t_lo: mid, t_hi: mid, tol });
        }
    }
    let t_star = locked_at.expect("locked parameter located above");

    // Left edge: last Below parameter, first Locked one.
    let t_lo = if side_lo == RationalSide::Locked {
        range_lo
    } else {
        let mut lo = range_lo;
        let mut hi = t_star;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if side(mid) == RationalSide::Below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    // Right edge symmetric.
    let t_hi = if side_hi == RationalSide::Locked {
        range_hi
    } else {
        let mut lo = t_star;
        let mut hi = range_hi;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if side(mid) == RationalSide::Above {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    };
    Ok(LockingInterval { p, q, t_lo, t_hi, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::CircleLift;
    use std::f64::consts::TAU;

    const GOLDEN_FRAC: f64 = 0.618_033_988_7;

    fn rigid(alpha: f64) -> CircleLift {
        CircleLift::new(format!("rigid[{alpha}]"), move |x| x + alpha).unwrap()
    }

    fn arnold(omega: f64, eps: f64) -> CircleLift {
        CircleLift::new(format!("arnold[{omega},{eps}]"), move |x| {
            x + omega + eps / TAU * (TAU * x).sin()
        })
        .unwrap()
    }

    #[test]
    fn rigid_rotation_fixed_n() {
        let g = rigid(0.3);
        let est = rotation_number(&g, 0.7, 10).unwrap();
        assert!((est.value - 0.3).abs() < 1e-14);
        assert!(est.halfwidth <= 0.1 + 1e-12);
    }

    #[test]
    fn identity_fixed_n() {
        let g = CircleLift::new("identity", |x| x).unwrap();
        let est = rotation_number(&g, 0.0, 100).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.halfwidth <= 0.01 + 1e-12);
    }

    // Brute-force oracle: does g̃²(x) − x − 1 change sign on a fine grid?
    fn locked_at_half_oracle(g: &CircleLift) -> bool {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..=4096 {
            let x = i as f64 / 4096.0;
            let h = g.eval(g.eval(x)) - x - 1.0;
            min = min.min(h);
            max = max.max(h);
        }
        min <= 0.0 && max >= 0.0
    }

    #[test]
    fn arnold_in_half_tongue_estimates_one_half() {
        // omega = 0.5 sits at the center of the 1/2 tongue for eps = 0.25.
        let g = arnold(0.5, 0.25);
        assert!(locked_at_half_oracle(&g), "oracle: map must be inside the 1/2 tongue");
        let est = rotation_number(&g, 0.0, 1_000_000).unwrap();
        assert!((est.value - 0.5).abs() < 1e-6);
        assert_eq!(detect_rational(&g, 4, 1e-10).unwrap(), Some((1, 2)));
    }

    #[test]
    fn adaptive_rigid_golden() {
        let g = rigid(GOLDEN_FRAC);
        let est = rotation_number_adaptive(&g, 1e-7).unwrap();
        assert!((est.value - GOLDEN_FRAC).abs() <= 1e-7);
        assert!(est.halfwidth <= 1e-7);
    }

    #[test]
    fn adaptive_locked_map_agrees_with_periodic_oracle() {
        let g = arnold(0.5, 0.25);
        let est = rotation_number_adaptive(&g, 1e-7).unwrap();
        assert!((est.value - 0.5).abs() <= 1e-7 + est.halfwidth);
        // Periodic-point bisection oracle: locate the fixed point of g² − 1.
        let root = find_periodic_point(&g, 1, 2, 1e-12).expect("period-2 point");
        assert!((g.eval_n(root, 2) - root - 1.0).abs() <= 1e-12);
        // Its presence certifies rho = 1/2, which must sit in the estimate.
        assert!(est.lower() <= 0.5 && 0.5 <= est.upper());
    }

    #[test]
    fn adaptive_huge_tolerance_returns_after_one_step() {
        let g = rigid(0.3);
        let est = rotation_number_adaptive(&g, 2.0).unwrap();
        assert_eq!(est.iterations, 1);
    }

    #[test]
    fn adaptive_budget_exceeded() {
        let g = rigid(GOLDEN_FRAC);
        let err = rotation_number_adaptive_with(&g, 0.0, 1e-9, 1 << 12).unwrap_err();
        assert!(matches!(err, CircleError::BudgetExceeded { .. }));
    }

    #[test]
    fn non_monotone_map_detected() {
        // derivative 1 - 1.2cos(2πx) < 0 near x = 0: not a homeomorphism.
        let g = CircleLift::new_unchecked("folded", |x| x - 1.2 / TAU * (TAU * x).sin());
        let err = rotation_number(&g, 0.0, 100).unwrap_err();
        assert!(matches!(err, CircleError::NonMonotone { .. }));
    }

    #[test]
    fn detect_rational_rigid_half() {
        let g = rigid(0.5);
        assert_eq!(detect_rational(&g, 10, 1e-12).unwrap(), Some((1, 2)));
    }

    #[test]
    fn detect_rational_irrational_returns_none() {
        let g = rigid(GOLDEN_FRAC);
        assert_eq!(detect_rational(&g, 50, 1e-9).unwrap(), None);
    }

    #[test]
    fn detect_rational_reports_lowest_terms() {
        let g = rigid(0.5);
        // q_max = 4 exposes (2, 4) as a candidate; (1, 2) must win.
        assert_eq!(detect_rational(&g, 4, 1e-12).unwrap(), Some((1, 2)));
    }

    // Parameter-scan oracle for tongue edges at fixed resolution.
    fn tongue_by_scan(
        family: &impl Fn(f64) -> CircleLift,
        p: i64,
        q: u64,
        range: (f64, f64),
        dt: f64,
    ) -> Option<(f64, f64)> {
        let mut lo = None;
        let mut hi = None;
        let steps = ((range.1 - range.0) / dt).round() as usize;
        for i in 0..=steps {
            let t = range.0 + i as f64 * dt;
            if is_locked_at(&family(t), p, q) {
                if lo.is_none() {
                    lo = Some(t);
                }
                hi = Some(t);
            }
        }
        lo.zip(hi)
    }

    #[test]
    fn locking_interval_rigid_family_degenerate() {
        let family = |t: f64| CircleLift::new_unchecked("rigid-family", move |x| x + t);
        let li = locking_interval(family, 1, 2, (0.0, 1.0), 1e-6).unwrap();
        assert!((li.t_lo - 0.5).abs() <= 1e-6);
        assert!((li.t_hi - 0.5).abs() <= 1e-6);
        assert!(li.width() <= 2e-6);
    }

    #[test]
    fn locking_interval_arnold_zero_tongue() {
        let family = |t: f64| {
            CircleLift::new_unchecked("arnold-family", move |x| {
                x + t + 0.25 / TAU * (TAU * x).sin()
            })
        };
        let li = locking_interval(family, 0, 1, (-0.2, 0.2), 1e-6).unwrap();
        // Fixed points exist iff |t| <= 0.25/(2π): transverse tongue edges.
        let half_width = 0.25 / TAU;
        assert!(li.width() > 0.0);
        assert!((li.t_lo + half_width).abs() < 1e-4);
        assert!((li.t_hi - half_width).abs() < 1e-4);
        let (scan_lo, scan_hi) =
            tongue_by_scan(&family, 0, 1, (-0.2, 0.2), 1e-4).expect("scan finds tongue");
        assert!((scan_lo - li.t_lo).abs() <= 2e-4);
        assert!((scan_hi - li.t_hi).abs() <= 2e-4);
    }

    #[test]
    fn locking_interval_arnold_half_tongue_positive_width() {
        let family = |t: f64| {
            CircleLift::new_unchecked("arnold-family", move |x| {
                x + t + 0.25 / TAU * (TAU * x).sin()
            })
        };
        let li = locking_interval(family, 1, 2, (0.3, 0.7), 1e-6).unwrap();
        assert!(li.width() > 0.0, "1/2 tongue must have positive width at eps = 0.25");
        assert!(li.t_lo < 0.5 && 0.5 < li.t_hi);
        let (scan_lo, scan_hi) =
            tongue_by_scan(&family, 1, 2, (0.3, 0.7), 1e-4).expect("scan finds tongue");
        assert!((scan_lo - li.t_lo).abs() <= 2e-4);
        assert!((scan_hi - li.t_hi).abs() <= 2e-4);
    }

    #[test]
    fn locking_interval_interior_parameters_detect_the_rational() {
        let family = |t: f64| {
            CircleLift::new_unchecked("arnold-family", move |x| {
                x + t + 0.25 / TAU * (TAU * x).sin()
            })
        };
        let li = locking_interval(&family, 1, 2, (0.3, 0.7), 1e-6).unwrap();
        for i in 1..6 {
            let t = li.t_lo + li.tol + (li.width() - 2.0 * li.tol) * i as f64 / 6.0;
            assert_eq!(
                detect_rational(&family(t), 4, 1e-10).unwrap(),
                Some((1, 2)),
                "interior parameter t = {t} must be locked at 1/2"
            );
        }
    }

    #[test]
    fn locking_interval_missed_range() {
        let family = |t: f64| CircleLift::new_unchecked("rigid-family", move |x| x + t);
        let err = locking_interval(family, 1, 2, (0.6, 0.9), 1e-6).unwrap_err();
        assert!(matches!(err, CircleError::TongueMissed { .. }));
    }

    #[test]
    fn translation_covariance() {
        let g = arnold(0.3, 0.4);
        for k in [-2i64, 1, 3] {
            let shifted = g.translated(k);
            let a = rotation_number(&g, 0.1, 500).unwrap();
            let b = rotation_number(&shifted, 0.1, 500).unwrap();
            assert!((b.value - a.value - k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_comparison_weak() {
        // g1 <= g2 pointwise implies rho1 <= rho2 up to enclosure widths.
        let g1 = arnold(0.3, 0.5);
        let g2 = CircleLift::new("arnold-shifted", |x| {
            x + 0.34 + 0.5 / TAU * (TAU * x).sin()
        })
        .unwrap();
        let e1 = rotation_number_adaptive(&g1, 1e-6).unwrap();
        let e2 = rotation_number_adaptive(&g2, 1e-6).unwrap();
        assert!(e1.value <= e2.value + e1.halfwidth + e2.halfwidth);
    }

    #[test]
    fn irrational_strict_comparison() {
        // Rigid irrational rotation vs its upward shift: strict separation
        // beyond the error intervals once tol < delta/4.
        let delta = 1e-3;
        let g1 = rigid(GOLDEN_FRAC);
        let g2 = rigid(GOLDEN_FRAC + delta);
        let e1 = rotation_number_adaptive(&g1, delta / 4.0).unwrap();
        let e2 = rotation_number_adaptive(&g2, delta / 4.0).unwrap();
        assert!(e1.upper() < e2.lower());
    }

    #[test]
    fn seed_independence_overlap() {
        let g = arnold(0.4, 0.3);
        let mut rng = crate::util::SplitMix64::new(99);
        let estimates: Vec<RotationEstimate> = (0..10)
            .map(|_| {
                rotation_number_adaptive_with(&g, rng.in_range(-1.0, 1.0), 1e-6, 1 << 26).unwrap()
            })
            .collect();
        for a in &estimates {
            for b in &estimates {
                assert!(a.overlaps(b), "estimates from different seeds must overlap");
            }
        }
    }

    #[test]
    fn detect_rational_agrees_with_adaptive() {
        let g = arnold(0.5, 0.25);
        if let Some((p, q)) = detect_rational(&g, 8, 1e-10).unwrap() {
            let est = rotation_number_adaptive(&g, 1e-6).unwrap();
            let target = p as f64 / q as f64;
            assert!(est.lower() <= target && target <= est.upper());
        } else {
            panic!("expected a locked rational");
        }
    }
}
