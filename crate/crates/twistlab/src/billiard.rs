//! The billiard map inside an ellipse, in arclength-angle coordinates
//! (x, θ) ∈ (R/|Γ|) × [0, π], exposed as an annulus lift.
//!
//! The second intersection of a chord with the ellipse is computed from the
//! quadratic structure of the conic in the trigonometric parametrization,
//! with the known root deflated, so no general root finding is involved in
//! the collision itself. Arclength ↔ parameter conversion goes through a
//! precomputed monotone table refined by Newton polishing.

use crate::cover::{AnnulusLift, CoverError, EvalError, EPS_EQ_SOLVER, EVAL_SLACK_SOLVER};
use crate::util::frac;
use std::f64::consts::{PI, TAU};

/// States with θ closer than this to {0, π} are grazing: the map is only
/// defined there by a limit convention.
pub const GRAZING_COLLAR: f64 = 1e-9;

/// Arclength-table resolution.
const TABLE_SEGMENTS: usize = 4096;

/// Newton target for arclength inversion, absolute in s.
const INVERSION_TOL: f64 = 1e-12;

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.1834346424956498,
    0.525532409916329,
    0.7966664774136267,
    0.9602898564975362,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362683783378362,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

#[derive(Debug, thiserror::Error)]
pub enum BilliardError {
    #[error("invalid ellipse axes a = {a}, b = {b}: need a >= b > 0")]
    InvalidAxes { a: f64, b: f64 },
    #[error("grazing state: theta = {theta} is within {collar} of the boundary")]
    Grazing { theta: f64, collar: f64 },
    #[error(transparent)]
    Cover(#[from] CoverError),
}

/// Phase point of the billiard map: arclength position and outgoing angle
/// measured from the tangent to the post-impact velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilliardState {
    /// Arclength in [0, |Γ|).
    pub x: f64,
    /// Angle in [0, π].
    pub theta: f64,
}

impl BilliardState {
    pub fn new(x: f64, theta: f64) -> Self {
        Self { x, theta }
    }

    /// The time-reversal involution (x, θ) ↦ (x, π − θ).
    pub fn reversed(self) -> Self {
        Self { x: self.x, theta: PI - self.theta }
    }
}

/// An elliptic table x²/a² + y²/b² = 1 with its arclength parametrization
/// service. Immutable after construction; cheap to share.
#[derive(Debug, Clone)]
pub struct Ellipse {
    a: f64,
    b: f64,
    perimeter: f64,
    /// Cumulative arclength at parameter values i · 2π/N, length N + 1.
    table_s: Vec<f64>,
}

fn gl8(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for k in 0..4 {
        acc += GL_WEIGHTS[k] * (f(mid - half * GL_NODES[k]) + f(mid + half * GL_NODES[k]));
    }
    acc * half
}

impl Ellipse {
    /// Builds the table geometry. `a = b` is accepted for the circle limit.
    pub fn new(a: f64, b: f64) -> Result<Ellipse, BilliardError> {
        if !(b > 0.0 && a >= b && a.is_finite()) {
            return Err(BilliardError::InvalidAxes { a, b });
        }
        let speed = |t: f64| ((a * t.sin()).powi(2) + (b * t.cos()).powi(2)).sqrt();
        let dt = TAU / TABLE_SEGMENTS as f64;
        let mut table_s = Vec::with_capacity(TABLE_SEGMENTS + 1);
        let mut acc = 0.0;
        table_s.push(0.0);
        for i in 0..TABLE_SEGMENTS {
            let lo = i as f64 * dt;
            acc += gl8(speed, lo, lo + dt);
            table_s.push(acc);
        }
        Ok(Ellipse { a, b, perimeter: acc, table_s })
    }

    pub fn semi_axes(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    #[inline]
    fn speed(&self, t: f64) -> f64 {
        ((self.a * t.sin()).powi(2) + (self.b * t.cos()).powi(2)).sqrt()
    }

    /// Position on the ellipse at parameter t.
    pub fn point(&self, t: f64) -> (f64, f64) {
        (self.a * t.cos(), self.b * t.sin())
    }

    /// Unit tangent at parameter t, oriented counterclockwise.
    pub fn tangent(&self, t: f64) -> (f64, f64) {
        let v = self.speed(t);
        (-self.a * t.sin() / v, self.b * t.cos() / v)
    }

    /// Arclength from t = 0, exact table prefix plus quadrature on the
    /// partial segment. `t` must lie in [0, 2π].
    pub fn arclength_of_param(&self, t: f64) -> f64 {
        debug_assert!((0.0..=TAU + 1e-12).contains(&t));
        let dt = TAU / TABLE_SEGMENTS as f64;
        let i = ((t / dt) as usize).min(TABLE_SEGMENTS - 1);
        let t_i = i as f64 * dt;
        let speed = |u: f64| self.speed(u);
        self.table_s[i] + gl8(speed, t_i, t)
    }

    /// Inverts the arclength table: returns t with |s(t) − s| below the
    /// polish tolerance. `s` is reduced mod perimeter first.
    pub fn param_of_arclength(&self, s: f64) -> f64 {
        let s = frac(s / self.perimeter) * self.perimeter;
        // Locate the bracketing table segment.
        let mut lo = 0usize;
        let mut hi = TABLE_SEGMENTS;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.table_s[mid] <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let dt = TAU / TABLE_SEGMENTS as f64;
        let seg_lo = self.table_s[lo];
        let seg_hi = self.table_s[hi];
        let mut t = lo as f64 * dt + dt * (s - seg_lo) / (seg_hi - seg_lo);
        // Newton polish; speed is bounded below by b, so steps are tame.
        for _ in 0..6 {
            let err = self.arclength_of_param(t) - s;
            if err.abs() <= INVERSION_TOL {
                break;
            }
            t -= err / self.speed(t);
            t = t.clamp(0.0, TAU);
        }
        t
    }

    /// Position and unit tangent at a given arclength.
    pub fn point_and_tangent(&self, s: f64) -> ((f64, f64), (f64, f64)) {
        let t = self.param_of_arclength(s);
        (self.point(t), self.tangent(t))
    }

    /// Residual of the implicit equation x²/a² + y²/b² − 1 at a point.
    pub fn implicit_residual(&self, p: (f64, f64)) -> f64 {
        (p.0 / self.a).powi(2) + (p.1 / self.b).powi(2) - 1.0
    }
}

/// One bounce: follows the outgoing ray to its second intersection with
/// the ellipse and reflects. Grazing inputs are rejected.
pub fn next_collision(e: &Ellipse, st: BilliardState) -> Result<BilliardState, BilliardError> {
    if st.theta < GRAZING_COLLAR || st.theta > PI - GRAZING_COLLAR {
        return Err(BilliardError::Grazing { theta: st.theta, collar: GRAZING_COLLAR });
    }
    let t0 = e.param_of_arclength(st.x);
    let p = e.point(t0);
    let tang = e.tangent(t0);
    // Outgoing velocity: tangent rotated by +theta (into the table).
    let (ct, stt) = (st.theta.cos(), st.theta.sin());
    let d = (tang.0 * ct - tang.1 * stt, tang.0 * stt + tang.1 * ct);

    // In coordinates scaled by the axes the ellipse is the unit circle and
    // the current point is a known root of the chord quadratic; deflating
    // it leaves the second root in closed form.
    let ph = (p.0 / e.a, p.1 / e.b);
    let dh = (d.0 / e.a, d.1 / e.b);
    let dd = dh.0 * dh.0 + dh.1 * dh.1;
    let pd = ph.0 * dh.0 + ph.1 * dh.1;
    let u = -2.0 * pd / dd;
    let q = (p.0 + u * d.0, p.1 + u * d.1);

    let mut t1 = (q.1 / e.b).atan2(q.0 / e.a);
    if t1 < 0.0 {
        t1 += TAU;
    }
    let tang1 = e.tangent(t1);
    // Specular reflection about the tangent line at the new point.
    let n = {
        let raw = (q.0 / (e.a * e.a), q.1 / (e.b * e.b));
        let len = (raw.0 * raw.0 + raw.1 * raw.1).sqrt();
        (raw.0 / len, raw.1 / len)
    };
    let dn = d.0 * n.0 + d.1 * n.1;
    let v = (d.0 - 2.0 * dn * n.0, d.1 - 2.0 * dn * n.1);
    let theta1 = (tang1.0 * v.1 - tang1.1 * v.0).atan2(tang1.0 * v.0 + tang1.1 * v.1);
    let s1 = e.arclength_of_param(t1);
    Ok(BilliardState { x: s1, theta: theta1 })
}

/// The billiard map rescaled onto the unit annulus: x/|Γ| ∈ T, θ/π ∈
/// [0,1], with grazing boundaries extended by convention (y = 0 is the
/// identity, y = 1 the full turn) and the lifted image chosen within one
/// turn of the argument.
pub fn as_annulus_lift(e: &Ellipse) -> Result<AnnulusLift, BilliardError> {
    let e = e.clone();
    let (a, b) = (e.a, e.b);
    let label = format!("billiard[a={a},b={b}]");
    let collar_y = GRAZING_COLLAR;
    Ok(AnnulusLift::new_with(
        label,
        EPS_EQ_SOLVER,
        EVAL_SLACK_SOLVER,
        move |x, y| {
            if y == 0.0 {
                return Ok((x, 0.0));
            }
            if y == 1.0 {
                return Ok((x + 1.0, 1.0));
            }
            if y < collar_y || y > 1.0 - collar_y {
                return Err(EvalError::Grazing { y, collar: collar_y });
            }
            let st = BilliardState::new(frac(x) * e.perimeter, y * PI);
            let next = match next_collision(&e, st) {
                Ok(n) => n,
                Err(_) => return Err(EvalError::Grazing { y, collar: collar_y }),
            };
            let dx = frac(next.x / e.perimeter - frac(x));
            Ok((x + dx, next.theta / PI))
        },
    )?)
}

/// Residual report for the twist-derivative identity
/// dx₁/dθ = τ(x, x₁)/sin θ₁, where τ is the chord length between
/// successive collision points and θ₁ the outgoing angle at the image
/// point (the derivative blows up exactly when the image grazes).
#[derive(Debug, Clone, Copy)]
pub struct TwistDerivativeReport {
    pub finite_difference: f64,
    pub chord_formula: f64,
    pub abs_residual: f64,
    pub rel_residual: f64,
}

/// Forward x-displacement in arclength units, unwrapped into [0, |Γ|).
fn displacement(e: &Ellipse, st: BilliardState) -> Result<f64, BilliardError> {
    let next = next_collision(e, st)?;
    Ok(frac((next.x - st.x) / e.perimeter) * e.perimeter)
}

/// Central finite difference of x₁(θ) against the chord formula
/// τ/sin θ₁.
pub fn twist_derivative_check(
    e: &Ellipse,
    st: BilliardState,
    h: f64,
) -> Result<TwistDerivativeReport, BilliardError> {
    assert!(h > 0.0);
    if st.theta <= 2.0 * h || st.theta >= PI - 2.0 * h {
        return Err(BilliardError::Grazing { theta: st.theta, collar: 2.0 * h });
    }
    let plus = displacement(e, BilliardState::new(st.x, st.theta + h))?;
    let minus = displacement(e, BilliardState::new(st.x, st.theta - h))?;
    let fd = (plus - minus) / (2.0 * h);

    let next = next_collision(e, st)?;
    let p0 = e.point(e.param_of_arclength(st.x));
    let p1 = e.point(e.param_of_arclength(next.x));
    let tau = ((p1.0 - p0.0).powi(2) + (p1.1 - p0.1).powi(2)).sqrt();
    let formula = tau / next.theta.sin();

    let abs_residual = (fd - formula).abs();
    Ok(TwistDerivativeReport {
        finite_difference: fd,
        chord_formula: formula,
        abs_residual,
        rel_residual: abs_residual / formula.abs().max(f64::MIN_POSITIVE),
    })
}

/// Minimum of τ/sin θ₁ over an interior state grid: the positive constant
/// bounding the twist derivative from below.
pub fn twist_derivative_floor(
    e: &Ellipse,
    nx: usize,
    ntheta: usize,
) -> Result<f64, BilliardError> {
    assert!(nx >= 2 && ntheta >= 2);
    let mut floor = f64::INFINITY;
    for i in 0..nx {
        let x = i as f64 / nx as f64 * e.perimeter;
        for j in 0..ntheta {
            // Interior angles only; the grazing limits are excluded.
            let theta = PI * (j as f64 + 1.0) / (ntheta as f64 + 1.0);
            let st = BilliardState::new(x, theta);
            let next = next_collision(e, st)?;
            let p0 = e.point(e.param_of_arclength(st.x));
            let p1 = e.point(e.param_of_arclength(next.x));
            let tau = ((p1.0 - p0.0).powi(2) + (p1.1 - p0.1).powi(2)).sqrt();
            floor = floor.min(tau / next.theta.sin());
        }
    }
    Ok(floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    fn standard() -> Ellipse {
        Ellipse::new(2.0, 1.0).unwrap()
    }

    // Independent quadrature oracle: composite Simpson on the speed.
    fn perimeter_simpson(a: f64, b: f64, n: usize) -> f64 {
        let speed = |t: f64| ((a * t.sin()).powi(2) + (b * t.cos()).powi(2)).sqrt();
        let h = TAU / n as f64;
        let mut acc = speed(0.0) + speed(TAU);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * speed(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn perimeter_matches_quadrature_oracle() {
        let e = standard();
        let oracle = perimeter_simpson(2.0, 1.0, 1 << 20);
        assert!((e.perimeter() - oracle).abs() < 1e-10);
        // Circle limit: perimeter = 2πr exactly.
        let c = Ellipse::new(1.5, 1.5).unwrap();
        assert!((c.perimeter() - 1.5 * TAU).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(matches!(Ellipse::new(1.0, 2.0), Err(BilliardError::InvalidAxes { .. })));
        assert!(matches!(Ellipse::new(1.0, 0.0), Err(BilliardError::InvalidAxes { .. })));
    }

    #[test]
    fn point_and_tangent_anchors() {
        let e = standard();
        let ((px, py), (tx, ty)) = e.point_and_tangent(0.0);
        assert!((px - 2.0).abs() < 1e-12 && py.abs() < 1e-12);
        assert!(tx.abs() < 1e-12 && (ty - 1.0).abs() < 1e-12);
        let ((px, py), (tx, ty)) = e.point_and_tangent(e.perimeter() / 2.0);
        assert!((px + 2.0).abs() < 1e-10 && py.abs() < 1e-10);
        assert!(tx.abs() < 1e-10 && (ty + 1.0).abs() < 1e-10);
    }

    #[test]
    fn arclength_inversion_accuracy() {
        let e = standard();
        let mut rng = SplitMix64::new(11);
        for _ in 0..200 {
            let s = rng.next_f64() * e.perimeter();
            let t = e.param_of_arclength(s);
            assert!((e.arclength_of_param(t) - s).abs() <= 1e-11);
            let p = e.point(t);
            assert!(e.implicit_residual(p).abs() <= 1e-12);
        }
    }

    #[test]
    fn major_axis_period_two() {
        let e = standard();
        let st = BilliardState::new(0.0, PI / 2.0);
        let mid = next_collision(&e, st).unwrap();
        assert!((mid.x - e.perimeter() / 2.0).abs() < 1e-9);
        assert!((mid.theta - PI / 2.0).abs() < 1e-12);
        let back = next_collision(&e, mid).unwrap();
        assert!((back.x - e.perimeter()).abs() % e.perimeter() < 1e-9);
        assert!((back.theta - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn minor_axis_period_two() {
        let e = standard();
        let quarter = e.arclength_of_param(PI / 2.0);
        let st = BilliardState::new(quarter, PI / 2.0);
        let mid = next_collision(&e, st).unwrap();
        let expected = e.arclength_of_param(3.0 * PI / 2.0);
        assert!((mid.x - expected).abs() < 1e-9);
        assert!((mid.theta - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn circle_limit_conserves_angle_and_advance() {
        let r = 1.3;
        let e = Ellipse::new(r, r).unwrap();
        let mut rng = SplitMix64::new(5);
        for _ in 0..50 {
            let theta = rng.in_range(0.05, PI - 0.05);
            let s = rng.next_f64() * e.perimeter();
            let next = next_collision(&e, BilliardState::new(s, theta)).unwrap();
            // Geometric oracle: chord at incidence theta subtends a central
            // angle 2θ, so the arclength advance is 2rθ.
            let advance = frac((next.x - s) / e.perimeter()) * e.perimeter();
            assert!((advance - 2.0 * r * theta).abs() < 1e-10);
            assert!((next.theta - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn grazing_input_rejected() {
        let e = standard();
        let err = next_collision(&e, BilliardState::new(0.3, 1e-12)).unwrap_err();
        assert!(matches!(err, BilliardError::Grazing { .. }));
    }

    #[test]
    fn single_step_reversibility() {
        let e = standard();
        let mut rng = SplitMix64::new(17);
        for _ in 0..50 {
            let st = BilliardState::new(
                rng.next_f64() * e.perimeter(),
                rng.in_range(0.1, PI - 0.1),
            );
            let fwd = next_collision(&e, st).unwrap();
            let back = next_collision(&e, fwd.reversed()).unwrap().reversed();
            let dx = (back.x - st.x).abs().min(e.perimeter() - (back.x - st.x).abs());
            assert!(dx < 1e-10, "position residual {dx}");
            assert!((back.theta - st.theta).abs() < 1e-10);
        }
    }

    #[test]
    fn collision_points_stay_on_ellipse() {
        let e = standard();
        let mut st = BilliardState::new(1.234, 0.8);
        for _ in 0..1000 {
            st = next_collision(&e, st).unwrap();
            let p = e.point(e.param_of_arclength(st.x));
            assert!(e.implicit_residual(p).abs() < 1e-12);
            assert!(st.theta > 0.0 && st.theta < PI);
        }
    }

    #[test]
    fn annulus_lift_boundary_conventions() {
        let e = standard();
        let f = as_annulus_lift(&e).unwrap();
        for x in [0.0, 0.3, 1.7, -0.4] {
            assert_eq!(f.eval(x, 0.0).unwrap(), (x, 0.0));
            assert_eq!(f.eval(x, 1.0).unwrap(), (x + 1.0, 1.0));
        }
        assert!(matches!(
            f.eval(0.2, 1e-10),
            Err(EvalError::Grazing { .. })
        ));
    }

    #[test]
    fn annulus_lift_period_two_through_iterate() {
        use crate::cover::iterate;

        let e = standard();
        let f = as_annulus_lift(&e).unwrap();
        // Major-axis bounce: two steps return to the start shifted by one
        // full turn in normalized coordinates.
        let orbit = iterate(&f, (0.0, 0.5), 2).unwrap();
        let (x2, y2) = orbit.points[2];
        assert!((x2 - 1.0).abs() < 1e-9);
        assert!((y2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn annulus_lift_equivariance_sampled() {
        use crate::cover::check_equivariance;
        use crate::util::SplitMix64;

        let e = standard();
        let f = as_annulus_lift(&e).unwrap();
        let mut rng = SplitMix64::new(31);
        let samples: Vec<(f64, f64)> = (0..100)
            .map(|_| (rng.in_range(-2.0, 2.0), rng.in_range(0.05, 0.95)))
            .collect();
        let report = check_equivariance(&f, &samples, 1e-8).unwrap();
        assert!(report.pass, "equivariance residual {}", report.max_equivariance_residual);
    }

    #[test]
    fn annulus_lift_circle_midline_is_rigid_half_rotation() {
        let r = 1.0;
        let e = Ellipse::new(r, r).unwrap();
        let f = as_annulus_lift(&e).unwrap();
        // theta = π/2 ⇒ advance 2r·(π/2) = πr = half the perimeter.
        for x in [0.0, 0.12, 0.77] {
            let (x1, y1) = f.eval(x, 0.5).unwrap();
            assert!((x1 - x - 0.5).abs() < 1e-11);
            assert!((y1 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn twist_derivative_unit_circle_diameter() {
        let e = Ellipse::new(1.0, 1.0).unwrap();
        let report =
            twist_derivative_check(&e, BilliardState::new(0.9, PI / 2.0), 1e-6).unwrap();
        // Diameter chord: τ = 2, sin θ = 1.
        assert!((report.chord_formula - 2.0).abs() < 1e-10);
        assert!(report.rel_residual < 1e-6);
    }

    #[test]
    fn twist_derivative_standard_ellipse() {
        let e = standard();
        let mut rng = SplitMix64::new(23);
        let mut worst = 0.0f64;
        for _ in 0..25 {
            let st = BilliardState::new(
                rng.next_f64() * e.perimeter(),
                rng.in_range(0.05, PI - 0.05),
            );
            let report = twist_derivative_check(&e, st, 1e-6).unwrap();
            worst = worst.max(report.rel_residual);
        }
        assert!(worst <= 1e-4, "max relative residual {worst}");
    }

    #[test]
    fn twist_derivative_floor_positive() {
        let e = standard();
        let floor = twist_derivative_floor(&e, 32, 32).unwrap();
        assert!(floor > 0.0);
    }
}
