//! Lifts of circle and annulus homeomorphisms to the universal cover.
//!
//! Lifts are the primitive representation throughout the crate: a circle or
//! annulus map is recovered by reducing the first coordinate mod 1. Every
//! constructor runs a sampled validation pass (equivariance, boundary
//! preservation, monotonicity) so that violations of the homeomorphism
//! assumptions surface at registration instead of corrupting downstream
//! rotation statistics. The pass is a sampled check, not a certificate:
//! it cannot prove a callable is a homeomorphism, only catch failures at
//! the sampling resolution.

use crate::circle::{CircleError, RotationEstimate};
use crate::util::SplitMix64;
use std::fmt;
use std::sync::Arc;

/// Default equivariance tolerance for closed-form maps.
pub const EPS_EQ_CLOSED_FORM: f64 = 1e-12;
/// Equivariance tolerance for maps built on iterative solvers (the billiard).
pub const EPS_EQ_SOLVER: f64 = 1e-8;
/// Default per-evaluation numeric slack (a few ulps) for closed-form maps.
pub const EVAL_SLACK_CLOSED_FORM: f64 = 4e-16;
/// Per-evaluation slack for solver-backed maps.
pub const EVAL_SLACK_SOLVER: f64 = 1e-11;

const VALIDATION_SAMPLES: usize = 128;
const VALIDATION_SEED: u64 = 0x7b15_7a5e_11aa_0001;

/// Error produced by a map evaluation callable itself.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    /// The state is inside the grazing collar where the map is defined only
    /// by a limit convention.
    #[error("grazing state: y = {y} is within {collar} of the boundary")]
    Grazing { y: f64, collar: f64 },
}

#[derive(Debug, thiserror::Error)]
pub enum CoverError {
    #[error("invalid lift `{label}`: {reason}")]
    InvalidLift { label: String, reason: String },
    #[error("orbit escaped the strip at step {step} of `{label}`: y = {y}")]
    DomainEscape { label: String, step: usize, x: f64, y: f64 },
    #[error(
        "cannot normalize `{label}`: estimate {value} ± {halfwidth} straddles an integer \
         and no periodic witness was found; raise the iteration count"
    )]
    AmbiguousNormalization { label: String, value: f64, halfwidth: f64 },
    #[error("map evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("rotation oracle failed: {0}")]
    RotationOracle(Box<CircleError>),
}

type CircleFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type AnnulusFn = Arc<dyn Fn(f64, f64) -> Result<(f64, f64), EvalError> + Send + Sync>;

/// Lift of an orientation-preserving circle homeomorphism: a strictly
/// increasing real map commuting with unit translation.
#[derive(Clone)]
pub struct CircleLift {
    eval: CircleFn,
    label: String,
    eval_slack: f64,
}

impl fmt::Debug for CircleLift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleLift")
            .field("label", &self.label)
            .field("eval_slack", &self.eval_slack)
            .finish()
    }
}

impl CircleLift {
    /// Registers a lift after a sampled validation pass: degree-one
    /// equivariance and strict monotonicity on pairs separated by at
    /// least 1e-9.
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, CoverError> {
        let lift = Self::new_unchecked(label, eval);
        lift.validate(EPS_EQ_CLOSED_FORM)?;
        Ok(lift)
    }

    /// Builds a lift without the registration checks. For lifts derived from
    /// already-validated maps (boundary restrictions, integer translates).
    pub fn new_unchecked(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            label: label.into(),
            eval_slack: EVAL_SLACK_CLOSED_FORM,
        }
    }

    pub fn with_eval_slack(mut self, slack: f64) -> Self {
        self.eval_slack = slack;
        self
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// n-fold composition applied to `x`.
    pub fn eval_n(&self, x: f64, n: u64) -> f64 {
        let mut cur = x;
        for _ in 0..n {
            cur = self.eval(cur);
        }
        cur
    }

    /// The lift shifted by an integer: x ↦ eval(x) + k.
    pub fn translated(&self, k: i64) -> CircleLift {
        let inner = Arc::clone(&self.eval);
        CircleLift {
            eval: Arc::new(move |x| inner(x) + k as f64),
            label: format!("{}+{}", self.label, k),
            eval_slack: self.eval_slack,
        }
    }

    /// The lift shifted by a real constant: x ↦ eval(x) + t. Adding a
    /// constant preserves equivariance and monotonicity exactly.
    pub fn shifted(&self, t: f64) -> CircleLift {
        let inner = Arc::clone(&self.eval);
        CircleLift {
            eval: Arc::new(move |x| inner(x) + t),
            label: format!("{}+{}", self.label, t),
            eval_slack: self.eval_slack,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval_slack(&self) -> f64 {
        self.eval_slack
    }

    fn validate(&self, eps_eq: f64) -> Result<(), CoverError> {
        let mut rng = SplitMix64::new(VALIDATION_SEED);
        for _ in 0..VALIDATION_SAMPLES {
            let x = rng.in_range(-2.0, 2.0);
            let resid = (self.eval(x + 1.0) - self.eval(x) - 1.0).abs();
            if resid > eps_eq {
                return Err(CoverError::InvalidLift {
                    label: self.label.clone(),
                    reason: format!("equivariance residual {resid:.3e} at x = {x}"),
                });
            }
            let dx = 1e-9 + rng.next_f64() * 0.5;
            if self.eval(x) >= self.eval(x + dx) {
                return Err(CoverError::InvalidLift {
                    label: self.label.clone(),
                    reason: format!("not strictly increasing on [{x}, {}]", x + dx),
                });
            }
        }
        Ok(())
    }
}

/// Which boundary circle of the annulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Lower,
    Upper,
}

impl Boundary {
    pub fn y(self) -> f64 {
        match self {
            Boundary::Lower => 0.0,
            Boundary::Upper => 1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Boundary::Lower => 0,
            Boundary::Upper => 1,
        }
    }
}

/// Lift of a boundary-preserving annulus homeomorphism to the strip
/// R × [0,1], equivariant under (x, y) ↦ (x + 1, y).
#[derive(Clone)]
pub struct AnnulusLift {
    eval: AnnulusFn,
    label: String,
    eps_eq: f64,
    eval_slack: f64,
}

impl fmt::Debug for AnnulusLift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnnulusLift")
            .field("label", &self.label)
            .field("eps_eq", &self.eps_eq)
            .field("eval_slack", &self.eval_slack)
            .finish()
    }
}

impl AnnulusLift {
    /// Registers a closed-form lift. The closure must already be a lift:
    /// equivariant, boundary-preserving, with increasing boundary
    /// restrictions. A sampled validation pass enforces this.
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Result<Self, CoverError> {
        Self::new_with(
            label,
            EPS_EQ_CLOSED_FORM,
            EVAL_SLACK_CLOSED_FORM,
            move |x, y| Ok(eval(x, y)),
        )
    }

    /// Registers a lift whose evaluation may fail (grazing collars) and
    /// which carries its own tolerances.
    pub fn new_with(
        label: impl Into<String>,
        eps_eq: f64,
        eval_slack: f64,
        eval: impl Fn(f64, f64) -> Result<(f64, f64), EvalError> + Send + Sync + 'static,
    ) -> Result<Self, CoverError> {
        let lift = Self {
            eval: Arc::new(eval),
            label: label.into(),
            eps_eq,
            eval_slack,
        };
        lift.validate()?;
        Ok(lift)
    }

    /// Skips registration checks. Intended for tests that need deliberately
    /// broken lifts and for integer translates of validated lifts.
    pub fn new_unchecked(
        label: impl Into<String>,
        eval: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(move |x, y| Ok(eval(x, y))),
            label: label.into(),
            eps_eq: EPS_EQ_CLOSED_FORM,
            eval_slack: EVAL_SLACK_CLOSED_FORM,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> Result<(f64, f64), EvalError> {
        (self.eval)(x, y)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eps_eq(&self) -> f64 {
        self.eps_eq
    }

    pub fn eval_slack(&self) -> f64 {
        self.eval_slack
    }

    /// The lift composed with the integer translation T_k.
    pub fn translated(&self, k: i64) -> AnnulusLift {
        let inner = Arc::clone(&self.eval);
        let kf = k as f64;
        AnnulusLift {
            eval: Arc::new(move |x, y| inner(x, y).map(|(x1, y1)| (x1 + kf, y1))),
            label: if k == 0 {
                self.label.clone()
            } else {
                format!("{}+{}", self.label, k)
            },
            eps_eq: self.eps_eq,
            eval_slack: self.eval_slack,
        }
    }

    fn validate(&self) -> Result<(), CoverError> {
        let mut samples = Vec::with_capacity(VALIDATION_SAMPLES);
        let mut rng = SplitMix64::new(VALIDATION_SEED);
        for _ in 0..VALIDATION_SAMPLES {
            let x = rng.in_range(-2.0, 2.0);
            // Snap draws near the boundary onto it: exact boundary values are
            // defined by convention even for solver-backed maps, while the
            // collar just inside may legitimately refuse to evaluate.
            let mut y = rng.next_f64();
            if y < 1e-6 {
                y = 0.0;
            } else if y > 1.0 - 1e-6 {
                y = 1.0;
            }
            samples.push((x, y));
        }
        let report = check_equivariance(self, &samples, self.eps_eq)?;
        if !report.pass {
            return Err(CoverError::InvalidLift {
                label: self.label.clone(),
                reason: format!(
                    "equivariance residual {:.3e}, boundary residual {:.3e} exceed {:.1e}",
                    report.max_equivariance_residual, report.max_boundary_residual, self.eps_eq
                ),
            });
        }
        // Boundary restrictions must be strictly increasing.
        for b in [Boundary::Lower, Boundary::Upper] {
            let g = boundary_restriction(self, b);
            g.validate(self.eps_eq).map_err(|e| CoverError::InvalidLift {
                label: self.label.clone(),
                reason: format!("boundary {} restriction invalid: {e}", b.index()),
            })?;
        }
        Ok(())
    }
}

/// A finite forward orbit under a lift, kept in lifted (unreduced)
/// coordinates.
#[derive(Debug, Clone)]
pub struct OrbitSegment {
    /// `points[0]` is the origin; `points[k+1]` is the image of `points[k]`.
    pub points: Vec<(f64, f64)>,
}

impl OrbitSegment {
    pub fn origin(&self) -> (f64, f64) {
        self.points[0]
    }

    /// Number of iterations taken (one less than the stored point count).
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }
}

/// Projection of the restriction of `f` to a boundary circle: the circle
/// lift x ↦ π₁(f(x, i)).
pub fn boundary_restriction(f: &AnnulusLift, boundary: Boundary) -> CircleLift {
    let inner = Arc::clone(&f.eval);
    let y = boundary.y();
    let label = format!("{}|y={}", f.label, boundary.index());
    CircleLift {
        eval: Arc::new(move |x| {
            inner(x, y)
                .expect("boundary evaluation is total for validated lifts")
                .0
        }),
        label,
        eval_slack: f.eval_slack,
    }
}

/// Iterates the lift `n` times from `p0`, recording every state.
///
/// Errors with `DomainEscape` as soon as an evaluation leaves the strip by
/// more than the lift's equivariance tolerance; escapes are never clamped.
pub fn iterate(f: &AnnulusLift, p0: (f64, f64), n: usize) -> Result<OrbitSegment, CoverError> {
    let mut points = Vec::with_capacity(n + 1);
    points.push(p0);
    let (mut x, mut y) = p0;
    for step in 1..=n {
        let (x1, y1) = f.eval(x, y)?;
        if !(-f.eps_eq..=1.0 + f.eps_eq).contains(&y1) || !x1.is_finite() {
            return Err(CoverError::DomainEscape {
                label: f.label.clone(),
                step,
                x: x1,
                y: y1,
            });
        }
        points.push((x1, y1));
        x = x1;
        y = y1;
    }
    Ok(OrbitSegment { points })
}

/// Result of a sampled lift-property check.
#[derive(Debug, Clone)]
pub struct EquivarianceReport {
    pub max_equivariance_residual: f64,
    pub max_boundary_residual: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Measures equivariance and boundary-preservation residuals on the given
/// sample points.
pub fn check_equivariance(
    f: &AnnulusLift,
    samples: &[(f64, f64)],
    tol: f64,
) -> Result<EquivarianceReport, CoverError> {
    let mut max_eq: f64 = 0.0;
    let mut max_bd: f64 = 0.0;
    for &(x, y) in samples {
        let (x1, y1) = f.eval(x, y)?;
        let (xs, ys) = f.eval(x + 1.0, y)?;
        max_eq = max_eq.max((xs - x1 - 1.0).abs()).max((ys - y1).abs());
        if y == 0.0 {
            max_bd = max_bd.max(y1.abs());
        }
        if y == 1.0 {
            max_bd = max_bd.max((y1 - 1.0).abs());
        }
    }
    // Boundary preservation is checked even if the caller's samples skip the
    // boundary circles.
    for &(x, _) in samples.iter().take(8) {
        let (_, y0) = f.eval(x, 0.0)?;
        let (_, y1) = f.eval(x, 1.0)?;
        max_bd = max_bd.max(y0.abs()).max((y1 - 1.0).abs());
    }
    Ok(EquivarianceReport {
        max_equivariance_residual: max_eq,
        max_boundary_residual: max_bd,
        samples: samples.len(),
        pass: max_eq <= tol && max_bd <= tol,
    })
}

/// Replaces `f` by its integer translate chosen so the rotation number of
/// the lower boundary restriction lands in [0, 1).
///
/// The oracle must resolve ρ(f̃₀) to halfwidth below 1/2. When the estimate
/// interval straddles an integer k, the shift is still decided if a periodic
/// witness certifies ρ = k exactly (a sign change or bit-exact zero of
/// g̃(x) − x − k); otherwise the normalization is ambiguous and the caller
/// must raise its iteration budget.
pub fn normalize_lift(
    f: &AnnulusLift,
    oracle: impl Fn(&CircleLift) -> Result<RotationEstimate, CircleError>,
) -> Result<AnnulusLift, CoverError> {
    let g0 = boundary_restriction(f, Boundary::Lower);
    let est = oracle(&g0).map_err(|e| CoverError::RotationOracle(Box::new(e)))?;
    if est.halfwidth >= 0.5 {
        return Err(CoverError::AmbiguousNormalization {
            label: f.label.clone(),
            value: est.value,
            halfwidth: est.halfwidth,
        });
    }
    let lo = est.value - est.halfwidth;
    let hi = est.value + est.halfwidth;
    let k = if lo.floor() == hi.floor() {
        lo.floor() as i64
    } else {
        // The interval contains the integer hi.floor(); accept it only with
        // an exact periodic witness.
        let candidate = hi.floor() as i64;
        if has_fixed_point_witness(&g0, candidate) {
            candidate
        } else {
            return Err(CoverError::AmbiguousNormalization {
                label: f.label.clone(),
                value: est.value,
                halfwidth: est.halfwidth,
            });
        }
    };
    Ok(f.translated(-k))
}

/// True if g̃(x) − x − k provably has a zero: either a bit-exact zero on the
/// scan grid or values on both sides of a slack band.
fn has_fixed_point_witness(g: &CircleLift, k: i64) -> bool {
    const GRID: usize = 4096;
    let slack = 64.0 * g.eval_slack;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..GRID {
        let x = i as f64 / GRID as f64;
        let h = g.eval(x) - x - k as f64;
        if h == 0.0 {
            return true;
        }
        min = min.min(h);
        max = max.max(h);
    }
    min < -slack && max > slack
}
