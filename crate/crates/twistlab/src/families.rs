//! The built-in example systems: shear maps, float maps, the Arnold circle
//! family, locked suspensions, and the eye map, each constructed as a
//! validated lift together with a ground-truth record for the test harness.

use crate::circle::{is_locked_at, locking_interval, CircleError};
use crate::cover::{AnnulusLift, CircleLift, CoverError};
use crate::util::SplitMix64;
use std::f64::consts::TAU;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum FamilyError {
    #[error("invalid {kind} family: {reason}")]
    InvalidFamily { kind: &'static str, reason: String },
    #[error("rotation number is not locked at {p}/{q} for parameter {t}")]
    NotLocked { p: i64, q: u64, t: f64 },
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

/// Named monotone profiles usable as phi or psi. Keeps family definitions
/// serializable for the CLI while the library constructors stay generic
/// over closures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// y
    Identity,
    /// y²
    Square,
    /// √y
    Sqrt,
    /// (1 + sin(πy/2)) / 2, an increasing ramp from 1/2 to 1
    SineRamp,
    /// constant value
    Const(f64),
    /// offset + slope · y
    Affine { offset: f64, slope: f64 },
}

impl Profile {
    pub fn eval(self, y: f64) -> f64 {
        match self {
            Profile::Identity => y,
            Profile::Square => y * y,
            Profile::Sqrt => y.sqrt(),
            Profile::SineRamp => 0.5 * (1.0 + (std::f64::consts::FRAC_PI_2 * y).sin()),
            Profile::Const(c) => c,
            Profile::Affine { offset, slope } => offset + slope * y,
        }
    }

    pub fn name(self) -> String {
        match self {
            Profile::Identity => "y".into(),
            Profile::Square => "y^2".into(),
            Profile::Sqrt => "sqrt(y)".into(),
            Profile::SineRamp => "sine-ramp".into(),
            Profile::Const(c) => format!("const:{c}"),
            Profile::Affine { offset, slope } => format!("affine:{offset}:{slope}"),
        }
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "y" | "identity" => return Ok(Profile::Identity),
            "y2" | "y^2" | "square" => return Ok(Profile::Square),
            "sqrt" => return Ok(Profile::Sqrt),
            "sine" | "sine-ramp" => return Ok(Profile::SineRamp),
            _ => {}
        }
        if let Some(v) = s.strip_prefix("const:") {
            let c: f64 = v.parse().map_err(|_| format!("bad constant in `{s}`"))?;
            return Ok(Profile::Const(c));
        }
        if let Some(rest) = s.strip_prefix("affine:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() == 2 {
                let offset: f64 = parts[0].parse().map_err(|_| format!("bad offset in `{s}`"))?;
                let slope: f64 = parts[1].parse().map_err(|_| format!("bad slope in `{s}`"))?;
                return Ok(Profile::Affine { offset, slope });
            }
        }
        Err(format!(
            "unknown profile `{s}` (expected y, y2, sqrt, sine, const:C, or affine:A:B)"
        ))
    }
}

/// What the rotation set of a family is known to be.
#[derive(Debug, Clone, PartialEq)]
pub enum RotationSetTruth {
    Interval(f64, f64),
    Finite(Vec<f64>),
}

/// Ground-truth metadata carried by each built-in family.
#[derive(Debug, Clone)]
pub struct FamilyTruth {
    /// Expected (ρ₀, ρ₁).
    pub twist_interval: (f64, f64),
    pub rotation_set: RotationSetTruth,
    pub non_wandering: bool,
    pub is_twist: bool,
}

/// A constructed family: validated lift plus its truth record.
#[derive(Debug, Clone)]
pub struct BuiltFamily {
    pub name: String,
    pub lift: AnnulusLift,
    pub truth: FamilyTruth,
}

fn check_non_decreasing(
    kind: &'static str,
    name: &str,
    f: &(impl Fn(f64) -> f64 + ?Sized),
) -> Result<(), FamilyError> {
    let mut rng = SplitMix64::new(0x5eed_0002);
    for _ in 0..256 {
        let y1 = rng.next_f64();
        let y2 = rng.next_f64();
        let (lo, hi) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
        if f(lo) > f(hi) {
            return Err(FamilyError::InvalidFamily {
                kind,
                reason: format!("{name} is decreasing on [{lo}, {hi}]"),
            });
        }
    }
    Ok(())
}

/// The standard twist map (x, y) ↦ (x + φ(y), y) for a continuous
/// non-decreasing φ. Preserves Lebesgue measure; its rotation set is the
/// whole interval [φ(0), φ(1)].
pub fn shear(
    phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> Result<AnnulusLift, FamilyError> {
    check_non_decreasing("shear", "phi", &phi)?;
    Ok(AnnulusLift::new("shear", move |x, y| (x + phi(y), y))?)
}

/// The float family (x, y) ↦ (x + φ(y), ψ(y)): every circle drifts toward
/// the fixed set of ψ, so the non-wandering set is T × Fix(ψ) and the
/// rotation set is {φ(y) : y ∈ Fix(ψ)}.
pub fn float_map(
    phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> Result<AnnulusLift, FamilyError> {
    check_non_decreasing("float", "phi", &phi)?;
    if psi(0.0).abs() > 1e-12 || (psi(1.0) - 1.0).abs() > 1e-12 {
        return Err(FamilyError::InvalidFamily {
            kind: "float",
            reason: format!("psi must fix the endpoints: psi(0) = {}, psi(1) = {}", psi(0.0), psi(1.0)),
        });
    }
    let mut rng = SplitMix64::new(0x5eed_0003);
    for _ in 0..256 {
        let y1 = rng.next_f64();
        let y2 = rng.next_f64();
        let (lo, hi) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
        if hi - lo > 1e-12 && psi(lo) >= psi(hi) {
            return Err(FamilyError::InvalidFamily {
                kind: "float",
                reason: format!("psi is not strictly increasing on [{lo}, {hi}]"),
            });
        }
        let v = psi(rng.next_f64());
        if !(0.0..=1.0).contains(&v) {
            return Err(FamilyError::InvalidFamily {
                kind: "float",
                reason: format!("psi leaves [0,1]: psi = {v}"),
            });
        }
    }
    Ok(AnnulusLift::new("float", move |x, y| (x + phi(y), psi(y)))?)
}

/// The Arnold circle family x ↦ x + ω + (ε/2π)·sin(2πx), invertible for
/// 0 ≤ ε < 1.
pub fn arnold_circle(omega: f64, eps: f64) -> Result<CircleLift, FamilyError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(FamilyError::InvalidFamily {
            kind: "arnold",
            reason: format!("eps = {eps} must lie in [0, 1) for invertibility"),
        });
    }
    Ok(CircleLift::new(
        format!("arnold[omega={omega},eps={eps}]"),
        move |x| x + omega + eps / TAU * (TAU * x).sin(),
    )?)
}

/// Suspension of a mode-locked circle map: (x, t) ↦ (g₀(x) + t·ε₀, t) on
/// T × [0,1] after rescaling the parameter band [0, ε₀] to [0,1].
///
/// Construction certifies the locking by grid scan at both ends of the
/// band; with ρ monotone in the shift this pins ρ ≡ p/q on the whole band,
/// giving a twist map with degenerate twist interval {p/q}.
pub fn locked_suspension(
    g0: CircleLift,
    p: i64,
    q: u64,
    eps0: f64,
) -> Result<AnnulusLift, FamilyError> {
    if eps0 <= 0.0 {
        return Err(FamilyError::InvalidFamily {
            kind: "locked-suspension",
            reason: format!("eps0 = {eps0} must be positive to produce a twist"),
        });
    }
    if !is_locked_at(&g0, p, q) {
        return Err(FamilyError::NotLocked { p, q, t: 0.0 });
    }
    if !is_locked_at(&g0.shifted(eps0), p, q) {
        return Err(FamilyError::NotLocked { p, q, t: eps0 });
    }
    let label = format!("locked-suspension[{},p/q={}/{},eps0={}]", g0.label(), p, q, eps0);
    Ok(AnnulusLift::new(label, move |x, y| {
        (g0.eval(x) + y * eps0, y)
    })?)
}

/// Width of the locked parameter band [0, t⁺] above a mode-locked map,
/// found by bisection on the grid-scan classification. Used to choose a
/// safe ε₀ for suspensions.
pub fn locked_band_above(g0: &CircleLift, p: i64, q: u64, search_hi: f64) -> Result<f64, FamilyError> {
    let g = g0.clone();
    let li = locking_interval(
        move |t| g.shifted(t),
        p,
        q,
        (0.0, search_hi),
        1e-9,
    )?;
    Ok(li.t_hi)
}

/// Anchor bands of the eye map: f₀ translates [1/6, 1/3] rigidly onto
/// [2/3, 5/6] and back (mod 1), forming the period-2 locus.
pub const EYE_BANDS: [(f64, f64); 2] = [(1.0 / 6.0, 1.0 / 3.0), (2.0 / 3.0, 5.0 / 6.0)];

/// Default dip amplitude for the eye-map completion.
pub const EYE_DEFAULT_DIP: f64 = 0.05;

fn hermite(x0: f64, y0: f64, m0: f64, x1: f64, y1: f64, m1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * m1
}

/// The base circle map of the eye family: x + 1/2 on the two anchor bands,
/// completed on the complementary arcs by monotone cubic Hermite pieces
/// whose midpoints dip below the rigid rotation by `dip`.
///
/// The dip makes every off-band point drift strictly backward under f₀²,
/// so the anchor bands are exactly the non-wandering set, while shifts
/// f₀ + t stay locked at 1/2 for a band of t ≥ 0.
pub fn eye_base_map(dip: f64) -> Result<CircleLift, FamilyError> {
    if !(0.0 < dip && dip < 0.1) {
        return Err(FamilyError::InvalidFamily {
            kind: "eye",
            reason: format!("dip = {dip} must lie in (0, 0.1) to keep f0 increasing"),
        });
    }
    let sixth = 1.0 / 6.0;
    let eval0 = move |u: f64| -> f64 {
        // u in [1/6, 7/6)
        if u <= 2.0 * sixth {
            u + 0.5
        } else if u <= 3.0 * sixth {
            hermite(2.0 * sixth, 2.0 * sixth + 0.5, 1.0, 3.0 * sixth, 1.0 - dip, 1.0, u)
        } else if u < 4.0 * sixth {
            hermite(3.0 * sixth, 1.0 - dip, 1.0, 4.0 * sixth, 4.0 * sixth + 0.5, 1.0, u)
        } else if u <= 5.0 * sixth {
            u + 0.5
        } else if u <= 1.0 {
            hermite(5.0 * sixth, 5.0 * sixth + 0.5, 1.0, 1.0, 1.5 - dip, 1.0, u)
        } else {
            hermite(1.0, 1.5 - dip, 1.0, 7.0 * sixth, 7.0 * sixth + 0.5, 1.0, u)
        }
    };
    Ok(CircleLift::new(format!("eye-f0[dip={dip}]"), move |x| {
        let shift = (x - sixth).floor();
        eval0(x - shift) + shift
    })?)
}

/// The eye map: (x, y) ↦ (f₀(x) + y·ε₀, y), the suspension of the eye base
/// map over its locked parameter band [0, ε₀].
///
/// ρ₀ = ρ₁ = 1/2, ∂x₁/∂y = ε₀ > 0, and the non-wandering set stays near
/// the anchor bands. Construction fails with `NotLocked` when ε₀ exceeds
/// the mode-locked band of f₀ + t.
pub fn eye_map(eps0: f64, dip: f64) -> Result<AnnulusLift, FamilyError> {
    let f0 = eye_base_map(dip)?;
    if !is_locked_at(&f0, 1, 2) {
        return Err(FamilyError::NotLocked { p: 1, q: 2, t: 0.0 });
    }
    if !is_locked_at(&f0.shifted(eps0), 1, 2) {
        return Err(FamilyError::NotLocked { p: 1, q: 2, t: eps0 });
    }
    if eps0 <= 0.0 {
        return Err(FamilyError::InvalidFamily {
            kind: "eye",
            reason: format!("eps0 = {eps0} must be positive"),
        });
    }
    let label = format!("eye[eps0={eps0},dip={dip}]");
    Ok(AnnulusLift::new(label, move |x, y| (f0.eval(x) + y * eps0, y))?)
}

/// Default parameters for the zoo's locked suspension: the Arnold map at
/// the center of its 1/2 tongue.
pub const LOCKED_SUSPENSION_OMEGA: f64 = 0.5;
pub const LOCKED_SUSPENSION_EPS: f64 = 0.25;

/// Assembles the closed-form built-in families with their truth records.
/// (The elliptic billiard is built separately by the billiard module.)
pub fn zoo() -> Result<Vec<BuiltFamily>, FamilyError> {
    let mut out = Vec::new();

    for phi in [Profile::Identity, Profile::Square, Profile::SineRamp] {
        let p = phi;
        out.push(BuiltFamily {
            name: format!("shear[phi={}]", phi.name()),
            lift: shear(move |y| p.eval(y))?,
            truth: FamilyTruth {
                twist_interval: (phi.eval(0.0), phi.eval(1.0)),
                rotation_set: RotationSetTruth::Interval(phi.eval(0.0), phi.eval(1.0)),
                non_wandering: true,
                is_twist: true,
            },
        });
    }

    for psi in [Profile::Square, Profile::Sqrt] {
        let q = psi;
        out.push(BuiltFamily {
            name: format!("float[phi=y,psi={}]", psi.name()),
            lift: float_map(|y| y, move |y| q.eval(y))?,
            truth: FamilyTruth {
                twist_interval: (0.0, 1.0),
                // Fix(y^2) = Fix(sqrt(y)) = {0, 1}.
                rotation_set: RotationSetTruth::Finite(vec![0.0, 1.0]),
                non_wandering: false,
                is_twist: true,
            },
        });
    }

    let g0 = arnold_circle(LOCKED_SUSPENSION_OMEGA, LOCKED_SUSPENSION_EPS)?;
    let band = locked_band_above(&g0, 1, 2, 0.2)?;
    let eps0 = 0.5 * band;
    out.push(BuiltFamily {
        name: format!("locked-suspension[arnold(0.5,0.25),eps0={eps0:.6}]"),
        lift: locked_suspension(g0, 1, 2, eps0)?,
        truth: FamilyTruth {
            twist_interval: (0.5, 0.5),
            rotation_set: RotationSetTruth::Finite(vec![0.5]),
            non_wandering: false,
            is_twist: true,
        },
    });

    out.push(BuiltFamily {
        name: "eye[eps0=0.01]".to_string(),
        lift: eye_map(0.01, EYE_DEFAULT_DIP)?,
        truth: FamilyTruth {
            twist_interval: (0.5, 0.5),
            rotation_set: RotationSetTruth::Finite(vec![0.5]),
            non_wandering: false,
            is_twist: true,
        },
    });

    Ok(out)
}
