//! Builds the lift selected by a configuration.

use crate::config::{CliError, Settings};
use twistlab::billiard::{as_annulus_lift, Ellipse};
use twistlab::circle::rotation_number_adaptive_with;
use twistlab::cover::{boundary_restriction, normalize_lift, AnnulusLift, Boundary, CircleLift};
use twistlab::families::{
    arnold_circle, eye_map, float_map, locked_suspension, shear, Profile, EYE_DEFAULT_DIP,
};

pub enum Target {
    Circle(CircleLift),
    Annulus(AnnulusLift),
}

fn fam(e: twistlab::families::FamilyError) -> CliError {
    CliError::Config(e.to_string())
}

/// Instantiates the family named by `kind`.
///
/// Circle families: `rigid` (alpha), `arnold` (omega, eps).
/// Annulus families: `shear` (phi), `float` (phi, psi), `locked` (omega,
/// eps, p, q, eps0), `eye` (eps0, dip), `billiard` (a, b).
pub fn build_target(s: &Settings) -> Result<Target, CliError> {
    match s.require_kind()? {
        "rigid" => {
            let alpha = s.alpha.ok_or_else(|| CliError::Config("rigid family needs --alpha".into()))?;
            let lift = CircleLift::new(format!("rigid[{alpha}]"), move |x| x + alpha)
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(Target::Circle(lift))
        }
        "arnold" => {
            let omega = s.omega.ok_or_else(|| CliError::Config("arnold family needs --omega".into()))?;
            let eps = s.eps.unwrap_or(0.0);
            Ok(Target::Circle(arnold_circle(omega, eps).map_err(fam)?))
        }
        "shear" => {
            let phi = s.phi.unwrap_or(Profile::Identity);
            Ok(Target::Annulus(shear(move |y| phi.eval(y)).map_err(fam)?))
        }
        "float" => {
            let phi = s.phi.unwrap_or(Profile::Identity);
            let psi = s.psi.ok_or_else(|| CliError::Config("float family needs --psi".into()))?;
            Ok(Target::Annulus(
                float_map(move |y| phi.eval(y), move |y| psi.eval(y)).map_err(fam)?,
            ))
        }
        "locked" => {
            let omega = s.omega.unwrap_or(0.5);
            let eps = s.eps.unwrap_or(0.25);
            let p = s.p.unwrap_or(1);
            let q = s.q.unwrap_or(2);
            let g0 = arnold_circle(omega, eps).map_err(fam)?;
            let eps0 = match s.eps0 {
                Some(v) => v,
                None => {
                    0.5 * twistlab::families::locked_band_above(&g0, p, q, 0.2).map_err(fam)?
                }
            };
            Ok(Target::Annulus(locked_suspension(g0, p, q, eps0).map_err(fam)?))
        }
        "eye" => {
            let eps0 = s.eps0.unwrap_or(0.01);
            let dip = s.dip.unwrap_or(EYE_DEFAULT_DIP);
            Ok(Target::Annulus(eye_map(eps0, dip).map_err(fam)?))
        }
        "billiard" => {
            let a = s.a.ok_or_else(|| CliError::Config("billiard family needs --a".into()))?;
            let b = s.b.ok_or_else(|| CliError::Config("billiard family needs --b".into()))?;
            let e = Ellipse::new(a, b).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(Target::Annulus(
                as_annulus_lift(&e).map_err(|e| CliError::Runtime(e.to_string()))?,
            ))
        }
        other => Err(CliError::Config(format!(
            "unknown family kind `{other}` (expected rigid, arnold, shear, float, locked, eye, or billiard)"
        ))),
    }
}

fn normalize(f: &AnnulusLift) -> Result<AnnulusLift, CliError> {
    normalize_lift(f, |g| rotation_number_adaptive_with(g, 0.0, 0.2, 1 << 22))
        .map_err(|e| CliError::Runtime(e.to_string()))
}

/// The circle map a rotation-number command operates on: either the target
/// itself or a chosen boundary restriction of an annulus family (taken
/// from the normalized lift).
pub fn build_circle(s: &Settings) -> Result<CircleLift, CliError> {
    match build_target(s)? {
        Target::Circle(g) => Ok(g),
        Target::Annulus(f) => {
            let b = match s.boundary {
                Some(0) => Boundary::Lower,
                Some(1) => Boundary::Upper,
                Some(other) => {
                    return Err(CliError::Config(format!("boundary must be 0 or 1, got {other}")))
                }
                None => {
                    return Err(CliError::Config(
                        "annulus family needs --boundary 0|1 for a rotation number".into(),
                    ))
                }
            };
            Ok(boundary_restriction(&normalize(&f)?, b))
        }
    }
}

/// Annulus families are always handed to analyses in the normalized lift:
/// the one whose lower boundary rotation number lies in [0, 1).
pub fn build_annulus(s: &Settings) -> Result<AnnulusLift, CliError> {
    match build_target(s)? {
        Target::Annulus(f) => normalize(&f),
        Target::Circle(_) => Err(CliError::Config(
            "this command needs an annulus family (shear, float, locked, eye, billiard)".into(),
        )),
    }
}
