//! The claims harness behind `twistlab verify`: one row per claim, each
//! with a verdict and the measured values, exiting nonzero if any row
//! misses its expected verdict.
//!
//! Budgets here are chosen for seconds-scale runs; the crate's acceptance
//! test suite runs the same claims at their full stated tolerances.

use crate::config::{CliError, Settings};
use crate::json::Json;
use std::f64::consts::PI;
use twistlab::annulus::{
    boundary_twist_condition, check_twist, rotation_set_from_points, unit_grid, SeparationVerdict,
};
use twistlab::billiard::{
    as_annulus_lift, next_collision, twist_derivative_check, twist_derivative_floor,
    BilliardState, Ellipse,
};
use twistlab::curves::{distinct_rotation_check, recurrence_scan, trace_curve_merged, Distinctness};
use twistlab::families::{zoo, BuiltFamily, RotationSetTruth, EYE_BANDS};
use twistlab::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Pass,
    Fail,
    UndecidedAsExpected,
}

impl Verdict {
    fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::UndecidedAsExpected => "undecided-as-expected",
        }
    }

    fn is_expected(self) -> bool {
        !matches!(self, Verdict::Fail)
    }
}

struct Row {
    id: &'static str,
    family: String,
    verdict: Verdict,
    measured: Json,
}

fn row(id: &'static str, family: impl Into<String>, verdict: Verdict, measured: Json) -> Row {
    Row { id, family: family.into(), verdict, measured }
}

fn run(e: Result<Row, CliError>, rows: &mut Vec<Row>) -> Result<(), CliError> {
    rows.push(e?);
    Ok(())
}

fn dist_to_bands(x: f64) -> f64 {
    let xf = x - x.floor();
    let mut best = f64::INFINITY;
    for &(lo, hi) in &EYE_BANDS {
        if (lo..=hi).contains(&xf) {
            return 0.0;
        }
        for edge in [lo, hi] {
            let d = (xf - edge).abs();
            best = best.min(d.min(1.0 - d));
        }
    }
    best
}

fn twist_rows(families: &[BuiltFamily], billiard: &twistlab::cover::AnnulusLift, rows: &mut Vec<Row>) -> Result<(), CliError> {
    for fam in families.iter().map(|f| (f.name.as_str(), &f.lift, f.truth.is_twist)).chain(
        std::iter::once(("billiard[a=2,b=1]", billiard, true)),
    ) {
        let (name, lift, expect_twist) = fam;
        let report = check_twist(lift, 16, 16, 0.0).map_err(|e| CliError::Runtime(e.to_string()))?;
        let verdict = if report.is_twist == expect_twist { Verdict::Pass } else { Verdict::Fail };
        rows.push(row(
            "twist-condition",
            name,
            verdict,
            Json::Obj(vec![
                ("is_twist", Json::Bool(report.is_twist)),
                ("min_increment", Json::Num(report.min_increment)),
            ]),
        ));
    }
    Ok(())
}

fn containment_rows(
    families: &[BuiltFamily],
    billiard: &twistlab::cover::AnnulusLift,
    rows: &mut Vec<Row>,
) -> Result<(), CliError> {
    for fam in families {
        let grid = unit_grid(16, 16);
        let est = rotation_set_from_points(&fam.lift, &grid, 2000, 8, 32, 1e-5)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let verdict = if est.containment.contained { Verdict::Pass } else { Verdict::Fail };
        rows.push(row(
            "rotation-set-containment",
            fam.name.clone(),
            verdict,
            Json::Obj(vec![
                ("hull", Json::Arr(vec![Json::Num(est.hull.0), Json::Num(est.hull.1)])),
                ("margin_low", Json::Num(est.containment.margin_low)),
                ("margin_high", Json::Num(est.containment.margin_high)),
            ]),
        ));
    }
    let grid = unit_grid(12, 12);
    let est = rotation_set_from_points(billiard, &grid, 300, 6, 32, 1e-4)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let verdict = if est.containment.contained { Verdict::Pass } else { Verdict::Fail };
    rows.push(row(
        "rotation-set-containment",
        "billiard[a=2,b=1]",
        verdict,
        Json::Obj(vec![
            ("hull", Json::Arr(vec![Json::Num(est.hull.0), Json::Num(est.hull.1)])),
            ("margin_low", Json::Num(est.containment.margin_low)),
            ("margin_high", Json::Num(est.containment.margin_high)),
        ]),
    ));
    Ok(())
}

fn separation_row(
    name: &str,
    lift: &twistlab::cover::AnnulusLift,
    expect: SeparationVerdict,
    tol: f64,
) -> Result<Row, CliError> {
    let (verdict, ti) =
        boundary_twist_condition(lift, tol).map_err(|e| CliError::Runtime(e.to_string()))?;
    let ok = verdict == expect;
    let v = if ok {
        if verdict == SeparationVerdict::Undecided {
            Verdict::UndecidedAsExpected
        } else {
            Verdict::Pass
        }
    } else {
        Verdict::Fail
    };
    Ok(row(
        "boundary-separation",
        name.to_string(),
        v,
        Json::Obj(vec![
            ("separated", crate::commands::separated_json(verdict)),
            ("rho0", Json::Num(ti.rho0.value)),
            ("rho1", Json::Num(ti.rho1.value)),
        ]),
    ))
}

pub fn cmd_verify(s: &Settings) -> Result<bool, CliError> {
    let seed = s.seed_or_zero();
    let negative_control = s.negative_control.unwrap_or(false);
    let families = zoo().map_err(|e| CliError::Runtime(e.to_string()))?;
    let ellipse = Ellipse::new(2.0, 1.0).map_err(|e| CliError::Runtime(e.to_string()))?;
    let billiard = as_annulus_lift(&ellipse).map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut rows: Vec<Row> = Vec::new();

    twist_rows(&families, &billiard, &mut rows)?;
    containment_rows(&families, &billiard, &mut rows)?;

    // Non-wandering twist maps separate their boundary rotation numbers.
    for fam in &families {
        if fam.truth.non_wandering && fam.truth.twist_interval.0 < fam.truth.twist_interval.1 {
            run(separation_row(&fam.name, &fam.lift, SeparationVerdict::Separated, 1e-5), &mut rows)?;
        }
    }
    run(separation_row("billiard[a=2,b=1]", &billiard, SeparationVerdict::Separated, 1e-5), &mut rows)?;

    // Mode-locked families have degenerate twist intervals: separation must
    // stay undecided and both boundary values must sit at the locked
    // rational.
    for fam in &families {
        if let RotationSetTruth::Finite(values) = &fam.truth.rotation_set {
            if values.len() == 1 {
                let target = values[0];
                let (verdict, ti) = boundary_twist_condition(&fam.lift, 1e-5)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                let ok = verdict == SeparationVerdict::Undecided
                    && (ti.rho0.value - target).abs() <= 2e-5
                    && (ti.rho1.value - target).abs() <= 2e-5;
                rows.push(row(
                    "degenerate-twist-interval",
                    fam.name.clone(),
                    if ok { Verdict::UndecidedAsExpected } else { Verdict::Fail },
                    Json::Obj(vec![
                        ("target", Json::Num(target)),
                        ("rho0", Json::Num(ti.rho0.value)),
                        ("rho1", Json::Num(ti.rho1.value)),
                        ("separated", crate::commands::separated_json(verdict)),
                    ]),
                ));
            }
        }
    }

    // Float family: rotation values concentrate on {phi(y) : psi(y) = y}
    // and interior points never return.
    {
        let fam = families
            .iter()
            .find(|f| f.name.contains("psi=y^2"))
            .expect("zoo contains the float family");
        let grid = unit_grid(8, 16);
        let est = rotation_set_from_points(&fam.lift, &grid, 50_000, 8, 32, 1e-5)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let mass = est.mass_near(&[0.0, 1.0], 1e-3);
        let interior: Vec<(f64, f64)> = unit_grid(8, 16)
            .into_iter()
            .filter(|&(_, y)| y > 0.0 && y < 1.0)
            .collect();
        let rec = recurrence_scan(&fam.lift, &interior, 2000, 1e-3)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let ok = mass >= 0.99 && rec.fraction_returned() == 0.0;
        rows.push(row(
            "float-family-fixed-set",
            fam.name.clone(),
            if ok { Verdict::Pass } else { Verdict::Fail },
            Json::Obj(vec![
                ("mass_near_fixed_values", Json::Num(mass)),
                ("interior_fraction_returned", Json::Num(rec.fraction_returned())),
            ]),
        ));
    }

    // Eye map: recurrence only near the anchor bands.
    {
        let fam = families
            .iter()
            .find(|f| f.name.starts_with("eye"))
            .expect("zoo contains the eye family");
        let grid = unit_grid(24, 5);
        let rec = recurrence_scan(&fam.lift, &grid, 2000, 1e-3)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let mut worst_dist = 0.0f64;
        let mut any_return = false;
        for (p, r) in rec.points.iter().zip(rec.returned.iter()) {
            if *r {
                any_return = true;
                worst_dist = worst_dist.max(dist_to_bands(p.0));
            }
        }
        let ok = any_return && worst_dist <= 0.15;
        rows.push(row(
            "eye-returns-near-anchor-band",
            fam.name.clone(),
            if ok { Verdict::Pass } else { Verdict::Fail },
            Json::Obj(vec![
                ("any_return", Json::Bool(any_return)),
                ("max_band_distance_of_returns", Json::Num(worst_dist)),
            ]),
        ));
    }

    // Disjoint invariant curves of the measure-preserving shear carry
    // distinct rotation numbers.
    {
        let fam = families
            .iter()
            .find(|f| f.name.contains("phi=y]"))
            .expect("zoo contains the identity shear");
        let seeds_a: Vec<(f64, f64)> = (0..8).map(|k| (k as f64 / 8.0, 0.2)).collect();
        let seeds_b: Vec<(f64, f64)> = (0..8).map(|k| (k as f64 / 8.0, 0.7)).collect();
        let c1 = trace_curve_merged(&fam.lift, &seeds_a, 500)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let c2 = trace_curve_merged(&fam.lift, &seeds_b, 500)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let (verdict, r1, r2) = distinct_rotation_check(&fam.lift, &c1, &c2, 1e-6)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let ok = verdict == Distinctness::Distinct;
        rows.push(row(
            "disjoint-curves-distinct-rotation",
            fam.name.clone(),
            if ok { Verdict::Pass } else { Verdict::Fail },
            Json::Obj(vec![
                ("rho_low", Json::Num(r1.value)),
                ("rho_high", Json::Num(r2.value)),
            ]),
        ));
    }

    // Billiard twist-derivative identity and positivity floor.
    {
        let mut rng = SplitMix64::new(seed ^ 0xb1111a2d);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let st = BilliardState::new(
                rng.next_f64() * ellipse.perimeter(),
                rng.in_range(0.05, PI - 0.05),
            );
            let rep = twist_derivative_check(&ellipse, st, 1e-6)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            worst = worst.max(rep.rel_residual);
        }
        let floor = twist_derivative_floor(&ellipse, 16, 16)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let ok = worst <= 1e-4 && floor > 0.0;
        rows.push(row(
            "billiard-twist-derivative",
            "billiard[a=2,b=1]",
            if ok { Verdict::Pass } else { Verdict::Fail },
            Json::Obj(vec![
                ("max_rel_residual", Json::Num(worst)),
                ("derivative_floor", Json::Num(floor)),
            ]),
        ));
    }

    // Billiard structure: period-2 axis orbits, reversibility, on-ellipse
    // residual, circle-limit angle conservation.
    {
        let per = ellipse.perimeter();
        let mut worst_p2 = 0.0f64;
        for s0 in [0.0, ellipse.arclength_of_param(PI / 2.0)] {
            let st = BilliardState::new(s0, PI / 2.0);
            let mid = next_collision(&ellipse, st).map_err(|e| CliError::Runtime(e.to_string()))?;
            let back = next_collision(&ellipse, mid).map_err(|e| CliError::Runtime(e.to_string()))?;
            let dx = ((back.x - st.x) / per - ((back.x - st.x) / per).round()).abs() * per;
            worst_p2 = worst_p2.max(dx).max((back.theta - st.theta).abs());
        }

        let mut worst_rev = 0.0f64;
        let mut worst_residual = 0.0f64;
        let mut st = BilliardState::new(1.0, 0.9);
        for _ in 0..300 {
            let fwd = next_collision(&ellipse, st).map_err(|e| CliError::Runtime(e.to_string()))?;
            let back = next_collision(&ellipse, fwd.reversed())
                .map_err(|e| CliError::Runtime(e.to_string()))?
                .reversed();
            let dx = ((back.x - st.x) / per - ((back.x - st.x) / per).round()).abs() * per;
            worst_rev = worst_rev.max(dx).max((back.theta - st.theta).abs());
            let p = ellipse.point(ellipse.param_of_arclength(fwd.x));
            worst_residual = worst_residual.max(ellipse.implicit_residual(p).abs());
            st = fwd;
        }

        let circle = Ellipse::new(1.0, 1.0).map_err(|e| CliError::Runtime(e.to_string()))?;
        let mut worst_theta = 0.0f64;
        let mut cst = BilliardState::new(0.3, 1.1);
        for _ in 0..300 {
            cst = next_collision(&circle, cst).map_err(|e| CliError::Runtime(e.to_string()))?;
            worst_theta = worst_theta.max((cst.theta - 1.1).abs());
        }

        let ok = worst_p2 <= 1e-8 && worst_rev <= 1e-8 && worst_residual <= 1e-10 && worst_theta <= 1e-10;
        rows.push(row(
            "billiard-structure",
            "billiard[a=2,b=1]",
            if ok { Verdict::Pass } else { Verdict::Fail },
            Json::Obj(vec![
                ("period2_residual", Json::Num(worst_p2)),
                ("reversibility_residual", Json::Num(worst_rev)),
                ("on_ellipse_residual", Json::Num(worst_residual)),
                ("circle_theta_drift", Json::Num(worst_theta)),
            ]),
        ));
    }

    // Negative control: a mode-locked suspension deliberately labeled
    // non-wandering must make the separation claim fail.
    if negative_control {
        let fam = families
            .iter()
            .find(|f| f.name.starts_with("locked-suspension"))
            .expect("zoo contains the locked suspension");
        run(
            separation_row(
                "locked-suspension-mislabeled-nonwandering",
                &fam.lift,
                SeparationVerdict::Separated,
                1e-5,
            ),
            &mut rows,
        )?;
    }

    let all_expected = rows.iter().all(|r| r.verdict.is_expected());
    let doc = Json::Obj(vec![
        ("seed", Json::UInt(seed)),
        ("negative_control", Json::Bool(negative_control)),
        (
            "claims",
            Json::Arr(
                rows.iter()
                    .map(|r| {
                        Json::Obj(vec![
                            ("id", Json::Str(r.id.to_string())),
                            ("family", Json::Str(r.family.clone())),
                            ("verdict", Json::Str(r.verdict.as_str().to_string())),
                            ("measured", r.measured.clone()),
                        ])
                    })
                    .collect(),
            ),
        ),
        ("all_expected", Json::Bool(all_expected)),
    ]);
    let rendered = doc.render();
    match &s.out {
        Some(path) => crate::commands::write_to(path, &rendered)?,
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(rendered.as_bytes())
                .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
    }
    Ok(all_expected)
}
