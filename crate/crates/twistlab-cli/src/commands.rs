//! The analysis subcommands: each reads merged settings, runs library
//! operations, and emits JSON summaries (stdout) and CSV point clouds
//! (the --out path).

use crate::config::{classify_annulus, classify_circle, CliError, Settings};
use crate::family::{build_annulus, build_circle};
use crate::json::{format_float, Json};
use std::io::Write;
use std::path::{Path, PathBuf};
use twistlab::annulus::{
    boundary_twist_condition, check_twist, rotation_set_from_points, unit_grid, SeparationVerdict,
};
use twistlab::circle::{locking_interval, rotation_number_adaptive};
use twistlab::cover::CircleLift;
use twistlab::curves::{
    birkhoff_graph_check, distinct_rotation_check, trace_curve_merged, CurveError, Distinctness,
};
use twistlab::SplitMix64;

pub fn write_to(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// JSON goes to stdout unless --out redirects it.
fn emit_json(out: &Option<PathBuf>, doc: &Json) -> Result<(), CliError> {
    let rendered = doc.render();
    match out {
        Some(path) => write_to(path, &rendered),
        None => {
            std::io::stdout()
                .write_all(rendered.as_bytes())
                .map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

pub fn separated_json(v: SeparationVerdict) -> Json {
    match v {
        SeparationVerdict::Separated => Json::Bool(true),
        SeparationVerdict::Inverted => Json::Bool(false),
        SeparationVerdict::Undecided => Json::Str("undecided".into()),
    }
}

pub fn cmd_rotnum(s: &Settings) -> Result<(), CliError> {
    let g = build_circle(s)?;
    let tol = s.tol_or(1e-6)?;
    let est = rotation_number_adaptive(&g, tol).map_err(|e| classify_circle(&e))?;
    emit_json(&s.out, &Json::from(&est))
}

pub fn cmd_twist_interval(s: &Settings) -> Result<(), CliError> {
    let f = build_annulus(s)?;
    let tol = s.tol_or(1e-6)?;
    let (verdict, ti) = boundary_twist_condition(&f, tol).map_err(|e| classify_annulus(&e))?;
    let doc = Json::Obj(vec![
        ("family", Json::Str(f.label().to_string())),
        ("rho0", Json::from(&ti.rho0)),
        ("rho1", Json::from(&ti.rho1)),
        ("separated", separated_json(verdict)),
        ("tol", Json::Num(tol)),
    ]);
    emit_json(&None, &doc)
}

pub fn cmd_rotation_set(s: &Settings) -> Result<(), CliError> {
    let f = build_annulus(s)?;
    let nx = s.nx.unwrap_or(64);
    let ny = s.ny.unwrap_or(64);
    let n = s.n.unwrap_or(100_000);
    let bins = s.bins.unwrap_or(64);
    let window = s.window.unwrap_or(8);
    let tol = s.tol_or(1e-6)?;
    if n == 0 || nx < 1 || ny < 2 || bins < 1 || window < 1 {
        return Err(CliError::Config("grid sizes, bins, window, and n must be at least 1 (ny >= 2)".into()));
    }
    let out = s
        .out
        .clone()
        .ok_or_else(|| CliError::Config("rotation-set needs --out PATH for the sample CSV".into()))?;

    let grid = unit_grid(nx, ny);
    let est = rotation_set_from_points(&f, &grid, n, window, bins, tol)
        .map_err(|e| classify_annulus(&e))?;

    let mut csv = String::from("x,y,lower,upper,n\n");
    for sample in &est.samples {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            format_float(sample.point.0),
            format_float(sample.point.1),
            format_float(sample.lower),
            format_float(sample.upper),
            sample.n
        ));
    }
    write_to(&out, &csv)?;

    let c = &est.containment;
    let doc = Json::Obj(vec![
        ("family", Json::Str(f.label().to_string())),
        ("hull", Json::Arr(vec![Json::Num(est.hull.0), Json::Num(est.hull.1)])),
        (
            "envelope",
            Json::Arr(vec![Json::Num(est.envelope.0), Json::Num(est.envelope.1)]),
        ),
        (
            "histogram",
            Json::Obj(vec![
                ("lo", Json::Num(est.histogram.lo)),
                ("hi", Json::Num(est.histogram.hi)),
                ("bin_width", Json::Num(est.histogram.bin_width)),
                (
                    "counts",
                    Json::Arr(est.histogram.counts.iter().map(|&c| Json::UInt(c)).collect()),
                ),
            ]),
        ),
        (
            "containment",
            Json::Obj(vec![
                ("contained", Json::Bool(c.contained)),
                ("rho0", Json::from(&c.rho0)),
                ("rho1", Json::from(&c.rho1)),
                ("slack", Json::Num(c.slack)),
                ("margin_low", Json::Num(c.margin_low)),
                ("margin_high", Json::Num(c.margin_high)),
            ]),
        ),
        ("samples", Json::UInt(est.samples.len() as u64)),
        ("n", Json::UInt(n)),
    ]);
    emit_json(&None, &doc)
}

pub fn cmd_phase_portrait(s: &Settings) -> Result<(), CliError> {
    let f = build_annulus(s)?;
    let orbits = s.orbits.unwrap_or(40);
    let steps = s.steps.unwrap_or(2000);
    if orbits < 1 || steps < 1 {
        return Err(CliError::Config("orbits and steps must be at least 1".into()));
    }
    let mut rng = SplitMix64::new(s.seed_or_zero());
    let mut csv = String::from("orbit_id,step,x,y\n");
    for orbit in 0..orbits {
        let y0 = (orbit as f64 + 1.0) / (orbits as f64 + 1.0);
        let x0 = rng.next_f64();
        let (mut x, mut y) = (x0, y0);
        for step in 0..=steps {
            csv.push_str(&format!(
                "{orbit},{step},{},{}\n",
                format_float(x - x.floor()),
                format_float(y)
            ));
            if step < steps {
                let (x1, y1) = f
                    .eval(x, y)
                    .map_err(|e| CliError::Runtime(format!("orbit {orbit} step {step}: {e}")))?;
                x = x1;
                y = y1;
            }
        }
    }
    match &s.out {
        Some(path) => write_to(path, &csv),
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

pub fn cmd_tongue(s: &Settings) -> Result<(), CliError> {
    let p = s.p.ok_or_else(|| CliError::Config("tongue needs --p".into()))?;
    let q = s.q.ok_or_else(|| CliError::Config("tongue needs --q (positive)".into()))?;
    if q == 0 {
        return Err(CliError::Config("q must be positive".into()));
    }
    let t_lo = s.t_lo.ok_or_else(|| CliError::Config("tongue needs --t-lo".into()))?;
    let t_hi = s.t_hi.ok_or_else(|| CliError::Config("tongue needs --t-hi".into()))?;
    if t_lo >= t_hi {
        return Err(CliError::Config(format!("need t_lo < t_hi, got [{t_lo}, {t_hi}]")));
    }
    let tol = s.tol_or(1e-6)?;

    let family: Box<dyn Fn(f64) -> CircleLift> = match s.require_kind()? {
        "rigid" => Box::new(|t| CircleLift::new_unchecked(format!("rigid[{t}]"), move |x| x + t)),
        "arnold" => {
            let eps = s.eps.unwrap_or(0.0);
            if !(0.0..1.0).contains(&eps) {
                return Err(CliError::Config(format!("arnold eps = {eps} must lie in [0, 1)")));
            }
            Box::new(move |t| {
                CircleLift::new_unchecked(format!("arnold[{t},{eps}]"), move |x| {
                    x + t + eps / std::f64::consts::TAU * (std::f64::consts::TAU * x).sin()
                })
            })
        }
        other => {
            return Err(CliError::Config(format!(
                "tongue scans one-parameter circle families (rigid, arnold), not `{other}`"
            )))
        }
    };
    let li = locking_interval(&*family, p, q, (t_lo, t_hi), tol)
        .map_err(|e| classify_circle(&e))?;
    let doc = Json::Obj(vec![
        ("p", Json::Int(li.p)),
        ("q", Json::UInt(li.q)),
        ("t_lo", Json::Num(li.t_lo)),
        ("t_hi", Json::Num(li.t_hi)),
        ("width", Json::Num(li.width())),
        ("tol", Json::Num(li.tol)),
    ]);
    emit_json(&s.out, &doc)
}

fn curve_error(e: CurveError) -> CliError {
    match e {
        CurveError::Circle(c) => classify_circle(&c),
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn cmd_curves(s: &Settings) -> Result<(), CliError> {
    let f = build_annulus(s)?;
    let ys = s
        .y_seeds
        .clone()
        .ok_or_else(|| CliError::Config("curves needs --y-seeds (comma-separated heights)".into()))?;
    if ys.is_empty() {
        return Err(CliError::Config("curves needs at least one seed height".into()));
    }
    let steps = s.steps.unwrap_or(4000);
    let tol = s.tol_or(1e-6)?;
    let l_bound = match s.lipschitz {
        Some(l) => l,
        None => {
            // Working Lipschitz bound: observed twist slope times a safety
            // factor.
            let report = check_twist(&f, 32, 32, 0.0).map_err(|e| classify_annulus(&e))?;
            (report.lipschitz_hint * 4.0).max(1.0)
        }
    };

    let mut curve_rows = Vec::new();
    let mut candidates = Vec::new();
    for &y in &ys {
        // Pool several seeds on the slice so rational slices still sample
        // densely.
        let seeds: Vec<(f64, f64)> = (0..8).map(|k| (k as f64 / 8.0, y)).collect();
        let c = trace_curve_merged(&f, &seeds, steps.max(100)).map_err(curve_error)?;
        let report = birkhoff_graph_check(&f, &c, l_bound, tol).map_err(curve_error)?;
        let mut row = vec![
            ("y_seed", Json::Num(y)),
            ("points", Json::UInt(c.points.len() as u64)),
            ("gap_max", Json::Num(c.gap_max)),
            ("is_graph", Json::Bool(report.is_graph)),
            ("single_valued", Json::Bool(report.single_valued)),
            ("lipschitz_estimate", Json::Num(report.lipschitz_estimate)),
            ("lipschitz_bound_used", Json::Num(report.lipschitz_bound_used)),
            ("invariance_residual", Json::Num(report.invariance_residual)),
        ];
        if report.is_graph {
            match twistlab::curves::curve_rotation_number(&f, &c, tol) {
                Ok(est) => row.push(("rotation", Json::from(&est))),
                Err(e) => row.push(("rotation_error", Json::Str(e.to_string()))),
            }
        }
        curve_rows.push(Json::Obj(row));
        candidates.push((y, c));
    }

    let mut pair_rows = Vec::new();
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            let result = match distinct_rotation_check(&f, &candidates[i].1, &candidates[j].1, tol)
            {
                Ok((Distinctness::Distinct, r1, r2)) => Json::Obj(vec![
                    ("verdict", Json::Str("distinct".into())),
                    ("rho_low", Json::from(&r1)),
                    ("rho_high", Json::from(&r2)),
                ]),
                Ok((Distinctness::Undecided, r1, r2)) => Json::Obj(vec![
                    ("verdict", Json::Str("undecided".into())),
                    ("rho_low", Json::from(&r1)),
                    ("rho_high", Json::from(&r2)),
                ]),
                Err(CurveError::NotDisjoint { min_separation, .. }) => Json::Obj(vec![
                    ("verdict", Json::Str("not-disjoint".into())),
                    ("min_separation", Json::Num(min_separation)),
                ]),
                Err(e) => return Err(curve_error(e)),
            };
            pair_rows.push(Json::Obj(vec![
                ("y_a", Json::Num(candidates[i].0)),
                ("y_b", Json::Num(candidates[j].0)),
                ("result", result),
            ]));
        }
    }

    let doc = Json::Obj(vec![
        ("family", Json::Str(f.label().to_string())),
        ("curves", Json::Arr(curve_rows)),
        ("pairs", Json::Arr(pair_rows)),
    ]);
    emit_json(&s.out, &doc)
}

pub fn cmd_recurrence(s: &Settings) -> Result<(), CliError> {
    let f = build_annulus(s)?;
    let nx = s.nx.unwrap_or(32);
    let ny = s.ny.unwrap_or(32);
    let n_max = s.n_max.unwrap_or(10_000);
    let eps = s.eps_ball.unwrap_or(1e-3);
    if eps <= 0.0 || n_max < 1 || nx < 1 || ny < 2 {
        return Err(CliError::Config("recurrence needs eps_ball > 0, n_max >= 1, nx >= 1, ny >= 2".into()));
    }
    let grid = unit_grid(nx, ny);
    let map = twistlab::curves::recurrence_scan(&f, &grid, n_max, eps).map_err(curve_error)?;

    if let Some(path) = &s.out {
        let mut csv = String::from("x,y,returned\n");
        for (p, r) in map.points.iter().zip(map.returned.iter()) {
            csv.push_str(&format!(
                "{},{},{}\n",
                format_float(p.0),
                format_float(p.1),
                u8::from(*r)
            ));
        }
        write_to(path, &csv)?;
    }
    let doc = Json::Obj(vec![
        ("family", Json::Str(f.label().to_string())),
        ("nx", Json::UInt(nx as u64)),
        ("ny", Json::UInt(ny as u64)),
        ("n_max", Json::UInt(n_max)),
        ("eps", Json::Num(eps)),
        (
            "returned_count",
            Json::UInt(map.returned.iter().filter(|&&r| r).count() as u64),
        ),
        ("fraction_returned", Json::Num(map.fraction_returned())),
    ]);
    emit_json(&None, &doc)
}
