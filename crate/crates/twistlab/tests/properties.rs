//! Cross-module property tests: structural invariants that should hold for
//! every family and parameter choice, not just the worked examples.

use proptest::prelude::*;
use std::f64::consts::{PI, TAU};
use twistlab::annulus::{check_twist, rotation_sample};
use twistlab::billiard::{next_collision, BilliardState, Ellipse};
use twistlab::circle::{rotation_number, rotation_number_adaptive};
use twistlab::cover::{boundary_restriction, iterate, AnnulusLift, Boundary, CircleLift};
use twistlab::curves::CurveCandidate;
use twistlab::families::{shear, zoo};

fn arnold(omega: f64, eps: f64) -> CircleLift {
    CircleLift::new_unchecked(format!("arnold[{omega},{eps}]"), move |x| {
        x + omega + eps / TAU * (TAU * x).sin()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotation_estimate_translation_covariance(
        omega in 0.0f64..1.0,
        eps in 0.0f64..0.9,
        k in -3i64..4,
    ) {
        let g = arnold(omega, eps);
        let base = rotation_number(&g, 0.2, 400).unwrap();
        let shifted = rotation_number(&g.translated(k), 0.2, 400).unwrap();
        prop_assert!((shifted.value - base.value - k as f64).abs() < 1e-11);
    }

    #[test]
    fn rotation_monotone_in_offset(
        omega in 0.05f64..0.8,
        eps in 0.0f64..0.9,
        delta in 0.0f64..0.2,
    ) {
        // g1 <= g2 pointwise forces rho1 <= rho2 up to enclosure widths.
        let g1 = arnold(omega, eps);
        let g2 = arnold(omega + delta, eps);
        let e1 = rotation_number_adaptive(&g1, 1e-4).unwrap();
        let e2 = rotation_number_adaptive(&g2, 1e-4).unwrap();
        prop_assert!(e1.value <= e2.value + e1.halfwidth + e2.halfwidth);
    }

    #[test]
    fn orbit_commutes_with_deck_translation(
        x0 in -1.0f64..1.0,
        y0 in 0.0f64..1.0,
        slope in 0.1f64..2.0,
    ) {
        let f = AnnulusLift::new_unchecked("shear-prop", move |x, y| (x + slope * y, y));
        let n = 60;
        let a = iterate(&f, (x0, y0), n).unwrap();
        let b = iterate(&f, (x0 + 1.0, y0), n).unwrap();
        for k in 0..=n {
            prop_assert!((b.points[k].0 - a.points[k].0 - 1.0).abs() <= 1e-9);
            prop_assert!((b.points[k].1 - a.points[k].1).abs() <= 1e-12);
        }
    }

    #[test]
    fn sample_extremes_bracket_mean(
        x0 in 0.0f64..1.0,
        y0 in 0.0f64..1.0,
        n in 64u64..4000,
    ) {
        let f = AnnulusLift::new_unchecked("float-prop", |x, y| (x + y, y * y));
        let s = rotation_sample(&f, (x0, y0), n, 6).unwrap();
        prop_assert!(s.lower <= s.mean + 1e-12);
        prop_assert!(s.mean <= s.upper + 1e-12);
        prop_assert!(s.k_min >= 1 && s.k_min <= n);
    }

    #[test]
    fn curve_candidate_is_sorted_with_positive_gaps(
        pts in prop::collection::vec((0.0f64..3.0, 0.0f64..1.0), 8..200)
    ) {
        let c = CurveCandidate::from_points("prop", &pts);
        for w in c.points.windows(2) {
            prop_assert!(w[0].0 <= w[1].0);
        }
        for &(x, _) in &c.points {
            prop_assert!((0.0..1.0).contains(&x));
        }
        prop_assert!(c.gap_max > 0.0 && c.gap_max <= 1.0);
    }

    #[test]
    fn billiard_single_step_reversibility(
        sfrac in 0.0f64..1.0,
        theta in 0.2f64..2.9,
    ) {
        let e = Ellipse::new(1.7, 0.8).unwrap();
        let st = BilliardState::new(sfrac * e.perimeter(), theta);
        let fwd = next_collision(&e, st).unwrap();
        let back = next_collision(&e, fwd.reversed()).unwrap().reversed();
        let per = e.perimeter();
        let dx = ((back.x - st.x) / per - ((back.x - st.x) / per).round()).abs() * per;
        prop_assert!(dx < 1e-9);
        prop_assert!((back.theta - st.theta).abs() < 1e-9);
        prop_assert!(fwd.theta > 0.0 && fwd.theta < PI);
    }
}

// Termwise orbit domination: for a twist map, the lifted x-track from any
// interior point stays at or above the track launched from the same x on
// the lower boundary.
#[test]
fn interior_orbit_dominates_lower_boundary_track() {
    let families = zoo().unwrap();
    for fam in families.iter().filter(|f| f.truth.is_twist) {
        for &(x0, y0) in &[(0.0, 0.3), (0.4, 0.9), (0.7, 0.55)] {
            let interior = iterate(&fam.lift, (x0, y0), 1000).unwrap();
            let boundary = iterate(&fam.lift, (x0, 0.0), 1000).unwrap();
            for k in 0..=1000 {
                assert!(
                    interior.points[k].0 >= boundary.points[k].0 - 1e-9,
                    "{}: track order violated at step {k}",
                    fam.name
                );
            }
        }
    }
}

#[test]
fn boundary_restrictions_bound_the_fiber_maps() {
    // The twist condition makes x1(x, y) increasing in y, so the boundary
    // restrictions are the pointwise envelope of all fiber maps.
    let f = shear(|y| 0.25 + 0.5 * y).unwrap();
    let g0 = boundary_restriction(&f, Boundary::Lower);
    let g1 = boundary_restriction(&f, Boundary::Upper);
    for i in 0..64 {
        let x = i as f64 / 64.0;
        for j in 1..8 {
            let y = j as f64 / 8.0;
            let (x1, _) = f.eval(x, y).unwrap();
            assert!(g0.eval(x) <= x1 + 1e-12);
            assert!(x1 <= g1.eval(x) + 1e-12);
        }
    }
}

#[test]
fn zoo_twist_reports_match_truth() {
    for fam in zoo().unwrap() {
        let report = check_twist(&fam.lift, 12, 12, 0.0).unwrap();
        assert_eq!(report.is_twist, fam.truth.is_twist, "{}", fam.name);
    }
}
