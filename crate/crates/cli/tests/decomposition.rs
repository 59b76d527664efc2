//! The bound the decomposition's nudge actually meets, on the acceptance
//! suite's round-trip pairs.

use misspec_cli::acceptance;

#[test]
fn round_trip_meets_angle_bound() {
    for (i, t) in acceptance::round_trips().unwrap().iter().enumerate() {
        assert!(t.recomposition_error < 1e-8, "pair {i}: {t:?}");
        let theta = 2.0 * t.distance.asin();
        if theta <= std::f64::consts::FRAC_PI_2 {
            assert!((t.nudge_ratio - theta.sin()).abs() < 1e-9, "pair {i}: {t:?}");
            assert!(t.holds_at_double, "pair {i}: {t:?}");
        } else {
            // obtuse pairs: the nudge replaces the whole scaled direction
            assert!((t.nudge_ratio - 2.0 * t.distance).abs() < 1e-9, "pair {i}: {t:?}");
        }
    }
}

#[test]
fn suite_has_twelve_criteria_in_order() {
    assert_eq!(acceptance::CRITERIA.len(), 12);
    assert_eq!(acceptance::criterion_11().id, 11);
}
