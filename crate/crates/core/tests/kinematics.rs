use deltafi::kinematics::{emergency_stop, emergency_stop_with_step, rk4_step, KinematicParams, VehicleState};
use proptest::prelude::*;

fn params(a: f64) -> KinematicParams {
    KinematicParams { a_max: a, ..KinematicParams::default() }
}

/// (v0, a) pairs covering v0 = 1..40 and a = 2..9.
fn grid() -> Vec<(f64, f64)> {
    (1..=40).map(|i| (i as f64, 2.0 + ((i - 1) % 8) as f64)).collect()
}

#[test]
fn straight_stop_matches_closed_form() {
    for (v0, a) in grid() {
        let r = emergency_stop(&VehicleState::new(3.0, -2.0, v0, 0.7, 0.0), &params(a)).unwrap();
        let d = v0 * v0 / (2.0 * a);
        assert!(((r.d_stop_long - d) / d).abs() < 1e-6, "v0={v0} a={a}: {} vs {d}", r.d_stop_long);
        assert!(r.d_stop_lat.abs() < 1e-9);
        assert!(((r.t_stop - v0 / a) / (v0 / a)).abs() < 1e-12);
    }
}

#[test]
fn steered_stop_ends_on_the_chord() {
    let l = KinematicParams::default().wheelbase;
    for (v0, a) in grid() {
        for phi in [-0.3, 0.05, 0.2] {
            let r = emergency_stop(&VehicleState::new(0.0, 0.0, v0, -1.1, phi), &params(a)).unwrap();
            let radius = l / f64::tan(phi).abs();
            let arc = v0 * v0 / (2.0 * a);
            let chord = (2.0 * radius * (arc / (2.0 * radius)).sin()).abs();
            assert!((r.magnitude() - chord).abs() < 1e-4, "v0={v0} a={a} phi={phi}: {} vs {chord}", r.magnitude());
            assert_eq!(r.d_stop_lat.signum(), phi.signum());
        }
    }
}

#[test]
fn standing_vehicle_does_not_move() {
    let r = emergency_stop(&VehicleState::new(1.0, 2.0, 0.0, 0.3, 0.1), &params(5.0)).unwrap();
    assert_eq!((r.t_stop, r.magnitude()), (0.0, 0.0));
    assert_eq!(r.path, vec![(1.0, 2.0)]);
}

#[test]
fn bad_inputs_are_rejected() {
    let p = params(5.0);
    assert!(emergency_stop(&VehicleState::new(0.0, 0.0, -1.0, 0.0, 0.0), &p).is_err());
    assert!(emergency_stop(&VehicleState::new(f64::NAN, 0.0, 1.0, 0.0, 0.0), &p).is_err());
    assert!(emergency_stop_with_step(&VehicleState::new(0.0, 0.0, 1.0, 0.0, 0.0), &p, 0.0).is_err());
    assert!(emergency_stop(&VehicleState::new(0.0, 0.0, 1.0, 0.0, 0.0), &params(-2.0)).is_err());
}

proptest! {
    #[test]
    fn stop_never_exceeds_arc_length(v in 0.5f64..40.0, dv in 0.1f64..5.0, a in 1.0f64..9.0, phi in -0.7f64..0.7) {
        let p = params(a);
        let r = emergency_stop(&VehicleState::new(0.0, 0.0, v, 0.0, phi), &p).unwrap();
        prop_assert!(r.magnitude() <= v * v / (2.0 * a) * (1.0 + 1e-9));
        let slow = emergency_stop(&VehicleState::new(0.0, 0.0, v, 0.0, 0.0), &p).unwrap();
        let fast = emergency_stop(&VehicleState::new(0.0, 0.0, v + dv, 0.0, 0.0), &p).unwrap();
        prop_assert!(fast.d_stop_long > slow.d_stop_long);
    }

    #[test]
    fn rk4_keeps_speed_and_steering_in_range(v in 0.0f64..40.0, acc in -9.0f64..9.0, rate in -2.0f64..2.0, phi in -0.78f64..0.78) {
        let p = KinematicParams::default();
        let s = rk4_step(&VehicleState::new(0.0, 0.0, v, 3.0, phi), acc, rate, &p, p.dt);
        prop_assert!(s.v >= 0.0);
        prop_assert!(s.phi.abs() <= p.phi_max);
        prop_assert!(s.theta > -std::f64::consts::PI && s.theta <= std::f64::consts::PI);
    }
}
