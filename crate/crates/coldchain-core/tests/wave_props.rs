use coldchain_core::odeint::Control;
use coldchain_core::wave::*;
use proptest::prelude::*;

fn ctrl() -> Control {
    Control::default()
}

const REFERENCE: [(f64, f64, f64); 3] = [(0.6, 0.7, 1.0), (0.2, 1.7, 1.0), (1.5, 2.0, 1.0)];

fn check_profile(p: &Wave2Profile, u10: f64) -> Result<(), TestCaseError> {
    let side = (u10 - p.w).signum();
    for s in &p.samples {
        prop_assert!((s.u1 - p.w).signum() == side, "U1 - w changed sign at xi = {}", s.xi);
    }
    // E' = U1 / (U1 - w) keeps one sign when U1 > 0 and U1 - w does.
    let sign = side;
    for pair in p.samples.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        prop_assert!(b.xi > a.xi);
        prop_assert!((b.e - a.e) * sign >= -1e-12 * (1.0 + a.e.abs()), "E not monotone at xi = {}", a.xi);
    }
    Ok(())
}

#[test]
fn reference_supports_are_finite() {
    for (u1, u2, w) in REFERENCE {
        let p = wave2_profile(&WaveState { e: 0.0, u1, u2 }, w, &ctrl()).unwrap();
        for end in [p.left, p.right] {
            assert!(end.xi.is_finite() && end.xi.abs() < 50.0, "{u1} {u2}: {end:?}");
        }
        assert!(p.left.xi < 0.0 && p.right.xi > 0.0);
        check_profile(&p, u1).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wave1_invariant(w in 0.2f64..4.0, frac in 0.0f64..0.999, th in -3.2f64..3.2, neg in any::<bool>()) {
        let w = if neg { -w } else { w };
        let i0 = frac * w.abs();
        let p = WaveParams::from_initial(w, i0 * th.cos(), i0 * th.sin());
        let grid: Vec<f64> = (0..200).map(|i| -20.0 + 0.2 * i as f64).collect();
        for s in wave1_profile(&p, &grid).unwrap() {
            prop_assert!((s.u1 * s.u1 + s.e * s.e - i0 * i0).abs() <= 1e-9);
        }
    }

    #[test]
    fn wave1_is_periodic(w in 0.2f64..4.0, frac in 0.0f64..0.999, xi in -10.0f64..10.0) {
        let p = WaveParams::new(w, frac * w);
        let t = wave1_period(w);
        let a = wave1_profile(&p, &[xi, xi + t]).unwrap();
        prop_assert!((a[0].e - a[1].e).abs() <= 1e-9 && (a[0].u1 - a[1].u1).abs() <= 1e-9);
    }

    #[test]
    fn equal_velocities_reproduce_closure1(w in 0.5f64..3.0, frac in 0.1f64..0.9) {
        let i0 = frac * w;
        // Start at the top of U1 so it stays positive over the span.
        let init = WaveState { e: 0.0, u1: i0, u2: i0 };
        let span = 0.5 * (w - i0);
        let p = WaveParams::from_initial(w, 0.0, i0);
        for xi_end in [span, -span] {
            let tr = wave2_xi_trajectory(&init, w, xi_end, &ctrl()).unwrap();
            let xs = tr.times().to_vec();
            let reference = wave1_profile(&p, &xs).unwrap();
            for (y, r) in tr.states().iter().zip(&reference) {
                prop_assert!((y[0] - r.e).abs() <= 1e-6);
                prop_assert!((y[1] - r.u1).abs() <= 1e-6);
                prop_assert!((y[2] - y[1]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn singular_point_types(w in 0.05f64..20.0) {
        let set = singular_points(w).unwrap();
        let kinds: Vec<PointKind> = set.points.iter().map(|p| p.kind).collect();
        prop_assert_eq!(
            kinds,
            vec![PointKind::Saddle, PointKind::Saddle, PointKind::Node, PointKind::Node, PointKind::DegenerateNode]
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn region2_profiles(w in 0.5f64..2.0, a in 0.1f64..0.9, b in 1.1f64..1.9) {
        let init = WaveState { e: 0.0, u1: a * w, u2: b * w };
        let p = wave2_profile(&init, w, &ctrl()).unwrap();
        prop_assert_eq!(p.region, RegionLabel::Region2);
        check_profile(&p, init.u1)?;
        prop_assert!(p.left.xi.abs() < 50.0 && p.right.xi.abs() < 50.0);
    }

    #[test]
    fn region3_profiles(w in 0.5f64..2.0, a in 1.1f64..2.0, d in 0.1f64..1.0) {
        let init = WaveState { e: 0.0, u1: a * w, u2: (a + d) * w };
        let p = wave2_profile(&init, w, &ctrl()).unwrap();
        prop_assert_eq!(p.region, RegionLabel::Region3);
        check_profile(&p, init.u1)?;
        for end in [p.left, p.right] {
            prop_assert_eq!(end.reason, EndReason::ReachedPoint);
            prop_assert!(end.xi.abs() < 50.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn region1_profiles(w in 0.5f64..2.0, a in 0.55f64..0.85, d in 0.05f64..0.1) {
        let init = WaveState { e: 0.0, u1: a * w, u2: (a + d) * w };
        prop_assume!(init.u2 < w);
        let p = wave2_profile(&init, w, &ctrl()).unwrap();
        prop_assert_eq!(p.region, RegionLabel::Region1);
        check_profile(&p, init.u1)?;
        for end in [p.left, p.right] {
            prop_assert!(end.distance < 1e-4 * w);
            prop_assert!(end.xi.abs() < 50.0);
        }
    }
}
