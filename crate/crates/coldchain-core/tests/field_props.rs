use coldchain_core::affine::Closure;
use coldchain_core::field::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn periodic(n: usize) -> Grid1D {
    Grid1D::new(n, 0.0, 2.0 * PI, Boundary::Periodic).unwrap()
}

fn uniform(closure: Closure, state: &[f64]) -> MomentField {
    MomentField::from_fn(closure, periodic(8), |_, s| s.copy_from_slice(state)).unwrap()
}

fn drift_at(n: usize, amp: f64) -> (f64, f64) {
    let f = sine_profile(Closure::One, periodic(n), amp, 0.0).unwrap();
    let r = run(f, 2.0 * PI, &SolverConfig::default()).unwrap();
    assert_eq!(r.outcome, FieldOutcome::Completed);
    let (mean, _) = consistency_norms(&derive_physical(&r.field));
    (r.max_energy_drift(), mean)
}

#[test]
fn energy_drift_and_gauss_residual_shrink_with_dx() {
    let (e1, c1) = drift_at(128, 0.2);
    let (e2, c2) = drift_at(256, 0.2);
    let (e3, c3) = drift_at(512, 0.2);
    for (a, b) in [(e1, e2), (e2, e3)] {
        let ratio = a / b;
        assert!((1.5..3.0).contains(&ratio), "energy drift ratio {ratio} ({a:e} -> {b:e})");
    }
    let order = (c1 / c3).log2() / 2.0;
    assert!(order >= 0.9, "consistency order {order} ({c1:e}, {c2:e}, {c3:e})");
}

#[test]
fn dichotomy_brackets_half() {
    let cfg = SolverConfig::default();
    let below = run(sine_profile(Closure::One, periodic(1024), 0.4, 0.0).unwrap(), 4.0 * PI, &cfg).unwrap();
    assert_eq!(below.outcome, FieldOutcome::Completed);
    let above = run(sine_profile(Closure::One, periodic(1024), 0.6, 0.0).unwrap(), 4.0 * PI, &cfg).unwrap();
    assert!(matches!(above.outcome, FieldOutcome::BlowUp { t, .. } if t < 2.0 * PI));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_is_conserved(amp in 0.0f64..0.45, v0 in -1.0f64..1.0, n in 16usize..96, two in any::<bool>()) {
        let (closure, v0) = if two { (Closure::Two, 0.5 + v0.abs()) } else { (Closure::One, v0) };
        let f = sine_profile(closure, periodic(n), amp, v0).unwrap();
        let m0 = f.mass();
        let cfg = SolverConfig { report_every: 1, ..SolverConfig::default() };
        let r = run(f, 0.5, &cfg).unwrap();
        prop_assert!(r.max_mass_drift() <= 1e-12 * m0, "{}", r.max_mass_drift());
    }

    #[test]
    fn rest_state_is_stationary(n in 8usize..64, t in 0.1f64..5.0, two in any::<bool>()) {
        let (closure, state): (Closure, &[f64]) = if two { (Closure::Two, &[0.0, 1.0, 0.0, 0.0]) } else { (Closure::One, &[0.0, 1.0, 0.0]) };
        let f = MomentField::from_fn(closure, periodic(n), |_, s| s.copy_from_slice(state)).unwrap();
        let init = f.values().to_vec();
        let r = run(f, t, &SolverConfig::default()).unwrap();
        prop_assert_eq!(r.field.values(), &init[..]);
    }

    #[test]
    fn uniform_closure1_matches_rotation(c1 in 0.05f64..1.0, theta in 0.0f64..(2.0 * PI), m0 in 0.5f64..2.0) {
        let f = uniform(Closure::One, &[c1 * theta.cos(), m0, -c1 * theta.sin()]);
        let cfg = SolverConfig { max_dt: 1e-2, ..SolverConfig::default() };
        let r = run(f, PI, &cfg).unwrap();
        let c = r.field.cell(3);
        prop_assert!((c[0] - c1 * (PI + theta).cos()).abs() <= 1e-12);
        prop_assert!((c[2] + c1 * (PI + theta).sin()).abs() <= 1e-12);
        prop_assert!((c[1] - m0).abs() <= 1e-14 * m0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn uniform_closure2_matches_closed_form(c1 in 0.05f64..1.0, theta in 0.1f64..3.0, m0 in 0.5f64..2.0, c2 in 0.5f64..2.0) {
        let m2 = |t: f64| c2 - c1 * c1 / (2.0 * m0) * (2.0 * (t + theta)).cos();
        let f = uniform(Closure::Two, &[c1 * theta.cos(), m0, -c1 * theta.sin(), m2(0.0)]);
        let mut errs = Vec::new();
        for dt in [1e-3, 1e-4] {
            let r = run(f.clone(), PI, &SolverConfig { max_dt: dt, ..SolverConfig::default() }).unwrap();
            let c = r.field.cell(5);
            let e = (c[0] - c1 * (PI + theta).cos()).abs()
                .max((c[2] + c1 * (PI + theta).sin()).abs())
                .max((c[3] - m2(PI)).abs());
            errs.push(e);
        }
        // The source step is solved exactly, so only rounding remains.
        prop_assert!(errs.iter().all(|e| *e <= 1e-10), "{:?}", errs);
    }
}
