use coldchain_core::affine::*;
use coldchain_core::odeint::{Control, Termination, Trajectory};
use proptest::prelude::*;
use std::f64::consts::PI;

fn ctrl() -> Control {
    Control::default()
}

/// `g1` as a function of `a` along a run while `a` decreases monotonically.
fn g_of_a(tr: &Trajectory, a: f64) -> Option<f64> {
    let t = tr.times();
    let y = tr.states();
    for i in 1..t.len() {
        let (a0, a1) = (y[i - 1][0], y[i][0]);
        if (a1 - a) * (a0 - a) <= 0.0 && a0 != a1 {
            // Refine by bisection on the dense output.
            let (mut lo, mut hi) = (t[i - 1], t[i]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let am = tr.evaluate_dense(mid).unwrap()[0];
                if (am - a) * (a0 - a) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(tr.evaluate_dense(0.5 * (lo + hi)).unwrap()[1]);
        }
    }
    None
}

#[test]
fn criterion_sharpness() {
    let up = simulate_affine(Closure::One, &AffineState::closure1(0.51, 0.0), 2.0 * PI, &ctrl()).unwrap();
    assert!(matches!(up.outcome, AffineOutcome::BlowUp { t } if t < 2.0 * PI));
    let down = simulate_affine(Closure::One, &AffineState::closure1(0.49, 0.0), 20.0 * PI, &ctrl()).unwrap();
    assert_eq!(down.outcome, AffineOutcome::Bounded);
}

#[test]
fn second_closure_delays_termination() {
    let init = AffineState::new(0.53, -0.1, 0.9).unwrap();
    let one = simulate_affine(Closure::One, &AffineState::closure1(init.a, init.g1), 10.0, &ctrl()).unwrap();
    let two = simulate_affine(Closure::Two, &init, 10.0, &ctrl()).unwrap();
    let AffineOutcome::BlowUp { t: t_star } = one.outcome else { panic!("{:?}", one.outcome) };
    let AffineOutcome::ClassicalEnd { t: t1, a, g1, g2 } = two.outcome else { panic!("{:?}", two.outcome) };
    assert!(t_star < t1, "t* = {t_star}, t1 = {t1}");
    assert!(a.is_finite() && a.abs() < FINITE_LIMIT);
    assert!(g1.abs() < 1e-6);
    // The crossing of the threshold is located on the dense output.
    assert_eq!(two.trajectory.termination(), Termination::BlowUp);
    assert!(g2 >= 0.999 * ctrl().blowup, "g2 = {g2}");
}

#[test]
fn two_plans_differ_and_the_periodic_one_repeats() {
    let init = AffineState::new(-0.1, -0.3, -0.15).unwrap();
    let a = continue_branches(&init, &BranchPlan::periodic(-0.377, 0.05), 8.0, &ctrl()).unwrap();
    let b = continue_branches(&init, &BranchPlan::periodic(-0.377, 0.2), 8.0, &ctrl()).unwrap();
    let period = a.pieces[1].t_end;
    let mut diff = 0.0f64;
    let mut repeat = 0.0f64;
    for i in 0..2000 {
        let t = a.t_final().min(b.t_final()) * i as f64 / 2000.0;
        if let (Some(x), Some(y)) = (a.evaluate(t), b.evaluate(t)) {
            diff = diff.max((0..3).map(|j| (x[j] - y[j]).abs()).fold(0.0, f64::max));
        }
        let s = period * i as f64 / 2000.0;
        if let (Some(x), Some(y)) = (a.evaluate(s), a.evaluate(s + period)) {
            repeat = repeat.max((0..3).map(|j| (x[j] - y[j]).abs()).fold(0.0, f64::max));
        }
    }
    assert!(diff >= 1e-3, "{diff}");
    assert!(repeat <= 1e-6, "{repeat}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn first_integral_conserved(a0 in -2.0f64..0.99, g in -2.0f64..2.0) {
        let tr = simulate_affine(Closure::One, &AffineState::closure1(a0, g), 20.0, &ctrl()).unwrap().trajectory;
        let c0 = first_integral_ag(a0, g);
        for y in tr.states() {
            // Relative to the size of the numerator near an escape.
            let scale = 1.0 + y[1] * y[1] / ((y[0] - 1.0) * (y[0] - 1.0));
            prop_assert!((first_integral_ag(y[0], y[1]) - c0).abs() <= 1e-7 * scale);
        }
    }

    #[test]
    fn closure1_verdict_matches_criterion(a0 in -1.0f64..0.99, g in -1.5f64..1.5) {
        let v = g * g + 2.0 * a0 - 1.0;
        prop_assume!(v.abs() > 0.05);
        let run = simulate_affine(Closure::One, &AffineState::closure1(a0, g), 20.0 * PI, &ctrl()).unwrap();
        let blew = matches!(run.outcome, AffineOutcome::BlowUp { .. });
        prop_assert_eq!(blew, v > 0.0);
    }

    #[test]
    fn eps_stays_above_a_positive_floor(q in -3.0f64..3.0, eps in 0.01f64..3.0) {
        let tr = simulate_qe(ChartQE { q, eps }, 20.0, &ctrl()).unwrap();
        let floor = epsilon_floor(&tr);
        prop_assert!(floor > 0.0);
        prop_assert!(tr.states().iter().all(|y| y[1] >= floor));
    }

    #[test]
    fn comparison_with_friction(a0 in -0.8f64..0.8, g10 in -1.5f64..-0.1, eps0 in 0.05f64..2.0) {
        // Short steps keep the quartic dense output far below the gap being tested.
        let fine = Control { max_step: 2e-3, ..ctrl() };
        let init = AffineState::new(a0, g10, g10 + eps0).unwrap();
        let two = simulate_affine(Closure::Two, &init, 20.0, &fine).unwrap();
        let eps_star = two.trajectory.states().iter().map(|y| y[2] - y[1]).fold(f64::INFINITY, f64::min);
        prop_assume!(eps_star > 0.0);
        let fric = simulate_ages(a0, g10, eps_star, 20.0, &[], &fine).unwrap();
        // Shared `a` range while g1 < 0 on both runs (a decreases there).
        let last_neg = |tr: &Trajectory| {
            tr.states().iter().take_while(|y| y[1] < 0.0 && y[0].abs() < 1e3).map(|y| y[0]).fold(f64::INFINITY, f64::min)
        };
        let a_lo = last_neg(&two.trajectory).max(last_neg(&fric));
        prop_assume!(a_lo < a0);
        for i in 1..40 {
            let a = a0 - (a0 - a_lo) * i as f64 / 40.0;
            if let (Some(g2), Some(gf)) = (g_of_a(&two.trajectory, a), g_of_a(&fric, a)) {
                prop_assert!(g2 >= gf - 1e-8 * (1.0 + gf.abs()), "a = {}: {} < {}", a, g2, gf);
            }
        }
    }

    #[test]
    fn friction_widens_the_smooth_set(a0 in -0.9f64..0.95, g in -1.0f64..1.0) {
        let smooth0 = classify_point(a0, g, 0.0, SweepMode::EpsStar, 8.0 * PI, &ctrl()) == Verdict::Smooth;
        let smooth1 = classify_point(a0, g, 0.5, SweepMode::EpsStar, 8.0 * PI, &ctrl()) == Verdict::Smooth;
        prop_assert!(!smooth0 || smooth1);
    }
}

#[test]
fn blow_up_trajectory_reports_blow_up() {
    let r = simulate_affine(Closure::One, &AffineState::closure1(0.9, 0.5), 20.0, &ctrl()).unwrap();
    assert_eq!(r.trajectory.termination(), Termination::BlowUp);
}
