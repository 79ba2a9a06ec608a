use coldchain_core::closure::*;
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

fn velocities(k: usize) -> impl Strategy<Value = (f64, Vec<f64>)> {
    let away_from_zero = (0.3f64..4.0, any::<bool>()).prop_map(|(m, neg)| if neg { -m } else { m });
    (0.1f64..5.0, prop::collection::vec(away_from_zero, k))
}

fn moments(m0: f64, u: &[f64]) -> MomentVector {
    velocities_to_moments(&VelocityVector::new(m0, u.to_vec()).unwrap())
}

/// Eigenvalues from the real Schur form, with 2x2 blocks solved in complex
/// arithmetic (the library's own extraction returns NaN imaginary parts on
/// nearly defective blocks).
fn spectrum(a: DMatrix<f64>) -> Vec<Complex<f64>> {
    let n = a.nrows();
    let (_, t) = a.schur().unpack();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (p, q, r, s) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half = Complex::new(0.5 * (p + s), 0.0);
            let disc = Complex::new(0.25 * (p - s) * (p - s) + q * r, 0.0).sqrt();
            out.push(half + disc);
            out.push(half - disc);
            i += 2;
        } else {
            out.push(Complex::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    out
}

/// Splits the spectrum into the eigenvalues nearest 0 and nearest `uk`.
///
/// A defective cluster is perturbed by rounding at order `eps^(1/size)`,
/// but its mean is well conditioned, so the means are compared.
fn clusters(spec: &[Complex<f64>], uk: f64) -> ((usize, Complex<f64>), (usize, Complex<f64>)) {
    let mut zero = (0, Complex::new(0.0, 0.0));
    let mut top = (0, Complex::new(0.0, 0.0));
    for z in spec {
        let c = if z.norm() < (z - uk).norm() { &mut zero } else { &mut top };
        c.0 += 1;
        c.1 += z;
    }
    let mean = |c: (usize, Complex<f64>)| (c.0, if c.0 > 0 { c.1 / c.0 as f64 } else { c.1 });
    (mean(zero), mean(top))
}

proptest! {
    #[test]
    fn round_trip(k in 1usize..6, m in prop::collection::vec(-10.0f64..10.0, 7), m0 in 0.01f64..10.0) {
        let mut v = vec![m0];
        v.extend(m[..k].iter().map(|x| if x.abs() < 1e-3 { 1.0 } else { *x }));
        let mv = MomentVector::new(v.clone()).unwrap();
        let back = velocities_to_moments(&moments_to_velocities(&mv).unwrap());
        for (a, b) in back.values().iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn eigenvalue_law(k in 1usize..=4, (m0, u) in velocities(4)) {
        let mv = moments(m0, &u[..k]);
        let uk = u[k - 1];
        let j = assemble_jacobian(&mv).unwrap();
        let n = j.size();
        let a = DMatrix::from_row_slice(n, n, j.as_slice());
        let spec = spectrum(a.clone());
        let ((nz, zmean), (nt, tmean)) = clusters(&spec, uk);
        prop_assert_eq!((nz, nt), (k - 1, 2));
        let scale = uk.abs().max(1.0);
        prop_assert!(zmean.norm() <= 1e-9 * scale);
        prop_assert!((tmean - uk).norm() <= 1e-9 * scale);
        // One eigenvector for the double eigenvalue: rank(A - U_k I) = k.
        let shifted = a - DMatrix::identity(n, n) * uk;
        let sv = shifted.singular_values();
        let rank = sv.iter().filter(|s| **s > 1e-9 * sv[0]).count();
        prop_assert_eq!(rank, k);
    }

    #[test]
    fn equal_velocities_reduce_to_level_one(k in 2usize..=5, m0 in 0.1f64..5.0, u in 0.2f64..3.0, ecal in -2.0f64..2.0) {
        let m = moments(m0, &vec![u; k]);
        let mut state = vec![ecal];
        state.extend_from_slice(m.values());
        let (f, s) = flux_source(&state).unwrap();
        let (f1, s1) = flux_source(&state[..3]).unwrap();
        for i in 0..3 {
            prop_assert!((f[i] - f1[i]).abs() <= 1e-12 * (1.0 + f1[i].abs()));
            prop_assert!((s[i] - s1[i]).abs() <= 1e-12 * (1.0 + s1[i].abs()));
        }
    }

    #[test]
    fn holder_equality_for_single_delta(k in 2usize..=6, p in 0.01f64..5.0, v in -3.0f64..3.0) {
        let m: Vec<f64> = (0..=k).map(|j| p * v.powi(j as i32)).collect();
        let mv = MomentVector::new(m.clone()).unwrap();
        for (r, j) in holder_residuals(&mv).iter().zip((1..k).step_by(2)) {
            prop_assert!(r.abs() <= 1e-12 * m[j] * m[j] + 1e-300);
        }
    }
}
