//! Thin float helpers so the numerics read the same with or without `std`.

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

/// Max-norm of a state vector; NaN compares as infinite.
pub fn max_norm(y: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for &v in y {
        if v.is_nan() {
            return f64::INFINITY;
        }
        let a = abs(v);
        if a > m {
            m = a;
        }
    }
    m
}

/// Ordinary least squares of `y` on the columns of `x` (at most 3 columns).
///
/// Returns the coefficients, or `None` if the normal equations are singular.
pub fn least_squares(cols: &[&[f64]], y: &[f64]) -> Option<alloc::vec::Vec<f64>> {
    let p = cols.len();
    assert!(p >= 1 && p <= 3);
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for r in 0..y.len() {
        for i in 0..p {
            aty[i] += cols[i][r] * y[r];
            for j in 0..p {
                ata[i][j] += cols[i][r] * cols[j][r];
            }
        }
    }
    // Gaussian elimination with partial pivoting on the tiny system.
    let mut m = ata;
    let mut b = aty;
    for c in 0..p {
        let mut piv = c;
        for r in c + 1..p {
            if abs(m[r][c]) > abs(m[piv][c]) {
                piv = r;
            }
        }
        if abs(m[piv][c]) < 1e-300 {
            return None;
        }
        m.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..p {
            let f = m[r][c] / m[c][c];
            for k in c..p {
                m[r][k] -= f * m[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0f64; 3];
    for c in (0..p).rev() {
        let mut s = b[c];
        for k in c + 1..p {
            s -= m[c][k] * x[k];
        }
        x[c] = s / m[c][c];
    }
    Some(x[..p].to_vec())
}
