//! Moment and velocity charts of the chain closed at step `k`.
//!
//! A state at level `k` is the vector `M_0..M_k`. Velocities are ratios of
//! consecutive moments, `U_j = M_j / M_{j-1}`, and the closure supplies the
//! missing moment `M_{k+1} = M_k^2 / M_{k-1}`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::num::abs;

/// Failures of the closure algebra.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosureError {
    /// `M_{j-1} = 0`, so `U_j` is undefined.
    ZeroMomentDenominator(usize),
    /// `M_0` must be strictly positive.
    NonPositiveDensity(f64),
    /// The closure level must be at least 1.
    LevelTooLow(usize),
}

impl fmt::Display for ClosureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosureError::ZeroMomentDenominator(j) => {
                write!(f, "U_{j} undefined: M_{} vanishes", j - 1)
            }
            ClosureError::NonPositiveDensity(m0) => write!(f, "M_0 = {m0} is not positive"),
            ClosureError::LevelTooLow(k) => write!(f, "closure level {k} < 1"),
        }
    }
}

impl core::error::Error for ClosureError {}

/// Moments `M_0..M_k` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    m: Vec<f64>,
}

impl MomentVector {
    /// Builds a moment vector; the level is `m.len() - 1`.
    pub fn new(m: Vec<f64>) -> Result<Self, ClosureError> {
        if m.len() < 2 {
            return Err(ClosureError::LevelTooLow(m.len().saturating_sub(1)));
        }
        if !(m[0] > 0.0) {
            return Err(ClosureError::NonPositiveDensity(m[0]));
        }
        Ok(MomentVector { m })
    }

    /// Closure level.
    pub fn k(&self) -> usize {
        self.m.len() - 1
    }

    /// `M_0..M_k`.
    pub fn values(&self) -> &[f64] {
        &self.m
    }

    /// The moment the closure adds, `M_{k+1} = M_k^2 / M_{k-1}`.
    pub fn closing_moment(&self) -> Result<f64, ClosureError> {
        let k = self.k();
        if self.m[k - 1] == 0.0 {
            return Err(ClosureError::ZeroMomentDenominator(k));
        }
        Ok(self.m[k] * self.m[k] / self.m[k - 1])
    }
}

/// `M_0` together with the velocities `U_1..U_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityVector {
    m0: f64,
    u: Vec<f64>,
}

impl VelocityVector {
    /// Builds a velocity vector; the level is `u.len()`.
    pub fn new(m0: f64, u: Vec<f64>) -> Result<Self, ClosureError> {
        if u.is_empty() {
            return Err(ClosureError::LevelTooLow(0));
        }
        if !(m0 > 0.0) {
            return Err(ClosureError::NonPositiveDensity(m0));
        }
        Ok(VelocityVector { m0, u })
    }

    /// Closure level.
    pub fn k(&self) -> usize {
        self.u.len()
    }

    /// Density `M_0`.
    pub fn m0(&self) -> f64 {
        self.m0
    }

    /// `U_1..U_k`.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// `|U_1| <= |U_2|`, the ordering every kinetic density respects.
    /// Vacuously true at level 1.
    pub fn ordering_ok(&self) -> bool {
        self.u.len() < 2 || abs(self.u[0]) <= abs(self.u[1])
    }
}

/// `U_j = M_j / M_{j-1}` for `j = 1..k`.
pub fn moments_to_velocities(mv: &MomentVector) -> Result<VelocityVector, ClosureError> {
    let m = mv.values();
    let mut u = Vec::with_capacity(mv.k());
    for j in 1..m.len() {
        if m[j - 1] == 0.0 {
            return Err(ClosureError::ZeroMomentDenominator(j));
        }
        u.push(m[j] / m[j - 1]);
    }
    Ok(VelocityVector { m0: m[0], u })
}

/// `M_j = M_0 U_1 ... U_j`.
pub fn velocities_to_moments(vv: &VelocityVector) -> MomentVector {
    let mut m = Vec::with_capacity(vv.k() + 1);
    let mut acc = vv.m0;
    m.push(acc);
    for &uj in &vv.u {
        acc *= uj;
        m.push(acc);
    }
    MomentVector { m }
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    n: usize,
    a: Vec<f64>,
}

impl JacobianMatrix {
    /// Side length (`k + 1`).
    pub fn size(&self) -> usize {
        self.n
    }

    /// Entry at row `i`, column `j` (zero-based).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    /// Row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }
}

/// Flux Jacobian of `(M_0..M_k)_t + (M_1..M_{k+1})_x = ...` with the closure
/// substituted for `M_{k+1}`.
///
/// Its spectrum is `0` with multiplicity `k - 1` and `U_k` with multiplicity 2,
/// and the double eigenvalue has a single eigenvector.
pub fn assemble_jacobian(mv: &MomentVector) -> Result<JacobianMatrix, ClosureError> {
    let k = mv.k();
    let m = mv.values();
    if m[k - 1] == 0.0 {
        return Err(ClosureError::ZeroMomentDenominator(k));
    }
    let n = k + 1;
    let mut a = vec![0.0; n * n];
    for i in 0..k {
        a[i * n + i + 1] = 1.0;
    }
    let uk = m[k] / m[k - 1];
    a[k * n + k - 1] = -uk * uk;
    a[k * n + k] = 2.0 * uk;
    Ok(JacobianMatrix { n, a })
}

/// `M_j^2 - M_{j+1} M_{j-1}` for every odd `j` with `1 <= j <= k - 1`.
///
/// Moments of a nonnegative density make every entry `<= 0`; the value is 0
/// exactly for a single delta in velocity. Empty for `k < 2`.
pub fn holder_residuals(mv: &MomentVector) -> Vec<f64> {
    let m = mv.values();
    let k = mv.k();
    (1..k)
        .step_by(2)
        .map(|j| m[j] * m[j] - m[j + 1] * m[j - 1])
        .collect()
}

/// True when every Hölder residual is nonpositive (up to `tol`).
pub fn holder_admissible(residuals: &[f64], tol: f64) -> bool {
    residuals.iter().all(|&r| r <= tol)
}

/// Electron density from the field slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density {
    /// `n = 1 - E_x`.
    pub n: f64,
    /// `n <= 0`.
    pub non_physical: bool,
}

/// `n = 1 - E_x` for unit background density.
pub fn density_from_field(e_x: f64) -> Density {
    let n = 1.0 - e_x;
    Density { n, non_physical: !(n > 0.0) }
}

/// State chart a closure system is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// `(Ecal, M_0, ..., M_k)` with `Ecal = E M_0`; conservative.
    Moment,
    /// `(E, U_1, ..., U_k)`.
    Velocity,
}

/// Closure level and chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosureSpec {
    k: usize,
    chart: Chart,
}

impl ClosureSpec {
    /// Level `k >= 1`.
    pub fn new(k: usize, chart: Chart) -> Result<Self, ClosureError> {
        if k < 1 {
            return Err(ClosureError::LevelTooLow(k));
        }
        Ok(ClosureSpec { k, chart })
    }

    /// Closure level.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Chart.
    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Number of unknowns: the field plus `M_0..M_k` (or `E` plus `U_1..U_k`,
    /// which drops `M_0`).
    pub fn state_len(&self) -> usize {
        match self.chart {
            Chart::Moment => self.k + 2,
            Chart::Velocity => self.k + 1,
        }
    }
}

/// Flux and source of the conservative system at level `k`.
///
/// `state = (Ecal, M_0, ..., M_k)`. The fluxes are
/// `(U_1 Ecal, M_1, ..., M_k, M_k^2 / M_{k-1})` and the sources
/// `(M_1, 0, -Ecal, -2 Ecal M_1 / M_0, ..., -j Ecal M_{j-1} / M_0, ...)`.
pub fn flux_source(state: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ClosureError> {
    if state.len() < 3 {
        return Err(ClosureError::LevelTooLow(state.len().saturating_sub(2)));
    }
    let ecal = state[0];
    let m = &state[1..];
    let k = m.len() - 1;
    if !(m[0] > 0.0) {
        return Err(ClosureError::NonPositiveDensity(m[0]));
    }
    if m[k - 1] == 0.0 {
        return Err(ClosureError::ZeroMomentDenominator(k));
    }
    let e = ecal / m[0];
    let mut flux = Vec::with_capacity(k + 2);
    let mut src = Vec::with_capacity(k + 2);
    flux.push(m[1] / m[0] * ecal);
    src.push(m[1]);
    for j in 0..=k {
        flux.push(if j < k { m[j + 1] } else { m[k] * m[k] / m[k - 1] });
        src.push(if j == 0 { 0.0 } else { -(j as f64) * e * m[j - 1] });
    }
    Ok((flux, src))
}
