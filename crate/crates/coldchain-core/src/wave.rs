//! Traveling waves `E(xi)`, `U_1(xi)`, `U_2(xi)` with `xi = x - w t`.
//!
//! Closure 1 conserves `U_1^2 + E^2 = I0^2`. Writing `U_1 = I0 sin(theta)`,
//! `E = I0 cos(theta)` turns the profile into `xi + C = w theta + I0 cos(theta)`,
//! which is monotone in `theta` whenever `w^2 >= I0^2` and has period `2 pi |w|`.
//!
//! Closure 2 is singular on `U_1 = w` and `U_2 = w`. Profiles are integrated in
//! a parameter `tau` with `dxi = w U_1 (U_1 - w)(U_2 - w)^2 dtau`, in which the
//! field is polynomial, both lines are invariant and the ends of the support
//! are reached as `tau -> +-inf`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::num::{abs, cos, hypot, sin, sqrt};
use crate::odeint::{integrate, Action, Control, Direction, EventSpec, IvpProblem, OdeError, Termination, Trajectory};

/// Failures of the wave constructions.
#[derive(Debug, Clone, PartialEq)]
pub enum WaveError {
    /// `w^2 < I0^2`: the closure-1 profile has unbounded derivatives.
    NoSmoothWave {
        /// Wave speed.
        w: f64,
        /// Amplitude invariant.
        i0: f64,
    },
    /// A denominator of the closure-2 system vanishes.
    SingularManifold(Manifold),
    /// The data are outside every region (or `w <= 0`).
    InvalidRegion,
    /// Too few samples near the terminal point for a fit.
    InsufficientTail {
        /// Samples found.
        found: usize,
    },
    /// Invalid parameters.
    BadParams,
    /// Integrator failure.
    Ode(OdeError),
}

/// Singular lines of the closure-2 wave system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    /// `U_1 = w`.
    U1EqW,
    /// `U_2 = w`.
    U2EqW,
    /// `U_1 = 0`.
    U1EqZero,
    /// `w = 0`.
    WZero,
}

impl fmt::Display for WaveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaveError::NoSmoothWave { w, i0 } => write!(f, "no smooth wave: w^2 = {} < I0^2 = {}", w * w, i0 * i0),
            WaveError::SingularManifold(m) => write!(f, "singular manifold {m:?}"),
            WaveError::InvalidRegion => write!(f, "data outside the regions U2 > U1 > 0, w > 0"),
            WaveError::InsufficientTail { found } => write!(f, "only {found} tail samples"),
            WaveError::BadParams => write!(f, "invalid wave parameters"),
            WaveError::Ode(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for WaveError {}

impl From<OdeError> for WaveError {
    fn from(e: OdeError) -> Self {
        WaveError::Ode(e)
    }
}

/// Closure-1 wave: speed, amplitude and phase at `xi = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    /// Wave speed.
    pub w: f64,
    /// `I0 = sqrt(E(0)^2 + U_1(0)^2)`.
    pub i0: f64,
    /// Phase with `U_1(0) = I0 sin(theta0)`, `E(0) = I0 cos(theta0)`.
    pub theta0: f64,
}

impl WaveParams {
    /// Speed and amplitude with `U_1(0) = 0`, `E(0) = I0`.
    pub fn new(w: f64, i0: f64) -> Self {
        WaveParams { w, i0, theta0: 0.0 }
    }

    /// From the values at `xi = 0`.
    pub fn from_initial(w: f64, e0: f64, u10: f64) -> Self {
        let i0 = hypot(e0, u10);
        let theta0 = if i0 == 0.0 { 0.0 } else { crate::num::atan2(u10, e0) };
        WaveParams { w, i0, theta0 }
    }
}

/// One sample of a closure-1 profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave1Sample {
    /// Wave coordinate.
    pub xi: f64,
    /// Field.
    pub e: f64,
    /// Velocity.
    pub u1: f64,
}

/// Period `2 pi |w|` of every smooth closure-1 wave.
pub fn wave1_period(w: f64) -> f64 {
    2.0 * PI * abs(w)
}

/// Solves `w theta + I0 cos(theta) = target` (monotone in `theta`).
fn solve_phase(w: f64, i0: f64, target: f64) -> f64 {
    let f = |th: f64| w * th + i0 * cos(th) - target;
    let (mut lo, mut hi) = ((target - i0) / w, (target + i0) / w);
    if lo > hi {
        core::mem::swap(&mut lo, &mut hi);
    }
    let inc = w > 0.0;
    let mut th = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = f(th);
        if v == 0.0 {
            return th;
        }
        if (v > 0.0) == inc {
            hi = th;
        } else {
            lo = th;
        }
        let d = w - i0 * sin(th);
        let mut next = if d != 0.0 { th - v / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if abs(next - th) <= 1e-16 * (1.0 + abs(th)) || hi - lo <= 1e-16 * (1.0 + abs(th)) {
            return next;
        }
        th = next;
    }
    th
}

/// Closure-1 profile on `xi_grid`.
pub fn wave1_profile(p: &WaveParams, xi_grid: &[f64]) -> Result<Vec<Wave1Sample>, WaveError> {
    if !(p.w.is_finite() && p.i0.is_finite() && p.i0 >= 0.0) {
        return Err(WaveError::BadParams);
    }
    if p.w * p.w < p.i0 * p.i0 {
        return Err(WaveError::NoSmoothWave { w: p.w, i0: p.i0 });
    }
    if p.i0 == 0.0 {
        return Ok(xi_grid.iter().map(|&xi| Wave1Sample { xi, e: 0.0, u1: 0.0 }).collect());
    }
    let c = p.w * p.theta0 + p.i0 * cos(p.theta0);
    Ok(xi_grid
        .iter()
        .map(|&xi| {
            let th = solve_phase(p.w, p.i0, xi + c);
            Wave1Sample { xi, e: p.i0 * cos(th), u1: p.i0 * sin(th) }
        })
        .collect())
}

/// Closure-2 wave state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveState {
    /// Field.
    pub e: f64,
    /// First velocity.
    pub u1: f64,
    /// Second velocity.
    pub u2: f64,
}

/// `d/dxi` of `(E, U_1, U_2)` for closure 2.
pub fn rhs_wave2(s: &WaveState, w: f64) -> Result<[f64; 3], WaveError> {
    let WaveState { e, u1, u2 } = *s;
    if w == 0.0 {
        return Err(WaveError::SingularManifold(Manifold::WZero));
    }
    if u1 == w {
        return Err(WaveError::SingularManifold(Manifold::U1EqW));
    }
    if u2 == w {
        return Err(WaveError::SingularManifold(Manifold::U2EqW));
    }
    if u1 == 0.0 {
        return Err(WaveError::SingularManifold(Manifold::U1EqZero));
    }
    Ok([
        u1 / (u1 - w),
        e * (u1 - w) * (2.0 * u2 - 2.0 * u1 - w) / (w * (u2 - w) * (u2 - w)),
        e * (u2 - 2.0 * u1) / (u1 * (u2 - w)),
    ])
}

/// The same field in the parameter `tau`, extended by `dxi/dtau` (state `(E, U_1, U_2, xi)`).
pub fn rhs_wave2_tau(y: &[f64], w: f64, d: &mut [f64]) {
    let (e, u1, u2) = (y[0], y[1], y[2]);
    let a = u1 - w;
    let b = u2 - w;
    d[0] = w * u1 * u1 * b * b;
    d[1] = e * a * a * (2.0 * u2 - 2.0 * u1 - w) * u1;
    d[2] = e * (u2 - 2.0 * u1) * w * a * b;
    d[3] = w * u1 * a * b * b;
}

/// Integrates the closure-2 wave directly in `xi` (for data away from the singular lines).
pub fn wave2_xi_trajectory(init: &WaveState, w: f64, xi_end: f64, ctrl: &Control) -> Result<Trajectory, WaveError> {
    rhs_wave2(init, w)?;
    let rhs = move |_x: f64, y: &[f64], d: &mut [f64]| {
        match rhs_wave2(&WaveState { e: y[0], u1: y[1], u2: y[2] }, w) {
            Ok(r) => d.copy_from_slice(&r),
            Err(_) => d.fill(f64::NAN),
        }
    };
    Ok(integrate(IvpProblem::new(rhs, vec![init.e, init.u1, init.u2], 0.0, xi_end), &[], ctrl)?)
}

/// Local type of an equilibrium of the `(U_1, U_2)` phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    /// Real eigenvalues of opposite sign.
    Saddle,
    /// Real nonzero eigenvalues of one sign.
    Node,
    /// One zero eigenvalue, the other nonzero.
    DegenerateNode,
    /// Complex eigenvalues.
    Focus,
    /// Both eigenvalues zero.
    Nilpotent,
}

/// One equilibrium of `dU_2/dU_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPoint {
    /// `"A1"` .. `"A5"`.
    pub label: &'static str,
    /// Abscissa.
    pub u1: f64,
    /// Ordinate.
    pub u2: f64,
    /// Type from the linearization.
    pub kind: PointKind,
    /// Trace and determinant of the linearization.
    pub trace_det: (f64, f64),
}

/// The five equilibria A1..A5.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularPointSet {
    /// Wave speed.
    pub w: f64,
    /// A1..A5 in order.
    pub points: [SingularPoint; 5],
}

/// Planar field whose orbits are the solutions of `dU_2/dU_1`.
fn plane_field(u1: f64, u2: f64, w: f64) -> (f64, f64) {
    (u1 * (u1 - w) * (2.0 * u2 - 2.0 * u1 - w), w * (u2 - 2.0 * u1) * (u2 - w))
}

fn classify(u1: f64, u2: f64, w: f64) -> (PointKind, (f64, f64)) {
    let h = 1e-6 * w;
    let (fp, gp) = plane_field(u1 + h, u2, w);
    let (fm, gm) = plane_field(u1 - h, u2, w);
    let (fq, gq) = plane_field(u1, u2 + h, w);
    let (fr, gr) = plane_field(u1, u2 - h, w);
    let j = [[(fp - fm) / (2.0 * h), (fq - fr) / (2.0 * h)], [(gp - gm) / (2.0 * h), (gq - gr) / (2.0 * h)]];
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let scale = w * w * w * w;
    let tol = 1e-8 * scale;
    let disc = tr * tr - 4.0 * det;
    let kind = if abs(det) <= tol {
        if abs(tr) <= 1e-8 * w * w {
            PointKind::Nilpotent
        } else {
            PointKind::DegenerateNode
        }
    } else if det < 0.0 {
        PointKind::Saddle
    } else if disc >= -tol {
        PointKind::Node
    } else {
        PointKind::Focus
    };
    (kind, (tr, det))
}

/// Equilibria and their types, by numerical linearization.
pub fn singular_points(w: f64) -> Result<SingularPointSet, WaveError> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(WaveError::BadParams);
    }
    let loc = [("A1", 0.0, 0.0), ("A2", 0.0, w), ("A3", w, w), ("A4", w, 2.0 * w), ("A5", 0.5 * w, w)];
    let points = loc.map(|(label, u1, u2)| {
        let (kind, trace_det) = classify(u1, u2, w);
        SingularPoint { label, u1, u2, kind, trace_det }
    });
    Ok(SingularPointSet { w, points })
}

/// Region of the `(U_1, U_2)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    /// `w > U_2 > U_1 > 0`.
    Region1,
    /// `U_2 > w > U_1 > 0`.
    Region2,
    /// `U_2 > U_1 > w`.
    Region3,
    /// Anything else.
    Invalid,
}

impl RegionLabel {
    /// Terminal equilibrium `(U_1, U_2)` of profiles in this region.
    pub fn terminal_point(&self, w: f64) -> Option<(f64, f64)> {
        match self {
            RegionLabel::Region1 => Some((0.5 * w, w)),
            RegionLabel::Region2 => Some((w, 2.0 * w)),
            RegionLabel::Region3 => Some((w, w)),
            RegionLabel::Invalid => None,
        }
    }
}

/// Region by the strict inequality chains.
pub fn classify_region(u1: f64, u2: f64, w: f64) -> RegionLabel {
    if w > u2 && u2 > u1 && u1 > 0.0 {
        RegionLabel::Region1
    } else if u2 > w && w > u1 && u1 > 0.0 {
        RegionLabel::Region2
    } else if u2 > u1 && u1 > w {
        RegionLabel::Region3
    } else {
        RegionLabel::Invalid
    }
}

/// Magnitude class of a quantity at a support endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    /// Below [`VANISH_BELOW`].
    Vanishing,
    /// Between the two thresholds.
    Bounded,
    /// Above [`UNBOUNDED_ABOVE`].
    Unbounded,
}

/// Threshold for [`Growth::Vanishing`].
pub const VANISH_BELOW: f64 = 1e-3;
/// Threshold for [`Growth::Unbounded`].
pub const UNBOUNDED_ABOVE: f64 = 1e3;

fn growth(x: f64) -> Growth {
    let a = abs(x);
    if !(a <= UNBOUNDED_ABOVE) {
        Growth::Unbounded
    } else if a < VANISH_BELOW {
        Growth::Vanishing
    } else {
        Growth::Bounded
    }
}

/// Class from the power law `m ~ d^s` between two distances `d0 > d1`.
///
/// Falls back to the absolute thresholds on `m1` when the exponent is flat.
fn trend(m0: f64, d0: f64, m1: f64, d1: f64) -> Growth {
    let (m0, m1) = (abs(m0), abs(m1));
    if !(m1 <= UNBOUNDED_ABOVE) {
        return Growth::Unbounded;
    }
    if m0 > 0.0 && m1 > 0.0 {
        let s = crate::num::ln(m1 / m0) / crate::num::ln(d1 / d0);
        if s < -TREND_EXPONENT {
            return Growth::Unbounded;
        }
        if s > TREND_EXPONENT {
            return Growth::Vanishing;
        }
    }
    growth(m1)
}

/// Exponent beyond which a power law counts as growing or decaying.
pub const TREND_EXPONENT: f64 = 0.25;

/// Why one side of a profile stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndReason {
    /// Within the endpoint distance of the terminal equilibrium.
    ReachedPoint,
    /// `|E|` exceeded the field limit.
    FieldEscaped,
    /// State norm crossed the blow-up threshold.
    BlowUp,
    /// Parameter range exhausted.
    RangeExhausted,
}

/// One end of the support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    /// `xi` at the last sample.
    pub xi: f64,
    /// `xi` extrapolated to zero distance from the crossings of the distance thresholds.
    pub xi_extrapolated: f64,
    /// Last state.
    pub state: WaveState,
    /// Distance of `(U_1, U_2)` to the terminal equilibrium.
    pub distance: f64,
    /// Stop reason.
    pub reason: EndReason,
    /// `(E', U_1', U_2')` at the last state.
    pub derivatives: [f64; 3],
    /// Class of `|E|` as the terminal point is approached.
    pub field: Growth,
    /// Class of `E'`.
    pub field_slope: Growth,
    /// Class of `max(|U_1'|, |U_2'|)`.
    pub velocity_slope: Growth,
}

/// A closure-2 profile in `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSample {
    /// Wave coordinate.
    pub xi: f64,
    /// Field.
    pub e: f64,
    /// First velocity.
    pub u1: f64,
    /// Second velocity.
    pub u2: f64,
}

/// Result of [`wave2_profile`].
#[derive(Debug, Clone)]
pub struct Wave2Profile {
    /// Wave speed.
    pub w: f64,
    /// Region of the initial data.
    pub region: RegionLabel,
    /// Terminal equilibrium.
    pub terminal: (f64, f64),
    /// Samples ordered by `xi`.
    pub samples: Vec<WaveSample>,
    /// `xi < 0` end.
    pub left: Endpoint,
    /// `xi > 0` end.
    pub right: Endpoint,
}

impl Wave2Profile {
    /// Distance of a sample to the terminal point.
    pub fn distance(&self, s: &WaveSample) -> f64 {
        hypot(s.u1 - self.terminal.0, s.u2 - self.terminal.1)
    }
}

/// Stopping distance as a multiple of `w`.
pub const END_DISTANCE: f64 = 1e-6;
/// Stop once `|E|` exceeds this.
pub const FIELD_LIMIT: f64 = 1e6;
const TAU_SPAN: f64 = 1e9;
const THRESHOLDS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

fn aitken(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 3 {
        return x.last().copied().unwrap_or(f64::NAN);
    }
    let (a, b, c) = (x[n - 3], x[n - 2], x[n - 1]);
    let d = (c - b) - (b - a);
    if d == 0.0 || !d.is_finite() {
        return c;
    }
    let est = c - (c - b) * (c - b) / d;
    // Only trust the extrapolation if it moves less than the last increment would suggest.
    if abs(est - c) <= 10.0 * abs(c - b) { est } else { c }
}

fn half_profile(init: &WaveState, w: f64, dir: f64, term: (f64, f64), ctrl: &Control) -> Result<(Trajectory, Endpoint), WaveError> {
    let rhs = move |_t: f64, y: &[f64], d: &mut [f64]| rhs_wave2_tau(y, w, d);
    let dist = move |y: &[f64]| hypot(y[1] - term.0, y[2] - term.1);
    let mut events = vec![
        EventSpec::new(move |y: &[f64]| dist(y) - END_DISTANCE * w, Direction::Falling, Action::Terminate),
        EventSpec::new(|y: &[f64]| abs(y[0]) - FIELD_LIMIT, Direction::Rising, Action::Terminate),
    ];
    for thr in THRESHOLDS {
        events.push(EventSpec::new(move |y: &[f64]| dist(y) - thr * w, Direction::Falling, Action::Record));
    }
    let c = Control { min_step_frac: 1e-20, event_tol_frac: 1e-16, ..*ctrl };
    let tr = integrate(IvpProblem::new(rhs, vec![init.e, init.u1, init.u2, 0.0], 0.0, dir * TAU_SPAN), &events, &c)?;
    let y = tr.last_state();
    let state = WaveState { e: y[0], u1: y[1], u2: y[2] };
    let reason = match tr.termination() {
        Termination::Event(0) => EndReason::ReachedPoint,
        Termination::Event(_) => EndReason::FieldEscaped,
        Termination::BlowUp => EndReason::BlowUp,
        Termination::ReachedEnd => EndReason::RangeExhausted,
    };
    let mut xs: Vec<f64> = tr.events().iter().filter(|e| e.index >= 2).map(|e| e.y[3]).collect();
    if reason == EndReason::ReachedPoint {
        xs.push(y[3]);
    }
    let derivatives = rhs_wave2(&state, w).unwrap_or([f64::INFINITY; 3]);
    let speed = |d: &[f64; 3]| abs(d[1]).max(abs(d[2]));
    // Trends are read between the 1e-3 w and 1e-4 w crossings. Closer in, U_1'
    // near A5 is a difference of nearly equal terms and loses its digits.
    let marks: Vec<(f64, WaveState)> = tr
        .events()
        .iter()
        .filter(|e| e.index == 3 || e.index == 4)
        .map(|e| (dist(&e.y), WaveState { e: e.y[0], u1: e.y[1], u2: e.y[2] }))
        .collect();
    let (field, field_slope, velocity_slope) = match marks.len() {
        n if n >= 2 => {
            let (d0, s0) = marks[n - 2];
            let (d1, s1) = marks[n - 1];
            let r0 = rhs_wave2(&s0, w).unwrap_or([f64::INFINITY; 3]);
            let r1 = rhs_wave2(&s1, w).unwrap_or([f64::INFINITY; 3]);
            let fd = if abs(state.e) > UNBOUNDED_ABOVE { Growth::Unbounded } else { trend(s0.e, d0, s1.e, d1) };
            (fd, trend(r0[0], d0, r1[0], d1), trend(speed(&r0), d0, speed(&r1), d1))
        }
        _ => (growth(state.e), growth(derivatives[0]), growth(speed(&derivatives))),
    };
    let end = Endpoint {
        xi: y[3],
        xi_extrapolated: aitken(&xs),
        state,
        distance: dist(y),
        reason,
        derivatives,
        field,
        field_slope,
        velocity_slope,
    };
    Ok((tr, end))
}

/// Closure-2 profile through `init` (at `xi = 0`), traced to both ends of its support.
pub fn wave2_profile(init: &WaveState, w: f64, ctrl: &Control) -> Result<Wave2Profile, WaveError> {
    if !(w > 0.0) || !init.e.is_finite() {
        return Err(WaveError::InvalidRegion);
    }
    let region = classify_region(init.u1, init.u2, w);
    let terminal = region.terminal_point(w).ok_or(WaveError::InvalidRegion)?;
    let (ta, ea) = half_profile(init, w, 1.0, terminal, ctrl)?;
    let (tb, eb) = half_profile(init, w, -1.0, terminal, ctrl)?;
    let (left_tr, left, right_tr, right) = if ea.xi < eb.xi { (ta, ea, tb, eb) } else { (tb, eb, ta, ea) };
    let to_sample = |y: &Vec<f64>| WaveSample { xi: y[3], e: y[0], u1: y[1], u2: y[2] };
    let mut samples: Vec<WaveSample> = left_tr.states().iter().rev().map(to_sample).collect();
    samples.extend(right_tr.states().iter().skip(1).map(to_sample));
    Ok(Wave2Profile { w, region, terminal, samples, left, right })
}

/// Fitted endpoint law.
#[derive(Debug, Clone, PartialEq)]
pub enum AsymptoticFit {
    /// Near A5: `U_2 - w = eta + c eta^2`, `eta = U_1 - w/2`.
    Region1 {
        /// Fitted `c` (expected `2 / w`).
        quad_coeff: f64,
        /// RMS residual of the fit.
        rms: f64,
    },
    /// Near A4: `U_1 - w = C1 (U_2 - w)(U_2 - 2w)` and `E^2 = Ct1 / (U_2 - 2w) + C2`.
    Region2 {
        /// `C1`.
        c1: f64,
        /// `Ct1`.
        ct1: f64,
        /// `C2`.
        c2: f64,
        /// Last value of `E^2 (U_2 - 2w)`.
        product: f64,
        /// `(max - min) / |mean|` of `E^2 (U_2 - 2w)` over the last decade of distance.
        product_variation: f64,
    },
    /// Near A3: `U_1 - w = C1 (U_2 - w)` and `E^2 = Ct1 U_2 + C2`.
    Region3 {
        /// `C1`.
        c1: f64,
        /// `Ct1`.
        ct1: f64,
        /// `C2`.
        c2: f64,
        /// Max residual of the `E^2` line over the range of `E^2`.
        rel_residual: f64,
    },
}

/// Tail radius (times `w`) used by [`asymptotics_check`].
pub const TAIL_RADIUS: f64 = 1e-2;
/// Minimum tail size.
pub const MIN_TAIL: usize = 20;

/// Fits the endpoint law of `region` to the samples near the terminal point.
///
/// Uses the right half of the (symmetric) profile.
pub fn asymptotics_check(p: &Wave2Profile, region: RegionLabel) -> Result<AsymptoticFit, WaveError> {
    let w = p.w;
    let term = region.terminal_point(w).ok_or(WaveError::InvalidRegion)?;
    let dist = |s: &WaveSample| hypot(s.u1 - term.0, s.u2 - term.1);
    let tail: Vec<WaveSample> = p.samples.iter().filter(|s| s.xi > 0.0 && dist(s) < TAIL_RADIUS * w).copied().collect();
    if tail.len() < MIN_TAIL {
        return Err(WaveError::InsufficientTail { found: tail.len() });
    }
    let ls = |cols: &[&[f64]], y: &[f64]| crate::num::least_squares(cols, y).ok_or(WaveError::InsufficientTail { found: y.len() });
    match region {
        RegionLabel::Region1 => {
            let eta: Vec<f64> = tail.iter().map(|s| s.u1 - 0.5 * w).collect();
            let eta2: Vec<f64> = eta.iter().map(|e| e * e).collect();
            let r: Vec<f64> = tail.iter().zip(&eta).map(|(s, e)| s.u2 - w - e).collect();
            let c = ls(&[&eta2], &r)?[0];
            let rms = sqrt(r.iter().zip(&eta2).map(|(r, e)| (r - c * e) * (r - c * e)).sum::<f64>() / r.len() as f64);
            Ok(AsymptoticFit::Region1 { quad_coeff: c, rms })
        }
        RegionLabel::Region2 => {
            let x: Vec<f64> = tail.iter().map(|s| (s.u2 - w) * (s.u2 - 2.0 * w)).collect();
            let y: Vec<f64> = tail.iter().map(|s| s.u1 - w).collect();
            let c1 = ls(&[&x], &y)?[0];
            let inv: Vec<f64> = tail.iter().map(|s| 1.0 / (s.u2 - 2.0 * w)).collect();
            let ones = vec![1.0; tail.len()];
            let e2: Vec<f64> = tail.iter().map(|s| s.e * s.e).collect();
            let k = ls(&[&inv, &ones], &e2)?;
            let prod: Vec<f64> = tail.iter().map(|s| s.e * s.e * (s.u2 - 2.0 * w)).collect();
            let dmin = tail.iter().map(|s| dist(s)).fold(f64::INFINITY, f64::min);
            let last: Vec<f64> = tail.iter().zip(&prod).filter(|(s, _)| dist(s) <= 10.0 * dmin).map(|(_, p)| *p).collect();
            let (mn, mx) = last.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let mean = last.iter().sum::<f64>() / last.len() as f64;
            let product = *tail.iter().zip(&prod).min_by(|a, b| dist(a.0).partial_cmp(&dist(b.0)).unwrap()).unwrap().1;
            Ok(AsymptoticFit::Region2 { c1, ct1: k[0], c2: k[1], product, product_variation: (mx - mn) / abs(mean) })
        }
        RegionLabel::Region3 => {
            let x: Vec<f64> = tail.iter().map(|s| s.u2 - w).collect();
            let y: Vec<f64> = tail.iter().map(|s| s.u1 - w).collect();
            let c1 = ls(&[&x], &y)?[0];
            let u2: Vec<f64> = tail.iter().map(|s| s.u2).collect();
            let ones = vec![1.0; tail.len()];
            let e2: Vec<f64> = tail.iter().map(|s| s.e * s.e).collect();
            let k = ls(&[&u2, &ones], &e2)?;
            let (mn, mx) = e2.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let worst = u2.iter().zip(&e2).map(|(u, e)| abs(e - k[0] * u - k[1])).fold(0.0, f64::max);
            Ok(AsymptoticFit::Region3 { c1, ct1: k[0], c2: k[1], rel_residual: worst / (mx - mn) })
        }
        RegionLabel::Invalid => Err(WaveError::InvalidRegion),
    }
}

/// Physical reading of the periodic continuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    /// `E` decreases across the support.
    PhysicalPeriodic,
    /// `E` increases across the support.
    NegativeDeltaDensity,
}

/// Density diagnostics of a glued profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySignature {
    /// Classification.
    pub kind: DensityKind,
    /// `E(xi_-) - E(xi_+)`, the jump of `E` at a glue point.
    pub jump: f64,
    /// Weight of the delta in `n = 1 - E_x` at a glue point (`-jump`).
    pub delta_weight: f64,
    /// Smallest smooth density `w / (w - U_1)` over the samples.
    pub min_smooth_density: f64,
    /// Largest jump of `(U_1, U_2)` between the two ends.
    pub velocity_jump: f64,
}

/// Classifies the periodic continuation of a closure-2 profile.
pub fn density_signature(p: &Wave2Profile) -> DensitySignature {
    let jump = p.left.state.e - p.right.state.e;
    let kind = if jump < 0.0 { DensityKind::NegativeDeltaDensity } else { DensityKind::PhysicalPeriodic };
    let min_smooth_density = p.samples.iter().map(|s| p.w / (p.w - s.u1)).fold(f64::INFINITY, f64::min);
    let velocity_jump = abs(p.left.state.u1 - p.right.state.u1).max(abs(p.left.state.u2 - p.right.state.u2));
    DensitySignature { kind, jump, delta_weight: -jump, min_smooth_density, velocity_jump }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctrl() -> Control {
        Control::default()
    }

    #[test]
    fn wave1_basics() {
        let zero = wave1_profile(&WaveParams::new(1.0, 0.0), &[0.0, 1.0, 2.0]).unwrap();
        assert!(zero.iter().all(|s| s.e == 0.0 && s.u1 == 0.0));
        assert_eq!(
            wave1_profile(&WaveParams::new(1.0, 1.2), &[0.0]),
            Err(WaveError::NoSmoothWave { w: 1.0, i0: 1.2 })
        );
        let p = WaveParams::new(2.0, 1.0);
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.37).collect();
        let shifted: Vec<f64> = grid.iter().map(|x| x + 4.0 * PI).collect();
        let a = wave1_profile(&p, &grid).unwrap();
        let b = wave1_profile(&p, &shifted).unwrap();
        for (s, t) in a.iter().zip(&b) {
            assert!((s.u1 - t.u1).abs() < 1e-9);
        }
    }

    #[test]
    fn wave1_matches_implicit_formula_on_principal_branch() {
        let p = WaveParams::from_initial(1.5, 0.8, 0.3);
        let c = sqrt(p.i0 * p.i0 - 0.09) + p.w * libm::asin(0.3 / p.i0);
        let grid: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.05).collect();
        for s in wave1_profile(&p, &grid).unwrap() {
            if s.e > 0.0 {
                let lhs = s.xi + c;
                let rhs = sqrt(p.i0 * p.i0 - s.u1 * s.u1) + p.w * libm::asin(s.u1 / p.i0);
                assert!((lhs - rhs).abs() < 1e-12);
            }
            assert!((s.e * s.e + s.u1 * s.u1 - p.i0 * p.i0).abs() < 1e-12);
        }
    }

    #[test]
    fn rhs_wave2_examples() {
        let d = rhs_wave2(&WaveState { e: 0.0, u1: 0.3, u2: 0.5 }, 1.0).unwrap();
        assert_eq!(d[1], 0.0);
        assert_eq!(d[2], 0.0);
        assert!((d[0] - 0.3 / -0.7).abs() < 1e-15);
        let d = rhs_wave2(&WaveState { e: 0.1, u1: 0.6, u2: 0.7 }, 1.0).unwrap();
        assert!((d[0] + 1.5).abs() < 1e-12);
        assert!((d[1] - 0.032 / 0.09).abs() < 1e-12);
        assert!((d[2] - 0.05 / 0.18).abs() < 1e-12);
        assert_eq!(
            rhs_wave2(&WaveState { e: 0.1, u1: 0.6, u2: 1.0 }, 1.0),
            Err(WaveError::SingularManifold(Manifold::U2EqW))
        );
    }

    #[test]
    fn singular_point_table() {
        let s = singular_points(1.0).unwrap();
        let loc: Vec<(f64, f64)> = s.points.iter().map(|p| (p.u1, p.u2)).collect();
        assert_eq!(loc, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.5, 1.0)]);
        let kinds: Vec<PointKind> = s.points.iter().map(|p| p.kind).collect();
        use PointKind::*;
        assert_eq!(kinds, vec![Saddle, Saddle, Node, Node, DegenerateNode]);
        let s2 = singular_points(2.0).unwrap();
        for (a, b) in s.points.iter().zip(&s2.points) {
            assert_eq!((2.0 * a.u1, 2.0 * a.u2), (b.u1, b.u2));
        }
    }

    #[test]
    fn regions() {
        assert_eq!(classify_region(0.6, 0.7, 1.0), RegionLabel::Region1);
        assert_eq!(classify_region(0.2, 0.7, 1.0), RegionLabel::Region1);
        assert_eq!(classify_region(0.2, 0.7, 0.5), RegionLabel::Region2);
        assert_eq!(classify_region(0.2, 1.7, 1.0), RegionLabel::Region2);
        assert_eq!(classify_region(1.5, 2.0, 1.0), RegionLabel::Region3);
        assert_eq!(classify_region(0.7, 0.6, 1.0), RegionLabel::Invalid);
        assert_eq!(classify_region(0.5, 1.0, 1.0), RegionLabel::Invalid);
    }

    #[test]
    fn aitken_on_geometric_sequence() {
        let x = [1.0 - 0.5, 1.0 - 0.05, 1.0 - 0.005];
        assert!((aitken(&x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn region3_profile_reaches_a3() {
        let p = wave2_profile(&WaveState { e: 0.0, u1: 1.5, u2: 2.0 }, 1.0, &ctrl()).unwrap();
        assert_eq!(p.terminal, (1.0, 1.0));
        for end in [p.left, p.right] {
            assert_eq!(end.reason, EndReason::ReachedPoint);
            assert!(end.distance < 1e-4);
            assert_eq!(end.field, Growth::Bounded);
            assert_eq!(end.velocity_slope, Growth::Unbounded);
        }
        assert!(p.left.xi < 0.0 && p.right.xi > 0.0);
        assert!((p.left.xi + p.right.xi).abs() < 1e-6);
    }

    #[test]
    fn region2_profile_escapes_in_field() {
        let p = wave2_profile(&WaveState { e: 0.0, u1: 0.2, u2: 0.7 }, 0.5, &ctrl()).unwrap();
        assert_eq!(p.region, RegionLabel::Region2);
        assert_eq!(p.terminal, (0.5, 1.0));
        assert_eq!(p.right.field, Growth::Unbounded);
        assert_eq!(p.right.velocity_slope, Growth::Vanishing);
        assert!(p.right.state.e.abs() > 1e3);
        assert_eq!(density_signature(&p).kind, DensityKind::PhysicalPeriodic);
        assert!(matches!(asymptotics_check(&p, RegionLabel::Region1), Err(WaveError::InsufficientTail { .. })));
    }
}
