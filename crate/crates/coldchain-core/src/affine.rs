//! Solutions linear in `x` and their slope dynamics.
//!
//! With `E = a x`, `U_1 = g1 x`, `U_2 = g2 x` the closure-2 system reduces to
//! three ODEs for `(a, g1, g2)`; on `g2 = g1` it reduces to the closure-1 pair.
//! In the chart `q = a / g1`, `eps = g2 - g1` the slopes obey an autonomous
//! planar system on the same time axis, which is what makes the branch
//! continuation below possible: every piece started on one `(q, eps)` curve
//! lives exactly as long as that curve takes to escape.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::num::{abs, sqrt};
use crate::odeint::{integrate, Action, Control, Direction, EventSpec, IvpProblem, OdeError, Termination, Trajectory};

/// Bound below which `(a, g1)` counts as finite when `g2` alone escapes.
pub const FINITE_LIMIT: f64 = 1e4;

/// Failures of the affine reductions.
#[derive(Debug, Clone, PartialEq)]
pub enum AffineError {
    /// `g1 = 0`: the closure-2 slope system is singular.
    GammaOneZero,
    /// `g2 < g1` contradicts `|U_1| <= |U_2|` for these data.
    Ordering {
        /// Offending `g1`.
        g1: f64,
        /// Offending `g2`.
        g2: f64,
    },
    /// `a >= 1` means nonpositive density.
    NonPhysical {
        /// Offending slope.
        a: f64,
    },
    /// A branch plan rule breaks a gluing constraint.
    InvalidGluing(GlueViolation),
    /// Integrator failure.
    Ode(OdeError),
}

/// Which gluing constraint a re-initialization breaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlueViolation {
    /// Initial data must start in the lower half-plane with `g2 > g1`.
    BadInitialData,
    /// No `beta` with `0 < beta < alpha*` (or `a0 >= alpha*`).
    NoBeta,
    /// Pieces must alternate between the half-planes.
    SameHalfPlane {
        /// Piece number (1 = first re-initialization).
        piece: usize,
    },
    /// The `(q, eps)` point is not on the first-step curve.
    OffCurve {
        /// Piece number.
        piece: usize,
    },
    /// `(a, g1)` lies outside the region bounded by the separatrix arcs.
    OutsideSeparatrix {
        /// Piece number.
        piece: usize,
    },
    /// The re-initialized piece did not end at `g1 = 0`.
    PieceDidNotEnd {
        /// Piece number.
        piece: usize,
    },
}

impl fmt::Display for AffineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AffineError::GammaOneZero => write!(f, "gamma1 = 0: closure-2 slope system undefined"),
            AffineError::Ordering { g1, g2 } => write!(f, "gamma2 = {g2} < gamma1 = {g1}"),
            AffineError::NonPhysical { a } => write!(f, "a = {a} >= 1 (nonpositive density)"),
            AffineError::InvalidGluing(v) => write!(f, "invalid gluing: {v:?}"),
            AffineError::Ode(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for AffineError {}

impl From<OdeError> for AffineError {
    fn from(e: OdeError) -> Self {
        AffineError::Ode(e)
    }
}

/// Slopes `(a, g1, g2)` of `(E, U_1, U_2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineState {
    /// Slope of `E`.
    pub a: f64,
    /// Slope of `U_1`.
    pub g1: f64,
    /// Slope of `U_2`.
    pub g2: f64,
}

impl AffineState {
    /// Checked constructor: rejects `g2 < g1` and non-finite input.
    pub fn new(a: f64, g1: f64, g2: f64) -> Result<Self, AffineError> {
        if !(a.is_finite() && g1.is_finite() && g2.is_finite()) || g2 < g1 {
            return Err(AffineError::Ordering { g1, g2 });
        }
        Ok(AffineState { a, g1, g2 })
    }

    /// Point on the closure-1 submanifold `g2 = g1`.
    pub fn closure1(a: f64, g1: f64) -> Self {
        AffineState { a, g1, g2: g1 }
    }

    /// `a < 1`.
    pub fn physical(&self) -> bool {
        self.a < 1.0
    }

    /// `(q, eps) = (a / g1, g2 - g1)`.
    pub fn to_qe(&self) -> Result<ChartQE, AffineError> {
        if self.g1 == 0.0 {
            return Err(AffineError::GammaOneZero);
        }
        Ok(ChartQE { q: self.a / self.g1, eps: self.g2 - self.g1 })
    }

    /// Inverse chart for a chosen `g1`.
    pub fn from_qe(c: ChartQE, g1: f64) -> Self {
        AffineState { a: c.q * g1, g1, g2: g1 + c.eps }
    }
}

/// The `(q, eps)` chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartQE {
    /// `a / g1`.
    pub q: f64,
    /// `g2 - g1`.
    pub eps: f64,
}

/// Closure-1 slopes: `(-g1 (a - 1), -a - g1^2)`.
pub fn rhs_ag(a: f64, g1: f64) -> [f64; 2] {
    [-g1 * (a - 1.0), -a - g1 * g1]
}

/// Closure-2 slopes.
pub fn rhs_agg(s: &AffineState) -> Result<[f64; 3], AffineError> {
    let AffineState { a, g1, g2 } = *s;
    if g1 == 0.0 {
        return Err(AffineError::GammaOneZero);
    }
    Ok([-g1 * (a - 1.0), -a - 2.0 * g1 * g2 + g1 * g1, -2.0 * a + a * g2 / g1 - g2 * g2])
}

/// `(q, eps)` dynamics: `(1 + 2 eps q + q^2, -eps^2 + q eps)`.
pub fn rhs_qe(s: ChartQE) -> [f64; 2] {
    [1.0 + 2.0 * s.eps * s.q + s.q * s.q, -s.eps * s.eps + s.q * s.eps]
}

/// Closure-1 slopes with linear friction `eps_star`.
pub fn rhs_ages(a: f64, g1: f64, eps_star: f64) -> [f64; 2] {
    [-g1 * (a - 1.0), -a - g1 * g1 - 2.0 * g1 * eps_star]
}

/// Closure-1 global smoothness verdict for affine data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Bounded slopes for all time.
    GloballySmooth,
    /// On the separating curve.
    Boundary,
    /// Slopes escape in finite time.
    BlowUp,
}

/// `g10^2 + 2 a0 - 1 < 0` decides global smoothness of the closure-1 slopes.
pub fn criterion_closure1(a0: f64, g10: f64) -> Criterion {
    let v = g10 * g10 + 2.0 * a0 - 1.0;
    let scale = 4.0 * f64::EPSILON * (1.0 + g10 * g10 + 2.0 * abs(a0));
    if abs(v) <= scale {
        Criterion::Boundary
    } else if v < 0.0 {
        Criterion::GloballySmooth
    } else {
        Criterion::BlowUp
    }
}

/// First integral of the closure-1 slopes: `C = (1 - 2a - g1^2) / (a - 1)^2`.
pub fn first_integral_ag(a: f64, g1: f64) -> f64 {
    (1.0 - 2.0 * a - g1 * g1) / ((a - 1.0) * (a - 1.0))
}

/// Locus where `(q, eps)` trajectories change convexity (for `q < 0`).
/// Plotting diagnostic only.
pub fn convexity_locus(q: f64, eps: f64) -> f64 {
    4.0 * eps * eps + q * eps + 6.0 * q * eps * eps * eps + q * q - 3.0 * q * q * q * eps
        + 1.0
        + 6.0 * q * q * eps * eps
}

/// Closure level of an affine run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    /// `(a, g1)` only.
    One,
    /// `(a, g1, g2)`.
    Two,
}

/// How an affine run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AffineOutcome {
    /// Reached `t_end` with bounded slopes.
    Bounded,
    /// `(a, g1)` escaped at `t`.
    BlowUp {
        /// Blow-up time `t*`.
        t: f64,
    },
    /// `g1` reached 0 with `(a, g1)` finite while `g2` escaped (closure 2).
    ClassicalEnd {
        /// Termination time `t_1`.
        t: f64,
        /// Limit of `a`.
        a: f64,
        /// Last `g1`.
        g1: f64,
        /// Last `g2`.
        g2: f64,
    },
}

/// Result of [`simulate_affine`].
#[derive(Debug, Clone)]
pub struct AffineRun {
    /// Closure level.
    pub closure: Closure,
    /// States `(a, g1)` or `(a, g1, g2)`.
    pub trajectory: Trajectory,
    /// End classification.
    pub outcome: AffineOutcome,
}

fn agg_field(_t: f64, y: &[f64], d: &mut [f64]) {
    let (a, g1, g2) = (y[0], y[1], y[2]);
    if g1 == 0.0 {
        d.fill(f64::NAN);
        return;
    }
    d[0] = -g1 * (a - 1.0);
    d[1] = -a - 2.0 * g1 * g2 + g1 * g1;
    d[2] = -2.0 * a + a * g2 / g1 - g2 * g2;
}

/// Integrates the closure-1 or closure-2 slopes from `init` to `t_end`.
///
/// Closure 2 stops when `g1` reaches 0 or when `g2` alone escapes; both are
/// reported as [`AffineOutcome::ClassicalEnd`] when `(a, g1)` stays finite.
pub fn simulate_affine(closure: Closure, init: &AffineState, t_end: f64, ctrl: &Control) -> Result<AffineRun, AffineError> {
    match closure {
        Closure::One => {
            let rhs = |_t: f64, y: &[f64], d: &mut [f64]| {
                let r = rhs_ag(y[0], y[1]);
                d.copy_from_slice(&r);
            };
            let tr = integrate(IvpProblem::new(rhs, vec![init.a, init.g1], 0.0, t_end), &[], ctrl)?;
            let outcome = match tr.termination() {
                Termination::BlowUp => AffineOutcome::BlowUp { t: tr.last_t() },
                _ => AffineOutcome::Bounded,
            };
            Ok(AffineRun { closure, trajectory: tr, outcome })
        }
        Closure::Two => {
            if init.g1 == 0.0 {
                return Err(AffineError::GammaOneZero);
            }
            if init.g2 < init.g1 {
                return Err(AffineError::Ordering { g1: init.g1, g2: init.g2 });
            }
            let ev = [EventSpec::new(|y: &[f64]| y[1], Direction::Any, Action::Terminate)];
            let tr = integrate(IvpProblem::new(agg_field, vec![init.a, init.g1, init.g2], 0.0, t_end), &ev, ctrl)?;
            let y = tr.last_state();
            let finite = abs(y[0]) < FINITE_LIMIT && abs(y[1]) < FINITE_LIMIT;
            let end = AffineOutcome::ClassicalEnd { t: tr.last_t(), a: y[0], g1: y[1], g2: y[2] };
            let outcome = match tr.termination() {
                Termination::Event(_) => end,
                Termination::BlowUp if finite => end,
                Termination::BlowUp => AffineOutcome::BlowUp { t: tr.last_t() },
                Termination::ReachedEnd => AffineOutcome::Bounded,
            };
            Ok(AffineRun { closure, trajectory: tr, outcome })
        }
    }
}

/// Integrates the `(q, eps)` system until `q` escapes or `t_end`.
///
/// Every crossing of the minimum locus `q = eps` is recorded as event 0.
pub fn simulate_qe(init: ChartQE, t_end: f64, ctrl: &Control) -> Result<Trajectory, AffineError> {
    let rhs = |_t: f64, y: &[f64], d: &mut [f64]| {
        let r = rhs_qe(ChartQE { q: y[0], eps: y[1] });
        d.copy_from_slice(&r);
    };
    let ev = [EventSpec::new(|y: &[f64]| y[0] - y[1], Direction::Any, Action::Record)];
    Ok(integrate(IvpProblem::new(rhs, vec![init.q, init.eps], 0.0, t_end), &ev, ctrl)?)
}

/// Smallest `eps` along a `(q, eps)` trajectory, minimum-locus crossings included.
pub fn epsilon_floor(tr: &Trajectory) -> f64 {
    let samples = tr.states().iter().map(|y| y[1]);
    let events = tr.events().iter().map(|e| e.y[1]);
    samples.chain(events).fold(f64::INFINITY, f64::min)
}

/// Closure-1-with-friction run from `(a0, g10)` over `[0, t1]` (`t1 < 0` runs backwards).
pub fn simulate_ages(a0: f64, g10: f64, eps_star: f64, t1: f64, events: &[EventSpec<'_>], ctrl: &Control) -> Result<Trajectory, AffineError> {
    let rhs = move |_t: f64, y: &[f64], d: &mut [f64]| {
        let r = rhs_ages(y[0], y[1], eps_star);
        d.copy_from_slice(&r);
    };
    Ok(integrate(IvpProblem::new(rhs, vec![a0, g10], 0.0, t1), events, ctrl)?)
}

/// Horizon used when deciding whether a friction run is globally smooth.
pub const AGES_HORIZON: f64 = 60.0;

/// True unless the `(a, g1)` run with friction `eps_star` escapes before it
/// comes back up through `g1 = 0` (after which it stays bounded).
pub fn ages_smooth(a0: f64, g10: f64, eps_star: f64, horizon: f64, ctrl: &Control) -> Result<bool, AffineError> {
    let ev = [EventSpec::new(|y: &[f64]| y[1], Direction::Rising, Action::Terminate)];
    let tr = simulate_ages(a0, g10, eps_star, horizon, &ev, ctrl)?;
    Ok(tr.termination() != Termination::BlowUp)
}

/// Right end `alpha*` of the smooth part of the axis `g1 = 0` for friction `eps_star`.
///
/// Bisection (20 halvings of `(0.4, 1)`) on the outcome of runs from `(a, 0)`.
pub fn alpha_star(eps_star: f64, ctrl: &Control) -> Result<f64, AffineError> {
    let (mut lo, mut hi) = (0.4, 1.0);
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if ages_smooth(mid, 0.0, eps_star, AGES_HORIZON, ctrl)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A graph `g1 = f(a)` sampled along a friction trajectory, `a` increasing.
#[derive(Debug, Clone)]
pub struct Arc {
    a: Vec<f64>,
    g: Vec<f64>,
}

impl Arc {
    fn from_trajectory(tr: &Trajectory, n: usize) -> Self {
        let (t0, t1) = (tr.times()[0], tr.last_t());
        let mut pts: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let y = tr.evaluate_dense(t0 + (t1 - t0) * i as f64 / n as f64).unwrap();
                (y[0], y[1])
            })
            .collect();
        pts.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        Arc { a: pts.iter().map(|p| p.0).collect(), g: pts.iter().map(|p| p.1).collect() }
    }

    /// Domain `[a_min, a_max]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.a[0], *self.a.last().unwrap())
    }

    /// Linear interpolation; `None` outside the domain.
    pub fn at(&self, a: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(a >= lo && a <= hi) {
            return None;
        }
        let i = self.a.partition_point(|&x| x < a).max(1).min(self.a.len() - 1);
        let (a0, a1) = (self.a[i - 1], self.a[i]);
        let w = if a1 > a0 { (a - a0) / (a1 - a0) } else { 0.0 };
        Some(self.g[i - 1] + w * (self.g[i] - self.g[i - 1]))
    }
}

/// Separatrix pieces through `(beta, 0)` for friction `eps_star`.
#[derive(Debug, Clone)]
pub struct SeparatrixArcs {
    /// Forward-time arc in `g1 < 0`.
    pub lower: Arc,
    /// Reverse-time arc in `g1 > 0`.
    pub upper: Arc,
    /// Where the reverse arc meets `g1 = 0` on the left.
    pub alpha1: f64,
}

/// Traces both arcs through `(beta, 0)` until each returns to `g1 = 0`.
pub fn separatrix_arcs(beta: f64, eps_star: f64, ctrl: &Control) -> Result<SeparatrixArcs, AffineError> {
    let hit = |dir| [EventSpec::new(|y: &[f64]| y[1], dir, Action::Terminate)];
    let fwd = simulate_ages(beta, 0.0, eps_star, AGES_HORIZON, &hit(Direction::Rising), ctrl)?;
    let back = simulate_ages(beta, 0.0, eps_star, -AGES_HORIZON, &hit(Direction::Falling), ctrl)?;
    if fwd.termination() == Termination::BlowUp || back.termination() == Termination::BlowUp {
        return Err(AffineError::InvalidGluing(GlueViolation::NoBeta));
    }
    Ok(SeparatrixArcs {
        lower: Arc::from_trajectory(&fwd, 2000),
        upper: Arc::from_trajectory(&back, 2000),
        alpha1: back.last_state()[0],
    })
}

/// How the state is chosen after a `g1 = 0` event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlueRule {
    /// Restart from the original initial data.
    Initial,
    /// Point at time `tau` on the first-step `(q, eps)` curve, scaled by `gamma1`.
    OnCurve {
        /// Time along the first-step curve; negative values use its backward extension.
        tau: f64,
        /// New `g1`; `a = q g1`, `g2 = g1 + eps`.
        gamma1: f64,
    },
    /// Explicit state; its `(q, eps)` must lie on the first-step curve.
    Explicit(AffineState),
}

/// Re-initialization rules for successive `g1 = 0` events.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPlan {
    /// Abscissa of the separatrix point `(beta, 0)`; by default the first of
    /// `alpha*/2, alpha*/4, ...` whose reverse-time arc returns to `g1 = 0`.
    pub beta: Option<f64>,
    /// Rules, used in order.
    pub rules: Vec<GlueRule>,
    /// Cycle through the rules until `t_end`.
    pub repeat: bool,
}

impl BranchPlan {
    /// Alternates an upper piece started at time `tau` of the first-step curve
    /// with the initial data itself; the result is periodic.
    pub fn periodic(tau: f64, gamma1_upper: f64) -> Self {
        BranchPlan {
            beta: None,
            rules: vec![GlueRule::OnCurve { tau, gamma1: gamma1_upper }, GlueRule::Initial],
            repeat: true,
        }
    }
}

/// One classical piece of a continued solution.
#[derive(Debug, Clone)]
pub struct Piece {
    /// Global start time.
    pub t_start: f64,
    /// Global end time (`g1 = 0` or `g2` escape).
    pub t_end: f64,
    /// States `(a, g1, g2)` on local time `t - t_start`.
    pub trajectory: Trajectory,
}

/// Bounded, discontinuous continuation built by [`continue_branches`].
#[derive(Debug, Clone)]
pub struct PiecewiseTrajectory {
    /// Pieces in time order.
    pub pieces: Vec<Piece>,
    /// Floor of `eps` on the first-step curve.
    pub eps_star: f64,
    /// `alpha*` for that floor.
    pub alpha_star: f64,
    /// Separatrix abscissa used.
    pub beta: f64,
    /// Escape time of the first-step `(q, eps)` curve.
    pub t_escape: f64,
}

impl PiecewiseTrajectory {
    /// State at global time `t`; `None` at piece boundaries' outer side or beyond the end.
    pub fn evaluate(&self, t: f64) -> Option<[f64; 3]> {
        let p = self.pieces.iter().find(|p| t >= p.t_start && t < p.t_end)?;
        let y = p.trajectory.evaluate_dense(t - p.t_start).ok()?;
        Some([y[0], y[1], y[2]])
    }

    /// Time covered.
    pub fn t_final(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.t_end)
    }
}

/// Distance from `c` to the sampled curve, relative to the curve scale.
fn curve_distance(curve: &Trajectory, c: ChartQE) -> f64 {
    let (t0, t1) = (curve.times()[0], curve.last_t());
    let n = 4000;
    let dist = |t: f64| {
        let y = curve.evaluate_dense(t).unwrap();
        let s = 1.0 + abs(c.q) + abs(c.eps);
        sqrt((y[0] - c.q) * (y[0] - c.q) + (y[1] - c.eps) * (y[1] - c.eps)) / s
    };
    let mut best = (f64::INFINITY, t0);
    for i in 0..=n {
        let t = t0 + (t1 - t0) * i as f64 / n as f64;
        let d = dist(t);
        if d < best.0 {
            best = (d, t);
        }
    }
    // Golden-section refinement around the best sample.
    let h = (t1 - t0) / n as f64;
    let (mut lo, mut hi) = ((best.1 - h).max(t0), (best.1 + h).min(t1));
    let r = 0.618_033_988_749_894_9;
    for _ in 0..80 {
        let m1 = hi - r * (hi - lo);
        let m2 = lo + r * (hi - lo);
        if dist(m1) < dist(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    dist(0.5 * (lo + hi)).min(best.0)
}

/// Time span traced along the first-step `(q, eps)` curve in each direction.
pub const QE_HORIZON: f64 = 100.0;

/// Relative distance below which an explicit state counts as on the curve.
pub const ON_CURVE_TOL: f64 = 1e-6;

/// Continues closure-2 affine data past the `g1 = 0` events with `plan`.
///
/// The first piece is the classical solution from `init`. At each event the
/// next rule supplies new data, which must sit on the first-step `(q, eps)`
/// phase curve (either time direction), in the opposite half-plane, at `a < 0`
/// and inside the separatrix region: `alpha1 < a`, `0 < g1 < upper(a)` going
/// up, `lower(a) < g1 < 0` going down.
pub fn continue_branches(init: &AffineState, plan: &BranchPlan, t_end: f64, ctrl: &Control) -> Result<PiecewiseTrajectory, AffineError> {
    let bad = |v| Err(AffineError::InvalidGluing(v));
    if !(init.g1 < 0.0 && init.g2 > init.g1 && init.a < 1.0) {
        return bad(GlueViolation::BadInitialData);
    }
    let qe0 = init.to_qe()?;
    let curve = simulate_qe(qe0, QE_HORIZON, ctrl)?;
    let past = simulate_qe(qe0, -QE_HORIZON, ctrl)?;
    let t_escape = curve.last_t();
    let eps_star = epsilon_floor(&curve);
    let astar = alpha_star(eps_star, ctrl)?;
    let (beta, arcs) = match plan.beta {
        Some(b) if b > 0.0 && b < astar => (b, separatrix_arcs(b, eps_star, ctrl)?),
        Some(_) => return bad(GlueViolation::NoBeta),
        None => {
            // Largest of alpha*/2, alpha*/4, ... whose reverse arc comes back to g1 = 0.
            let mut found = None;
            let mut b = 0.5 * astar;
            for _ in 0..6 {
                if let Ok(arcs) = separatrix_arcs(b, eps_star, ctrl) {
                    found = Some((b, arcs));
                    break;
                }
                b *= 0.5;
            }
            match found {
                Some(f) => f,
                None => return bad(GlueViolation::NoBeta),
            }
        }
    };
    let inside = |s: &AffineState| -> bool {
        if !(s.a < 0.0) {
            return false;
        }
        if s.g1 > 0.0 {
            s.a > arcs.alpha1 && arcs.upper.at(s.a).map_or(false, |h| s.g1 < h)
        } else {
            arcs.lower.at(s.a).map_or(false, |g| s.g1 > g)
        }
    };

    let mut pieces = Vec::new();
    let mut t = 0.0;
    let mut state = *init;
    let mut piece = 0usize;
    loop {
        let run = simulate_affine(Closure::Two, &state, t_end - t + 2.0 * t_escape, ctrl)?;
        let dur = match run.outcome {
            AffineOutcome::ClassicalEnd { t, .. } => t,
            _ => return bad(GlueViolation::PieceDidNotEnd { piece }),
        };
        pieces.push(Piece { t_start: t, t_end: t + dur, trajectory: run.trajectory });
        t += dur;
        if t >= t_end {
            break;
        }
        piece += 1;
        let rule = if plan.repeat && !plan.rules.is_empty() {
            plan.rules[(piece - 1) % plan.rules.len()]
        } else if piece - 1 < plan.rules.len() {
            plan.rules[piece - 1]
        } else {
            break;
        };
        let next = match rule {
            GlueRule::Initial => *init,
            GlueRule::OnCurve { tau, gamma1 } => {
                if !(tau > past.last_t() && tau < t_escape) || gamma1 == 0.0 {
                    return bad(GlueViolation::OffCurve { piece });
                }
                let src = if tau >= 0.0 { &curve } else { &past };
                let y = src.evaluate_dense(tau).map_err(AffineError::Ode)?;
                AffineState::from_qe(ChartQE { q: y[0], eps: y[1] }, gamma1)
            }
            GlueRule::Explicit(s) => {
                let c = s.to_qe()?;
                if curve_distance(&curve, c).min(curve_distance(&past, c)) > ON_CURVE_TOL {
                    return bad(GlueViolation::OffCurve { piece });
                }
                s
            }
        };
        if (next.g1 > 0.0) == (state.g1 > 0.0) {
            return bad(GlueViolation::SameHalfPlane { piece });
        }
        if !inside(&next) {
            return bad(GlueViolation::OutsideSeparatrix { piece });
        }
        state = next;
    }
    Ok(PiecewiseTrajectory { pieces, eps_star, alpha_star: astar, beta, t_escape })
}

/// Third coordinate of a sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Friction value `eps*`; closure-1-with-friction runs.
    EpsStar,
    /// Initial `g2`; closure-2 runs.
    Gamma20,
}

/// Outcome class of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Bounded to the horizon.
    Smooth,
    /// Finite-time escape of `(a, g1)`.
    BlowUp,
    /// Closure 2 only: `g1` reached 0 first.
    ClassicalEnd,
    /// Invalid data or integrator failure.
    Error,
}

impl Verdict {
    /// Table label.
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Smooth => "smooth",
            Verdict::BlowUp => "blow_up",
            Verdict::ClassicalEnd => "classical_end_at_γ1=0",
            Verdict::Error => "error",
        }
    }
}

/// Classifies one set of initial data.
pub fn classify_point(a0: f64, g10: f64, third: f64, mode: SweepMode, horizon: f64, ctrl: &Control) -> Verdict {
    if !(a0 < 1.0) || !(a0.is_finite() && g10.is_finite() && third.is_finite()) {
        return Verdict::Error;
    }
    match mode {
        SweepMode::EpsStar => {
            if third < 0.0 {
                return Verdict::Error;
            }
            match ages_smooth(a0, g10, third, horizon, ctrl) {
                Ok(true) => Verdict::Smooth,
                Ok(false) => Verdict::BlowUp,
                Err(_) => Verdict::Error,
            }
        }
        SweepMode::Gamma20 => {
            let Ok(s) = AffineState::new(a0, g10, third) else { return Verdict::Error };
            match simulate_affine(Closure::Two, &s, horizon, ctrl) {
                Ok(r) => match r.outcome {
                    AffineOutcome::Bounded => Verdict::Smooth,
                    AffineOutcome::BlowUp { .. } => Verdict::BlowUp,
                    AffineOutcome::ClassicalEnd { .. } => Verdict::ClassicalEnd,
                },
                Err(_) => Verdict::Error,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    #[test]
    fn right_hand_sides() {
        assert_eq!(rhs_ag(0.0, 0.0), [0.0, 0.0]);
        assert_eq!(rhs_ag(0.5, 0.0), [0.0, -0.5]);
        assert_eq!(rhs_ag(0.0, 1.0), [1.0, -1.0]);

        let d = rhs_agg(&AffineState::closure1(0.3, -0.2)).unwrap();
        assert!(close(d[0], -0.14, 1e-15) && close(d[1], -0.34, 1e-15) && close(d[2], -0.34, 1e-15));
        let d = rhs_agg(&AffineState::new(0.5, -0.1, 0.0).unwrap()).unwrap();
        assert!(close(d[0], -0.05, 1e-15) && close(d[1], -0.49, 1e-15) && close(d[2], -1.0, 1e-15));
        assert_eq!(rhs_agg(&AffineState::new(0.2, 0.0, 0.1).unwrap()), Err(AffineError::GammaOneZero));

        assert_eq!(rhs_qe(ChartQE { q: 0.0, eps: 0.0 }), [1.0, 0.0]);
        assert_eq!(rhs_qe(ChartQE { q: 1.0, eps: 1.0 }), [4.0, 0.0]);
        assert_eq!(rhs_qe(ChartQE { q: -1.0, eps: 0.5 }), [1.0, -0.75]);

        for &(a, g) in &[(0.3, -0.7), (-2.0, 1.5), (0.9, 0.0)] {
            assert_eq!(rhs_ages(a, g, 0.0), rhs_ag(a, g));
        }
        assert_eq!(rhs_ages(0.0, -1.0, 1.0), [-1.0, 1.0]);
        let d = rhs_ages(0.5, 0.2, 0.5);
        assert!(close(d[0], 0.1, 1e-15) && close(d[1], -0.74, 1e-15));
    }

    #[test]
    fn closure1_criterion_and_integral() {
        assert_eq!(criterion_closure1(0.0, 0.0), Criterion::GloballySmooth);
        assert_eq!(criterion_closure1(0.5, 0.0), Criterion::Boundary);
        assert_eq!(criterion_closure1(0.6, 0.0), Criterion::BlowUp);
        assert_eq!(first_integral_ag(0.0, 0.0), 1.0);
        assert_eq!(first_integral_ag(0.5, 0.0), 0.0);
    }

    #[test]
    fn integral_conserved_on_closure1_run() {
        let run = simulate_affine(Closure::One, &AffineState::closure1(0.3, 0.2), 10.0, &Control::default()).unwrap();
        let c0 = first_integral_ag(0.3, 0.2);
        let drift = run.trajectory.states().iter().map(|y| (first_integral_ag(y[0], y[1]) - c0).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-7, "drift {drift}");
    }

    #[test]
    fn closure1_blowup_and_ellipse() {
        let ctrl = Control::default();
        let r = simulate_affine(Closure::One, &AffineState::closure1(0.6, 0.0), 2.0 * PI, &ctrl).unwrap();
        assert!(matches!(r.outcome, AffineOutcome::BlowUp { t } if t < 2.0 * PI));
        let r = simulate_affine(Closure::One, &AffineState::closure1(0.3, 0.0), 2.0 * PI, &ctrl).unwrap();
        assert_eq!(r.outcome, AffineOutcome::Bounded);
        assert!(first_integral_ag(0.3, 0.0) > 0.0);
    }

    #[test]
    fn ordering_rejected() {
        assert_eq!(AffineState::new(0.1, 0.2, 0.1), Err(AffineError::Ordering { g1: 0.2, g2: 0.1 }));
        let s = AffineState { a: 0.1, g1: 0.2, g2: 0.1 };
        assert!(matches!(simulate_affine(Closure::Two, &s, 1.0, &Control::default()), Err(AffineError::Ordering { .. })));
    }

    #[test]
    fn eps_floor_cases() {
        let ctrl = Control::default();
        let tr = simulate_qe(ChartQE { q: 0.5, eps: 0.5 }, 10.0, &ctrl).unwrap();
        assert_eq!(epsilon_floor(&tr), 0.5);
        let tr = simulate_qe(ChartQE { q: 0.0, eps: 0.0 }, 10.0, &ctrl).unwrap();
        assert_eq!(epsilon_floor(&tr), 0.0);
        let tr = simulate_qe(ChartQE { q: -1.0, eps: 1.0 }, 10.0, &ctrl).unwrap();
        let first = tr.events().iter().find(|e| e.index == 0).unwrap();
        assert!((epsilon_floor(&tr) - first.y[1]).abs() < 1e-12);
        assert!(epsilon_floor(&tr) > 0.0 && epsilon_floor(&tr) < 1.0);
    }

    #[test]
    fn alpha_star_values() {
        let ctrl = Control::default();
        assert!((alpha_star(0.0, &ctrl).unwrap() - 0.5).abs() < 1e-5);
        let a05 = alpha_star(0.5, &ctrl).unwrap();
        let a2 = alpha_star(2.0, &ctrl).unwrap();
        assert!(a05 > 0.5 && a05 < 1.0);
        assert!(a2 > a05 && a2 < 1.0);
    }

    #[test]
    fn convexity_locus_is_polynomial() {
        assert_eq!(convexity_locus(0.0, 0.0), 1.0);
        assert_eq!(convexity_locus(-1.0, 1.0), 4.0 - 1.0 - 6.0 + 1.0 + 3.0 + 1.0 + 6.0);
    }

    #[test]
    fn verdict_labels() {
        let ctrl = Control::default();
        assert_eq!(classify_point(0.0, 0.0, 0.0, SweepMode::EpsStar, 8.0 * PI, &ctrl), Verdict::Smooth);
        assert_eq!(classify_point(0.9, 0.5, 0.0, SweepMode::EpsStar, 8.0 * PI, &ctrl), Verdict::BlowUp);
        assert_eq!(classify_point(1.0, 0.0, 0.0, SweepMode::EpsStar, 8.0 * PI, &ctrl), Verdict::Error);
        assert_eq!(classify_point(0.2, 0.0, 0.5, SweepMode::Gamma20, 8.0 * PI, &ctrl), Verdict::Error);
        assert_eq!(Verdict::ClassicalEnd.label(), "classical_end_at_γ1=0");
    }

    #[test]
    fn branch_continuation() {
        let ctrl = Control::default();
        let init = AffineState::new(-0.1, -0.3, -0.15).unwrap();
        let p = continue_branches(&init, &BranchPlan::periodic(-0.377, 0.05), 8.0, &ctrl).unwrap();
        assert!(p.pieces.len() >= 4);
        assert!(p.beta > 0.0 && p.beta < p.alpha_star);
        let period = p.pieces[1].t_end;
        let x = p.evaluate(0.3).unwrap();
        let y = p.evaluate(0.3 + period).unwrap();
        assert!((x[0] - y[0]).abs() < 1e-9 && (x[1] - y[1]).abs() < 1e-9);
        assert!(p.pieces[1].trajectory.states()[0][1] > 0.0);

        let same_side = BranchPlan { beta: None, rules: vec![GlueRule::Initial], repeat: false };
        assert_eq!(
            continue_branches(&init, &same_side, 8.0, &ctrl).unwrap_err(),
            AffineError::InvalidGluing(GlueViolation::SameHalfPlane { piece: 1 })
        );
        let off = BranchPlan { beta: None, rules: vec![GlueRule::Explicit(AffineState::new(-0.1, 0.3, 0.5).unwrap())], repeat: false };
        assert_eq!(
            continue_branches(&init, &off, 8.0, &ctrl).unwrap_err(),
            AffineError::InvalidGluing(GlueViolation::OffCurve { piece: 1 })
        );
        let upper_positive_a = BranchPlan::periodic(0.0, 0.05);
        assert_eq!(
            continue_branches(&init, &upper_positive_a, 8.0, &ctrl).unwrap_err(),
            AffineError::InvalidGluing(GlueViolation::OutsideSeparatrix { piece: 1 })
        );
        assert_eq!(
            continue_branches(&AffineState::new(-0.1, 0.3, 0.5).unwrap(), &upper_positive_a, 8.0, &ctrl).unwrap_err(),
            AffineError::InvalidGluing(GlueViolation::BadInitialData)
        );
    }
}
