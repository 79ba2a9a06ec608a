//! Finite-volume solver for the closed moment systems in one space dimension.
//!
//! The state per cell is `(Ecal, M_0, M_1)` for closure 1 and
//! `(Ecal, M_0, M_1, M_2)` for closure 2, with `Ecal = E M_0`. One step is a
//! Strang splitting: half a source step, a local Lax-Friedrichs step for the
//! fluxes, half a source step. The source system is solved exactly: it rotates
//! `(Ecal, M_1)` and moves `M_2` by `(M_1^2 - M_1_old^2) / M_0`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::affine::Closure;
use crate::num::{abs, cos, hypot, sin};

/// Failures of the field solver.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldError {
    /// Fewer than 8 cells or an empty domain.
    BadGrid,
    /// CFL number outside `(0, 1)` or bad thresholds.
    BadConfig,
    /// `M_0 <= 0` in the initial data.
    NonPositiveDensity {
        /// Cell index.
        cell: usize,
    },
    /// `M_1 = 0` in a cell where the closure-2 flux is needed.
    ZeroM1 {
        /// Cell index.
        cell: usize,
        /// Time.
        t: f64,
    },
    /// The blow-up detector fired.
    CellBlowUp {
        /// Cell index.
        cell: usize,
        /// Time after the offending step.
        t: f64,
        /// Which check fired.
        reason: BlowUpReason,
    },
    /// The time step collapsed below `1e-14`.
    StepCollapse {
        /// Time.
        t: f64,
    },
}

/// Which blow-up check fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowUpReason {
    /// A cell value exceeded the value threshold or is not finite.
    Value,
    /// `|dU_1/dx|` exceeded the gradient threshold.
    Gradient,
    /// One cell jump of `U_1` carries too large a fraction of the `U_1` range.
    JumpFraction,
    /// `M_0` left the positive axis.
    Density,
}

impl BlowUpReason {
    /// Short tag for reports.
    pub fn label(&self) -> &'static str {
        match self {
            BlowUpReason::Value => "value",
            BlowUpReason::Gradient => "gradient",
            BlowUpReason::JumpFraction => "jump_fraction",
            BlowUpReason::Density => "density",
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::BadGrid => write!(f, "grid needs at least 8 cells and x_hi > x_lo"),
            FieldError::BadConfig => write!(f, "invalid solver configuration"),
            FieldError::NonPositiveDensity { cell } => write!(f, "M0 <= 0 in cell {cell}"),
            FieldError::ZeroM1 { cell, t } => write!(f, "M1 = 0 in cell {cell} at t = {t}"),
            FieldError::CellBlowUp { cell, t, reason } => write!(f, "blow-up ({}) in cell {cell} at t = {t}", reason.label()),
            FieldError::StepCollapse { t } => write!(f, "time step collapsed at t = {t}"),
        }
    }
}

impl core::error::Error for FieldError {}

/// Boundary treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Periodic wrap.
    Periodic,
    /// Zero-gradient ghost cells.
    Outflow,
}

/// Uniform grid of `n` cells on `[x_lo, x_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    x_lo: f64,
    x_hi: f64,
    boundary: Boundary,
}

impl Grid1D {
    /// Checked constructor.
    pub fn new(n: usize, x_lo: f64, x_hi: f64, boundary: Boundary) -> Result<Self, FieldError> {
        if n < 8 || !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(FieldError::BadGrid);
        }
        Ok(Grid1D { n, x_lo, x_hi, boundary })
    }

    /// Number of cells.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cell width.
    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n as f64
    }

    /// Left end of the domain.
    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    /// Right end of the domain.
    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }

    /// Boundary mode.
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Centre of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx()
    }

    /// Neighbour index `i + off`, wrapped or clamped.
    fn neighbour(&self, i: usize, off: isize) -> usize {
        let j = i as isize + off;
        let n = self.n as isize;
        match self.boundary {
            Boundary::Periodic => j.rem_euclid(n) as usize,
            Boundary::Outflow => j.clamp(0, n - 1) as usize,
        }
    }
}

/// Number of state components for a closure.
pub fn width(closure: Closure) -> usize {
    match closure {
        Closure::One => 3,
        Closure::Two => 4,
    }
}

/// Conservative state on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentField {
    closure: Closure,
    grid: Grid1D,
    t: f64,
    cells: Vec<f64>,
}

impl MomentField {
    /// From cell values laid out cell by cell.
    pub fn new(closure: Closure, grid: Grid1D, cells: Vec<f64>) -> Result<Self, FieldError> {
        let w = width(closure);
        if cells.len() != w * grid.n {
            return Err(FieldError::BadGrid);
        }
        for i in 0..grid.n {
            if !(cells[i * w + 1] > 0.0) {
                return Err(FieldError::NonPositiveDensity { cell: i });
            }
        }
        Ok(MomentField { closure, grid, t: 0.0, cells })
    }

    /// Cell averages of `init(x, out)` by 3-point Gauss quadrature.
    pub fn from_fn(closure: Closure, grid: Grid1D, init: impl Fn(f64, &mut [f64])) -> Result<Self, FieldError> {
        let w = width(closure);
        let dx = grid.dx();
        let nodes = [(-0.774_596_669_241_483_4, 5.0 / 18.0), (0.0, 8.0 / 18.0), (0.774_596_669_241_483_4, 5.0 / 18.0)];
        let mut cells = vec![0.0; w * grid.n];
        let mut tmp = vec![0.0; w];
        for i in 0..grid.n {
            let xc = grid.center(i);
            for (z, wt) in nodes {
                init(xc + 0.5 * dx * z, &mut tmp);
                for c in 0..w {
                    cells[i * w + c] += wt * tmp[c];
                }
            }
        }
        MomentField::new(closure, grid, cells)
    }

    /// Closure level.
    pub fn closure(&self) -> Closure {
        self.closure
    }

    /// Grid.
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Current time.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// State of cell `i`.
    pub fn cell(&self, i: usize) -> &[f64] {
        let w = width(self.closure);
        &self.cells[i * w..(i + 1) * w]
    }

    /// All cell values, cell by cell.
    pub fn values(&self) -> &[f64] {
        &self.cells
    }

    /// `sum M_0 dx`.
    pub fn mass(&self) -> f64 {
        let w = width(self.closure);
        self.cells.chunks_exact(w).map(|c| c[1]).sum::<f64>() * self.grid.dx()
    }

    /// `1/2 sum (M_0 U_1 U_2 + E^2) dx`, with `U_2 = U_1` for closure 1.
    pub fn energy(&self) -> f64 {
        let w = width(self.closure);
        let s: f64 = self
            .cells
            .chunks_exact(w)
            .map(|c| {
                let kinetic = match self.closure {
                    Closure::One => c[2] * c[2] / c[1],
                    Closure::Two => c[3],
                };
                let e = c[0] / c[1];
                kinetic + e * e
            })
            .sum();
        0.5 * s * self.grid.dx()
    }

    /// Closure-2 admissibility `M_1^2 <= M_2 M_0` per cell (always true for closure 1).
    pub fn admissible(&self) -> Vec<bool> {
        let w = width(self.closure);
        self.cells
            .chunks_exact(w)
            .map(|c| match self.closure {
                Closure::One => true,
                Closure::Two => c[2] * c[2] <= c[3] * c[1],
            })
            .collect()
    }
}

/// Sine-profile data: `E_0 = A sin x`, `n_0 = 1 - A cos x`, constant velocity `v0`.
///
/// Cell averages of `M_0` and `Ecal = E_0 M_0` are exact; `M_j = v0^j M_0`.
pub fn sine_profile(closure: Closure, grid: Grid1D, amplitude: f64, v0: f64) -> Result<MomentField, FieldError> {
    let w = width(closure);
    let dx = grid.dx();
    let a = amplitude;
    let mut cells = vec![0.0; w * grid.n];
    for i in 0..grid.n {
        let l = grid.x_lo + i as f64 * dx;
        let r = l + dx;
        let m0 = 1.0 - a * (sin(r) - sin(l)) / dx;
        let ecal = a * (cos(l) - cos(r)) / dx - 0.25 * a * a * (cos(2.0 * l) - cos(2.0 * r)) / dx;
        let c = &mut cells[i * w..(i + 1) * w];
        c[0] = ecal;
        c[1] = m0;
        c[2] = v0 * m0;
        if w == 4 {
            c[3] = v0 * v0 * m0;
        }
    }
    MomentField::new(closure, grid, cells)
}

/// Flux and source of one cell.
pub fn flux_and_source(state: &[f64], closure: Closure) -> Result<(Vec<f64>, Vec<f64>), FieldError> {
    let mut f = [0.0; 4];
    let mut s = [0.0; 4];
    cell_flux(state, closure, &mut f).map_err(|_| FieldError::ZeroM1 { cell: 0, t: 0.0 })?;
    let w = width(closure);
    let e = state[0] / state[1];
    s[0] = state[2];
    s[2] = -state[0];
    if w == 4 {
        s[3] = -2.0 * e * state[2];
    }
    Ok((f[..w].to_vec(), s[..w].to_vec()))
}

fn cell_flux(c: &[f64], closure: Closure, f: &mut [f64; 4]) -> Result<(), ()> {
    let u1 = c[2] / c[1];
    f[0] = u1 * c[0];
    f[1] = c[2];
    match closure {
        Closure::One => {
            f[2] = c[2] * u1;
        }
        Closure::Two => {
            if c[2] == 0.0 {
                return Err(());
            }
            f[2] = c[3];
            f[3] = c[3] * c[3] / c[2];
        }
    }
    Ok(())
}

fn cell_speed(c: &[f64], closure: Closure) -> f64 {
    let u1 = abs(c[2] / c[1]);
    match closure {
        Closure::One => u1,
        Closure::Two => {
            let u2 = abs(c[3] / c[2]);
            if u2.is_finite() { u1.max(u2) } else { u1 }
        }
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// CFL number in `(0, 1)`.
    pub cfl: f64,
    /// Upper bound on the time step.
    pub max_dt: f64,
    /// Threshold on `|value|`.
    pub value_limit: f64,
    /// Threshold on `|dU_1/dx|`.
    pub gradient_limit: f64,
    /// Largest allowed `max |dU_1| / (max U_1 - min U_1)`; `None` disables the check.
    pub jump_fraction: Option<f64>,
    /// Conservation report period in steps.
    pub report_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl: 0.45,
            max_dt: f64::INFINITY,
            value_limit: 1e6,
            gradient_limit: 1e5,
            jump_fraction: Some(0.1),
            report_every: 10,
        }
    }
}

impl SolverConfig {
    fn check(&self) -> Result<(), FieldError> {
        let ok = self.cfl > 0.0
            && self.cfl < 1.0
            && self.max_dt > 0.0
            && self.value_limit > 0.0
            && self.gradient_limit > 0.0
            && self.jump_fraction.map_or(true, |f| f > 0.0)
            && self.report_every > 0;
        if ok { Ok(()) } else { Err(FieldError::BadConfig) }
    }
}

fn source_step(cells: &mut [f64], closure: Closure, dt: f64) {
    let w = width(closure);
    let (s, c) = (sin(dt), cos(dt));
    for cell in cells.chunks_exact_mut(w) {
        let (e, m1) = (cell[0], cell[2]);
        let m1n = -e * s + m1 * c;
        cell[0] = e * c + m1 * s;
        cell[2] = m1n;
        if w == 4 {
            cell[3] += (m1n * m1n - m1 * m1) / cell[1];
        }
    }
}

fn is_uniform(cells: &[f64], w: usize) -> bool {
    let first = &cells[..w];
    cells.chunks_exact(w).all(|c| c.iter().zip(first).all(|(a, b)| a.to_bits() == b.to_bits()))
}

fn hyperbolic_step(field: &mut MomentField, dt: f64) -> Result<(), FieldError> {
    let closure = field.closure;
    let w = width(closure);
    let n = field.grid.n;
    let grid = field.grid;
    let cells = &field.cells;
    let mut flux = vec![0.0; 4 * n];
    let mut speed = vec![0.0; n];
    for i in 0..n {
        let c = &cells[i * w..(i + 1) * w];
        let mut f = [0.0; 4];
        cell_flux(c, closure, &mut f).map_err(|_| FieldError::ZeroM1 { cell: i, t: field.t })?;
        flux[4 * i..4 * i + 4].copy_from_slice(&f);
        speed[i] = cell_speed(c, closure);
    }
    // Interface i sits between cells i - 1 and i; n + 1 interfaces.
    let mut iface = vec![0.0; 4 * (n + 1)];
    for k in 0..=n {
        let (l, r) = match grid.boundary {
            Boundary::Periodic => ((k + n - 1) % n, k % n),
            Boundary::Outflow => (k.saturating_sub(1), k.min(n - 1)),
        };
        let a = speed[l].max(speed[r]);
        for c in 0..w {
            iface[4 * k + c] = 0.5 * (flux[4 * l + c] + flux[4 * r + c]) - 0.5 * a * (cells[r * w + c] - cells[l * w + c]);
        }
    }
    let lam = dt / grid.dx();
    for i in 0..n {
        for c in 0..w {
            field.cells[i * w + c] -= lam * (iface[4 * (i + 1) + c] - iface[4 * i + c]);
        }
    }
    Ok(())
}

fn detect_blow_up(field: &MomentField, cfg: &SolverConfig) -> Option<(usize, BlowUpReason)> {
    let w = width(field.closure);
    let n = field.grid.n;
    for i in 0..n {
        let c = field.cell(i);
        if c.iter().any(|v| !(abs(*v) <= cfg.value_limit)) {
            return Some((i, BlowUpReason::Value));
        }
        if !(c[1] > 0.0) {
            return Some((i, BlowUpReason::Density));
        }
    }
    let u1 = |i: usize| field.cells[i * w + 2] / field.cells[i * w + 1];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut worst = (0usize, 0.0f64);
    let last = match field.grid.boundary {
        Boundary::Periodic => n,
        Boundary::Outflow => n - 1,
    };
    for i in 0..n {
        let v = u1(i);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    for i in 0..last {
        let j = field.grid.neighbour(i, 1);
        let d = abs(u1(j) - u1(i));
        if d > worst.1 {
            worst = (i, d);
        }
    }
    if worst.1 / field.grid.dx() > cfg.gradient_limit {
        return Some((worst.0, BlowUpReason::Gradient));
    }
    if let Some(frac) = cfg.jump_fraction {
        let range = hi - lo;
        if range > JUMP_RANGE_FLOOR * (1.0 + abs(hi).max(abs(lo))) && worst.1 > frac * range {
            return Some((worst.0, BlowUpReason::JumpFraction));
        }
    }
    None
}

/// Below this `U_1` range (relative) the jump-fraction check is off.
pub const JUMP_RANGE_FLOOR: f64 = 1e-8;

/// Advances `field` by one Strang step, never past `t_end`. Returns the step size.
pub fn step(field: &mut MomentField, cfg: &SolverConfig, t_end: f64) -> Result<f64, FieldError> {
    cfg.check()?;
    let w = width(field.closure);
    let remaining = t_end - field.t;
    if !(remaining > 0.0) {
        return Ok(0.0);
    }
    let uniform = is_uniform(&field.cells, w);
    let dx = field.grid.dx();
    // The source step rotates (Ecal, M_1), so |U_1| stays below hypot(E, U_1)
    // for the whole step.
    let amax = field
        .cells
        .chunks_exact(w)
        .map(|c| {
            let a = hypot(c[0] / c[1], c[2] / c[1]);
            if uniform { a } else { a.max(cell_speed(c, field.closure)) }
        })
        .fold(0.0, f64::max);
    let dt_cfl = if amax > 0.0 { cfg.cfl * dx / amax } else { cfg.cfl * dx };
    if !(dt_cfl > 1e-14) {
        return Err(FieldError::StepCollapse { t: field.t });
    }
    let mut dt = cfg.max_dt.min(dt_cfl);
    dt = dt.min(remaining);
    if field.closure == Closure::Two && !uniform {
        if let Some(i) = field.cells.chunks_exact(w).position(|c| c[2] == 0.0) {
            return Err(FieldError::ZeroM1 { cell: i, t: field.t });
        }
    }
    source_step(&mut field.cells, field.closure, 0.5 * dt);
    // The flux divergence of a bitwise-uniform field is exactly zero.
    if !uniform {
        hyperbolic_step(field, dt)?;
    }
    source_step(&mut field.cells, field.closure, 0.5 * dt);
    field.t = if remaining == dt { t_end } else { field.t + dt };
    if let Some((cell, reason)) = detect_blow_up(field, cfg) {
        return Err(FieldError::CellBlowUp { cell, t: field.t, reason });
    }
    Ok(dt)
}

/// Conserved integrals at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationReport {
    /// Step count.
    pub step: usize,
    /// Time.
    pub t: f64,
    /// `sum M_0 dx`.
    pub mass: f64,
    /// Energy integral.
    pub energy: f64,
    /// `mass - mass(0)`.
    pub mass_drift: f64,
    /// `energy - energy(0)`.
    pub energy_drift: f64,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldOutcome {
    /// Reached `t_end`.
    Completed,
    /// Blow-up detected; the field is the state after the offending step.
    BlowUp {
        /// Cell index.
        cell: usize,
        /// Time.
        t: f64,
        /// Check that fired.
        reason: BlowUpReason,
    },
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct FieldRun {
    /// Final field.
    pub field: MomentField,
    /// Reports every `report_every` steps, plus the first and last.
    pub reports: Vec<ConservationReport>,
    /// Termination.
    pub outcome: FieldOutcome,
    /// Steps taken.
    pub steps: usize,
}

impl FieldRun {
    /// Largest `|mass drift|` over the reports.
    pub fn max_mass_drift(&self) -> f64 {
        self.reports.iter().map(|r| abs(r.mass_drift)).fold(0.0, f64::max)
    }

    /// Largest `|energy drift|` over the reports.
    pub fn max_energy_drift(&self) -> f64 {
        self.reports.iter().map(|r| abs(r.energy_drift)).fold(0.0, f64::max)
    }
}

/// Steps `init` to `t_end` or until blow-up.
pub fn run(init: MomentField, t_end: f64, cfg: &SolverConfig) -> Result<FieldRun, FieldError> {
    cfg.check()?;
    let mut field = init;
    let (m0, e0) = (field.mass(), field.energy());
    let report = |f: &MomentField, step: usize| {
        let (m, e) = (f.mass(), f.energy());
        ConservationReport { step, t: f.t, mass: m, energy: e, mass_drift: m - m0, energy_drift: e - e0 }
    };
    let mut reports = vec![report(&field, 0)];
    let mut steps = 0;
    let mut outcome = FieldOutcome::Completed;
    while field.t < t_end {
        match step(&mut field, cfg, t_end) {
            Ok(_) => {}
            Err(FieldError::CellBlowUp { cell, t, reason }) => {
                steps += 1;
                outcome = FieldOutcome::BlowUp { cell, t, reason };
                break;
            }
            Err(e) => return Err(e),
        }
        steps += 1;
        if steps % cfg.report_every == 0 {
            reports.push(report(&field, steps));
        }
    }
    if reports.last().map(|r| r.step) != Some(steps) {
        reports.push(report(&field, steps));
    }
    Ok(FieldRun { field, reports, outcome, steps })
}

/// Physical variables of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalCell {
    /// Cell centre.
    pub x: f64,
    /// `Ecal / M_0`.
    pub e: f64,
    /// `M_0`.
    pub n: f64,
    /// `M_1 / M_0`.
    pub u1: f64,
    /// `M_2 / M_1` (closure 2, `None` where `M_1 = 0`; `U_1` for closure 1).
    pub u2: Option<f64>,
    /// `|M_0 - (1 - E_x)|` with a central difference for `E_x`.
    pub consistency: f64,
}

/// Per-cell physical variables.
pub fn derive_physical(field: &MomentField) -> Vec<PhysicalCell> {
    let g = &field.grid;
    let e = |i: usize| field.cell(i)[0] / field.cell(i)[1];
    (0..g.n)
        .map(|i| {
            let c = field.cell(i);
            let (l, r) = (g.neighbour(i, -1), g.neighbour(i, 1));
            let ex = (e(r) - e(l)) / (((r as isize - l as isize).rem_euclid(g.n as isize)).max(1) as f64 * g.dx());
            let ex = match g.boundary {
                Boundary::Periodic => (e(r) - e(l)) / (2.0 * g.dx()),
                Boundary::Outflow => ex,
            };
            let u2 = match field.closure {
                Closure::One => Some(c[2] / c[1]),
                Closure::Two => (c[2] != 0.0).then(|| c[3] / c[2]),
            };
            PhysicalCell { x: g.center(i), e: c[0] / c[1], n: c[1], u1: c[2] / c[1], u2, consistency: abs(c[1] - (1.0 - ex)) }
        })
        .collect()
}

/// Mean and max of the Gauss-law residual `|M_0 - (1 - E_x)|`.
///
/// The max norm does not shrink under refinement: at stagnation points the
/// local speed bound vanishes and a few-cell spike of fixed height remains.
/// The mean converges at first order.
pub fn consistency_norms(cells: &[PhysicalCell]) -> (f64, f64) {
    let n = cells.len().max(1) as f64;
    let mean = cells.iter().map(|c| c.consistency).sum::<f64>() / n;
    let max = cells.iter().map(|c| c.consistency).fold(0.0, f64::max);
    (mean, max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(n, 0.0, 2.0 * PI, Boundary::Periodic).unwrap()
    }

    #[test]
    fn flux_examples() {
        let (f, s) = flux_and_source(&[0.0, 1.0, 0.0], Closure::One).unwrap();
        assert!(f.iter().chain(&s).all(|v| *v == 0.0));
        let (f, s) = flux_and_source(&[0.0, 1.0, 1.0, 1.0], Closure::Two).unwrap();
        assert_eq!(f, vec![0.0, 1.0, 1.0, 1.0]);
        assert_eq!(s, vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(flux_and_source(&[0.3, 1.0, 0.0, 1.0], Closure::Two), Err(FieldError::ZeroM1 { .. })));
    }

    #[test]
    fn grid_checks() {
        assert_eq!(Grid1D::new(7, 0.0, 1.0, Boundary::Periodic), Err(FieldError::BadGrid));
        assert!((grid(16).dx() - PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let g = grid(32);
        let mut f = MomentField::from_fn(Closure::One, g, |_, s| s.copy_from_slice(&[0.0, 1.0, 0.0])).unwrap();
        let cfg = SolverConfig::default();
        for _ in 0..1000 {
            step(&mut f, &cfg, f64::INFINITY).unwrap();
        }
        for i in 0..32 {
            let c = f.cell(i);
            assert!(c[0].abs() <= 1e-13 && (c[1] - 1.0).abs() <= 1e-13 && c[2].abs() <= 1e-13);
        }
    }

    #[test]
    fn uniform_oscillation_closure2() {
        let g = grid(8);
        let (c1, m0, c2) = (0.4, 1.5, 0.7);
        let m2 = c1 * c1 / (2.0 * m0) + c2;
        let f = MomentField::from_fn(Closure::Two, g, |_, s| s.copy_from_slice(&[c1, m0, 0.0, m2])).unwrap();
        let cfg = SolverConfig { max_dt: 1e-3, ..Default::default() };
        let r = run(f, PI, &cfg);
        let r = r.unwrap_or_else(|e| panic!("{e:?}"));
        let c = r.field.cell(3);
        assert!((c[0] - c1 * PI.cos()).abs() < 1e-12);
        assert!((c[2] + c1 * PI.sin()).abs() < 1e-12);
        assert!((c[3] - (c1 * c1 / (2.0 * m0) * (2.0 * PI).cos() + c2)).abs() < 1e-12);
    }

    #[test]
    fn sine_profile_cell_averages() {
        let f = sine_profile(Closure::One, grid(64), 0.3, 0.0).unwrap();
        assert!((f.mass() - 2.0 * PI).abs() < 1e-12);
        let phys = derive_physical(&f);
        assert!(phys.iter().all(|p| p.consistency < 1e-2));
    }

    #[test]
    fn closure2_halts_on_zero_m1() {
        let f = sine_profile(Closure::Two, grid(16), 0.3, 0.0).unwrap();
        let mut g = f.clone();
        assert!(matches!(step(&mut g, &SolverConfig::default(), 1.0), Err(FieldError::ZeroM1 { .. })));
    }
}
