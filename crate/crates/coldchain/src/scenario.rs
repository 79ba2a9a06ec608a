//! Validated scenario descriptions.

use coldchain_core::affine::{AffineState, ChartQE, Closure, SweepMode};
use coldchain_core::field::{Boundary, SolverConfig};
use coldchain_core::wave::WaveState;

/// One scenario file after validation.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    /// Output stem.
    pub name: String,
    /// Relative tolerance from the file (`--tol` wins).
    pub tol: Option<f64>,
    /// What to run.
    pub scenario: Scenario,
    /// The parsed file, echoed into the summary.
    pub echo: serde_json::Value,
}

impl ScenarioFile {
    /// `affine`, `twave`, `field` or `sweep`.
    pub fn kind(&self) -> &'static str {
        match self.scenario {
            Scenario::Affine(_) => "affine",
            Scenario::Wave(_) => "twave",
            Scenario::Field(_) => "field",
            Scenario::Sweep(_) => "sweep",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Scenario {
    Affine(AffineScenario),
    Wave(WaveScenario),
    Field(FieldScenario),
    Sweep(SweepScenario),
}

#[derive(Debug, Clone)]
pub struct AffineScenario {
    pub task: AffineTask,
    /// Rows per trajectory on a uniform time grid; 0 writes the integrator steps.
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub enum AffineTask {
    /// One run of the closure-1 or closure-2 slopes.
    Simulate { closure: Closure, init: AffineState, t_end: f64 },
    /// Closure 1 from `(a0, g10)` against closure 2 from `(a0, g10, g20)`.
    Compare { init: AffineState, t_end: f64 },
    /// `(q, eps)` phase curves traced both ways from each start.
    Phase { starts: Vec<ChartQE>, t_span: f64 },
    /// Periodic continuations, one per upper `gamma1`.
    Continue { init: AffineState, tau: f64, gamma1: Vec<f64>, beta: Option<f64>, t_end: f64 },
}

#[derive(Debug, Clone)]
pub struct WaveScenario {
    pub task: WaveTask,
    /// Row cap for closure-2 profiles.
    pub max_rows: usize,
}

#[derive(Debug, Clone)]
pub enum WaveTask {
    Closure1 { w: f64, e0: f64, u10: f64, xi: (f64, f64), samples: usize },
    /// `compare` holds `U1(0)` of the closure-1 wave to overlay, if any.
    Closure2 { w: f64, init: WaveState, compare: Option<f64> },
    /// `(U1, U2)` projections for several starts with `E(0) = 0`.
    Plane { w: f64, starts: Vec<(f64, f64)> },
}

#[derive(Debug, Clone)]
pub struct FieldScenario {
    pub closure: Closure,
    pub n: usize,
    pub x: (f64, f64),
    pub boundary: Boundary,
    pub init: FieldInit,
    pub t_end: f64,
    pub solver: SolverConfig,
    /// Intermediate profile dumps at equally spaced times.
    pub snapshots: usize,
}

#[derive(Debug, Clone)]
pub enum FieldInit {
    /// Several amplitudes make a family run with one summary row each.
    Sine { amplitudes: Vec<f64>, v0: f64 },
    Uniform { e: f64, m0: f64, m1: f64, m2: Option<f64> },
}

/// `n` equally spaced values on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => vec![self.lo],
            n => (0..n).map(|i| if i + 1 == n { self.hi } else { self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64 }).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepScenario {
    pub mode: SweepMode,
    pub a0: Axis,
    pub g10: Axis,
    /// `eps*` or `g20`, by mode.
    pub third: Axis,
    pub horizon: f64,
}
