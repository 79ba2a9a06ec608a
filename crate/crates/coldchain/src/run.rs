//! Scenario execution.
//!
//! Running produces a [`RunSummary`] and the artifact texts in memory;
//! writing them out is a separate step so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use coldchain_core::affine::*;
use coldchain_core::field::{self, BlowUpReason, FieldOutcome, FieldRun, Grid1D, MomentField};
use coldchain_core::odeint::{Control, Trajectory};
use coldchain_core::wave::*;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ConfigError;
use crate::output::{decimate, decimate_path, write_all, Artifact, Csv};
use crate::scenario::*;
use crate::sweep::{run_sweep, sweep_table};

/// What a run reports besides its data files.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunSummary {
    pub scenario: String,
    pub kind: String,
    /// The scenario file as parsed.
    pub config: Value,
    /// Relative tolerance used by the ODE integrator.
    pub tol: f64,
    pub termination: String,
    pub scalars: BTreeMap<String, Value>,
    pub artifacts: Vec<String>,
}

/// Summary plus artifacts, not yet written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub artifacts: Vec<Artifact>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid scenario: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 for validation errors, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> RunError {
    RunError::Numerical(e.to_string())
}

/// Run-time options from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Overrides the scenario's `tol`.
    pub tol: Option<f64>,
    /// Sweep worker cap.
    pub threads: Option<usize>,
}

/// Integrator control for a relative tolerance (`atol = tol / 100`).
pub fn control(tol: f64) -> Control {
    Control::with_tol(tol)
}

struct Out {
    termination: String,
    scalars: BTreeMap<String, Value>,
    artifacts: Vec<Artifact>,
}

impl Out {
    fn new(termination: impl Into<String>) -> Self {
        Out { termination: termination.into(), scalars: BTreeMap::new(), artifacts: Vec::new() }
    }

    fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.scalars.insert(key.to_string(), v.into());
    }
}

/// Executes a validated scenario.
pub fn run_scenario(sc: &ScenarioFile, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let tol = opts.tol.or(sc.tol).unwrap_or(Control::default().rtol);
    let ctrl = control(tol);
    let out = match &sc.scenario {
        Scenario::Affine(a) => run_affine(a, &ctrl)?,
        Scenario::Wave(w) => run_wave(w, &ctrl)?,
        Scenario::Field(f) => run_field(f)?,
        Scenario::Sweep(s) => {
            let rows = run_sweep(s, &ctrl, opts.threads);
            let third = match s.mode {
                SweepMode::EpsStar => "eps_star",
                SweepMode::Gamma20 => "g20",
            };
            let mut o = Out::new("completed");
            for v in [Verdict::Smooth, Verdict::BlowUp, Verdict::ClassicalEnd, Verdict::Error] {
                o.set(&format!("count_{}", v.label()), rows.iter().filter(|r| r.verdict == v).count());
            }
            o.set("cells", rows.len());
            o.artifacts.push(Artifact::csv("sweep.csv", sweep_table(&rows, third)));
            o
        }
    };
    let mut artifacts = out.artifacts;
    let summary = RunSummary {
        scenario: sc.name.clone(),
        kind: sc.kind().to_string(),
        config: sc.echo.clone(),
        tol,
        termination: out.termination,
        scalars: out.scalars,
        artifacts: artifacts.iter().map(|a| a.file.clone()).chain(["summary.json".to_string()]).collect(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(numerical)? + "\n";
    artifacts.push(Artifact { file: "summary.json".into(), contents: json });
    Ok(RunOutput { summary, artifacts })
}

/// Runs and writes everything into `dir`.
pub fn run_to_dir(sc: &ScenarioFile, opts: &RunOptions, dir: &Path) -> Result<RunSummary, RunError> {
    let out = run_scenario(sc, opts)?;
    write_all(dir, &out.artifacts)?;
    Ok(out.summary)
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() { json!(x) } else { Value::Null }
}

/// Trajectory rows `t, y...`, either the steps or `samples` uniform times.
fn trajectory_csv(tr: &Trajectory, header: &[&str], samples: usize, t_offset: f64) -> Csv {
    let mut csv = Csv::new(header);
    let mut row = |t: f64, y: &[f64]| {
        let mut r = vec![t + t_offset];
        r.extend_from_slice(y);
        csv.row(&r);
    };
    if samples < 2 {
        for (t, y) in tr.times().iter().zip(tr.states()) {
            row(*t, y);
        }
    } else {
        let (t0, t1) = (tr.times()[0], tr.last_t());
        for i in 0..samples {
            let t = if i + 1 == samples { t1 } else { t0 + (t1 - t0) * i as f64 / (samples - 1) as f64 };
            let y = tr.evaluate_dense(t).expect("inside span");
            row(t, &y);
        }
    }
    csv
}

fn outcome_label(o: &AffineOutcome) -> &'static str {
    match o {
        AffineOutcome::Bounded => "bounded",
        AffineOutcome::BlowUp { .. } => "blow_up",
        AffineOutcome::ClassicalEnd { .. } => "classical_end_at_g1=0",
    }
}

fn record_outcome(o: &mut Out, prefix: &str, r: &AffineRun) {
    o.set(&format!("{prefix}outcome"), outcome_label(&r.outcome));
    o.set(&format!("{prefix}t_last"), r.trajectory.last_t());
    match r.outcome {
        AffineOutcome::BlowUp { t } => o.set(&format!("{prefix}t_blowup"), t),
        AffineOutcome::ClassicalEnd { t, a, g1, g2 } => {
            o.set(&format!("{prefix}t_classical_end"), t);
            o.set(&format!("{prefix}a_limit"), a);
            o.set(&format!("{prefix}g1_last"), g1);
            o.set(&format!("{prefix}g2_last"), g2);
        }
        AffineOutcome::Bounded => {}
    }
}

fn run_affine(sc: &AffineScenario, ctrl: &Control) -> Result<Out, RunError> {
    match &sc.task {
        AffineTask::Simulate { closure, init, t_end } => {
            let r = simulate_affine(*closure, init, *t_end, ctrl).map_err(numerical)?;
            let mut o = Out::new(outcome_label(&r.outcome));
            record_outcome(&mut o, "", &r);
            let header: &[&str] = match closure {
                Closure::One => {
                    let c0 = first_integral_ag(init.a, init.g1);
                    let drift = r.trajectory.states().iter().map(|y| (first_integral_ag(y[0], y[1]) - c0).abs()).fold(0.0, f64::max);
                    o.set("first_integral", c0);
                    o.set("first_integral_max_drift", drift);
                    let crit = match criterion_closure1(init.a, init.g1) {
                        Criterion::GloballySmooth => "globally_smooth",
                        Criterion::Boundary => "boundary",
                        Criterion::BlowUp => "blow_up",
                    };
                    o.set("criterion", crit);
                    &["t", "a", "g1"]
                }
                Closure::Two => &["t", "a", "g1", "g2"],
            };
            o.artifacts.push(Artifact::csv("trajectory.csv", trajectory_csv(&r.trajectory, header, sc.samples, 0.0)));
            Ok(o)
        }
        AffineTask::Compare { init, t_end } => {
            let one = simulate_affine(Closure::One, &AffineState::closure1(init.a, init.g1), *t_end, ctrl).map_err(numerical)?;
            let two = simulate_affine(Closure::Two, init, *t_end, ctrl).map_err(numerical)?;
            let t_star = match one.outcome {
                AffineOutcome::BlowUp { t } => Some(t),
                _ => None,
            };
            let t1 = match two.outcome {
                AffineOutcome::ClassicalEnd { t, .. } => Some(t),
                _ => None,
            };
            let delayed = matches!((t_star, t1), (Some(a), Some(b)) if a < b);
            let mut o = Out::new(if delayed { "delayed" } else { "not_delayed" });
            record_outcome(&mut o, "closure1_", &one);
            record_outcome(&mut o, "closure2_", &two);
            let eps_star = two.trajectory.states().iter().map(|y| y[2] - y[1]).fold(f64::INFINITY, f64::min);
            o.set("closure2_eps_floor", eps_star);
            if let (Some(a), Some(b)) = (t_star, t1) {
                o.set("delay", b - a);
            }
            o.artifacts.push(Artifact::csv("closure1.csv", trajectory_csv(&one.trajectory, &["t", "a", "g1"], sc.samples, 0.0)));
            o.artifacts.push(Artifact::csv("closure2.csv", trajectory_csv(&two.trajectory, &["t", "a", "g1", "g2"], sc.samples, 0.0)));
            Ok(o)
        }
        AffineTask::Phase { starts, t_span } => {
            let mut o = Out::new("completed");
            let mut floors = Vec::new();
            for (i, c) in starts.iter().enumerate() {
                let fwd = simulate_qe(*c, *t_span, ctrl).map_err(numerical)?;
                let back = simulate_qe(*c, -*t_span, ctrl).map_err(numerical)?;
                let mut csv = Csv::new(&["t", "q", "eps"]);
                let b = trajectory_csv(&back, &["t", "q", "eps"], 0, 0.0);
                let lines: Vec<&str> = b.as_str().lines().skip(1).collect();
                let mut rows: Vec<Vec<f64>> = lines.iter().rev().map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
                rows.pop();
                for (t, y) in fwd.times().iter().zip(fwd.states()) {
                    rows.push(vec![*t, y[0], y[1]]);
                }
                let idx = decimate(rows.len(), if sc.samples >= 2 { sc.samples } else { usize::MAX });
                for k in idx {
                    csv.row(&rows[k]);
                }
                floors.push(json!({
                    "q0": c.q,
                    "eps0": c.eps,
                    "eps_floor_forward": epsilon_floor(&fwd),
                    "t_forward": fwd.last_t(),
                    "t_backward": back.last_t(),
                    "minimum_crossings": fwd.events().len() + back.events().len(),
                }));
                o.artifacts.push(Artifact::csv(format!("qe_{i}.csv"), csv));
            }
            o.set("curves", Value::Array(floors));
            Ok(o)
        }
        AffineTask::Continue { init, tau, gamma1, beta, t_end } => {
            let mut o = Out::new("completed");
            let mut runs = Vec::new();
            for g in gamma1 {
                let mut plan = BranchPlan::periodic(*tau, *g);
                plan.beta = *beta;
                runs.push(continue_branches(init, &plan, *t_end, ctrl).map_err(|e| match e {
                    AffineError::InvalidGluing(v) => numerical(format!("branch plan with gamma1 = {g} rejected: {v:?}")),
                    e => numerical(e),
                })?);
            }
            let first = &runs[0];
            o.set("eps_star", first.eps_star);
            o.set("alpha_star", first.alpha_star);
            o.set("beta", first.beta);
            o.set("t_escape", first.t_escape);
            let mut plans = Vec::new();
            for (k, (g, r)) in gamma1.iter().zip(&runs).enumerate() {
                let period = r.pieces.get(1).map(|p| p.t_end);
                let repeat = period.map(|p| periodic_error(r, p));
                plans.push(json!({
                    "gamma1": g,
                    "pieces": r.pieces.len(),
                    "t_final": r.t_final(),
                    "period": period,
                    "periodic_error": repeat.map(finite_or_null),
                }));
                let mut csv = Csv::new(&["t", "a", "g1", "g2", "piece"]);
                for (j, p) in r.pieces.iter().enumerate() {
                    let body = trajectory_csv(&p.trajectory, &["t", "a", "g1", "g2"], sc.samples, p.t_start);
                    for line in body.as_str().lines().skip(1) {
                        let mut v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
                        v.push(j as f64);
                        csv.row(&v);
                    }
                }
                o.artifacts.push(Artifact::csv(format!("branch_{k}.csv"), csv));
            }
            o.set("plans", Value::Array(plans));
            if runs.len() >= 2 {
                o.set("sup_difference_first_two", sup_difference(&runs[0], &runs[1]));
            }
            Ok(o)
        }
    }
}

/// Largest `|y(t + period) - y(t)|` over one cycle.
pub fn periodic_error(r: &PiecewiseTrajectory, period: f64) -> f64 {
    let n = 2000;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let t = period * i as f64 / n as f64;
        if let (Some(x), Some(y)) = (r.evaluate(t), r.evaluate(t + period)) {
            worst = worst.max((0..3).map(|j| (x[j] - y[j]).abs()).fold(0.0, f64::max));
        }
    }
    worst
}

/// Largest difference of two continuations on their common span.
pub fn sup_difference(a: &PiecewiseTrajectory, b: &PiecewiseTrajectory) -> f64 {
    let n = 4000;
    let t_end = a.t_final().min(b.t_final());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let t = t_end * i as f64 / n as f64;
        if let (Some(x), Some(y)) = (a.evaluate(t), b.evaluate(t)) {
            worst = worst.max((0..3).map(|j| (x[j] - y[j]).abs()).fold(0.0, f64::max));
        }
    }
    worst
}

fn region_label(r: RegionLabel) -> &'static str {
    match r {
        RegionLabel::Region1 => "region1",
        RegionLabel::Region2 => "region2",
        RegionLabel::Region3 => "region3",
        RegionLabel::Invalid => "invalid",
    }
}

fn growth_label(g: Growth) -> &'static str {
    match g {
        Growth::Vanishing => "vanishing",
        Growth::Bounded => "bounded",
        Growth::Unbounded => "unbounded",
    }
}

fn endpoint_json(e: &Endpoint) -> Value {
    json!({
        "xi": e.xi,
        "xi_extrapolated": finite_or_null(e.xi_extrapolated),
        "e": e.state.e,
        "u1": e.state.u1,
        "u2": e.state.u2,
        "distance": e.distance,
        "reason": format!("{:?}", e.reason),
        "derivatives": e.derivatives.iter().map(|d| finite_or_null(*d)).collect::<Vec<_>>(),
        "field": growth_label(e.field),
        "field_slope": growth_label(e.field_slope),
        "velocity_slope": growth_label(e.velocity_slope),
    })
}

fn fit_json(f: &AsymptoticFit) -> Value {
    match f {
        AsymptoticFit::Region1 { quad_coeff, rms } => json!({ "law": "region1", "quad_coeff": quad_coeff, "rms": rms }),
        AsymptoticFit::Region2 { c1, ct1, c2, product, product_variation } => json!({
            "law": "region2", "c1": c1, "ct1": ct1, "c2": c2, "product": product, "product_variation": product_variation
        }),
        AsymptoticFit::Region3 { c1, ct1, c2, rel_residual } => {
            json!({ "law": "region3", "c1": c1, "ct1": ct1, "c2": c2, "rel_residual": rel_residual })
        }
    }
}

/// Rows spread along the profile; the integrator bunches steps at the endpoints.
fn wave_rows(samples: &[WaveSample], max: usize) -> Vec<usize> {
    let col = |f: fn(&WaveSample) -> f64| samples.iter().map(f).collect::<Vec<_>>();
    let (xi, e, u1, u2) = (col(|s| s.xi), col(|s| s.e), col(|s| s.u1), col(|s| s.u2));
    decimate_path(&[&xi, &e, &u1, &u2], max)
}

fn run_wave(sc: &WaveScenario, ctrl: &Control) -> Result<Out, RunError> {
    match &sc.task {
        WaveTask::Closure1 { w, e0, u10, xi, samples } => {
            let p = WaveParams::from_initial(*w, *e0, *u10);
            let grid: Vec<f64> = (0..*samples).map(|i| xi.0 + (xi.1 - xi.0) * i as f64 / (*samples - 1) as f64).collect();
            let prof = wave1_profile(&p, &grid).map_err(numerical)?;
            let mut csv = Csv::new(&["xi", "E", "U1"]);
            let mut drift: f64 = 0.0;
            for s in &prof {
                csv.row(&[s.xi, s.e, s.u1]);
                drift = drift.max((s.e * s.e + s.u1 * s.u1 - p.i0 * p.i0).abs());
            }
            let mut o = Out::new("completed");
            o.set("i0", p.i0);
            o.set("period", wave1_period(*w));
            o.set("invariant_max_drift", drift);
            o.artifacts.push(Artifact::csv("profile.csv", csv));
            Ok(o)
        }
        WaveTask::Closure2 { w, init, compare } => {
            let p = wave2_profile(init, *w, ctrl).map_err(numerical)?;
            let mut o = Out::new("completed");
            o.set("region", region_label(p.region));
            o.set("terminal", json!([p.terminal.0, p.terminal.1]));
            o.set("left", endpoint_json(&p.left));
            o.set("right", endpoint_json(&p.right));
            o.set("support_width", p.right.xi - p.left.xi);
            o.set("samples", p.samples.len());
            match asymptotics_check(&p, p.region) {
                Ok(f) => o.set("asymptotics", fit_json(&f)),
                Err(e) => o.set("asymptotics", json!({ "error": e.to_string() })),
            }
            let d = density_signature(&p);
            o.set(
                "density",
                json!({
                    "kind": format!("{:?}", d.kind),
                    "jump": d.jump,
                    "delta_weight": d.delta_weight,
                    "min_smooth_density": d.min_smooth_density,
                    "velocity_jump": d.velocity_jump,
                }),
            );
            let idx = wave_rows(&p.samples, sc.max_rows);
            let xs: Vec<f64> = idx.iter().map(|&i| p.samples[i].xi).collect();
            let c1 = match compare {
                Some(u) => match wave1_profile(&WaveParams::from_initial(*w, init.e, *u), &xs) {
                    Ok(v) => {
                        o.set("closure1_comparison", json!({ "u10": u, "period": wave1_period(*w) }));
                        Some(v)
                    }
                    Err(e) => {
                        o.set("closure1_comparison", json!({ "u10": u, "error": e.to_string() }));
                        None
                    }
                },
                None => None,
            };
            let mut csv = match c1 {
                Some(_) => Csv::new(&["xi", "E", "U1", "U2", "E_closure1", "U1_closure1"]),
                None => Csv::new(&["xi", "E", "U1", "U2"]),
            };
            for (k, &i) in idx.iter().enumerate() {
                let s = p.samples[i];
                match &c1 {
                    Some(v) => csv.row(&[s.xi, s.e, s.u1, s.u2, v[k].e, v[k].u1]),
                    None => csv.row(&[s.xi, s.e, s.u1, s.u2]),
                }
            }
            o.artifacts.push(Artifact::csv("profile.csv", csv));
            Ok(o)
        }
        WaveTask::Plane { w, starts } => {
            let profiles: Vec<_> = starts
                .par_iter()
                .map(|&(u1, u2)| wave2_profile(&WaveState { e: 0.0, u1, u2 }, *w, ctrl))
                .collect::<Result<_, _>>()
                .map_err(numerical)?;
            let mut o = Out::new("completed");
            let mut list = Vec::new();
            for (i, ((u1, u2), p)) in starts.iter().zip(&profiles).enumerate() {
                list.push(json!({
                    "u10": u1,
                    "u20": u2,
                    "region": region_label(p.region),
                    "xi_left": p.left.xi,
                    "xi_right": p.right.xi,
                    "end_u1": p.right.state.u1,
                    "end_u2": p.right.state.u2,
                }));
                let mut csv = Csv::new(&["xi", "U1", "U2", "E"]);
                for k in wave_rows(&p.samples, sc.max_rows) {
                    let s = p.samples[k];
                    csv.row(&[s.xi, s.u1, s.u2, s.e]);
                }
                o.artifacts.push(Artifact::csv(format!("plane_{i}.csv"), csv));
            }
            o.set("curves", Value::Array(list));
            let pts = singular_points(*w).map_err(numerical)?;
            o.set(
                "singular_points",
                Value::Array(
                    pts.points
                        .iter()
                        .map(|p| json!({ "label": p.label, "u1": p.u1, "u2": p.u2, "kind": format!("{:?}", p.kind) }))
                        .collect(),
                ),
            );
            Ok(o)
        }
    }
}

fn initial_field(sc: &FieldScenario, amplitude: f64) -> Result<MomentField, RunError> {
    let grid = Grid1D::new(sc.n, sc.x.0, sc.x.1, sc.boundary).map_err(numerical)?;
    match &sc.init {
        FieldInit::Sine { v0, .. } => field::sine_profile(sc.closure, grid, amplitude, *v0).map_err(numerical),
        FieldInit::Uniform { e, m0, m1, m2 } => {
            let state: Vec<f64> = [e * m0, *m0, *m1].into_iter().chain(*m2).collect();
            MomentField::from_fn(sc.closure, grid, |_, s| s.copy_from_slice(&state)).map_err(numerical)
        }
    }
}

fn profile_csv(f: &MomentField) -> Csv {
    let mut csv = Csv::new(&["x", "E", "n", "U1", "U2", "consistency"]);
    for c in field::derive_physical(f) {
        csv.row(&[c.x, c.e, c.n, c.u1, c.u2.unwrap_or(f64::NAN), c.consistency]);
    }
    csv
}

fn blowup_label(r: BlowUpReason) -> &'static str {
    r.label()
}

/// Runs to `t_end` in `snapshots + 1` legs, keeping intermediate profiles.
fn field_legs(sc: &FieldScenario, init: MomentField) -> Result<(FieldRun, Vec<(f64, Csv)>, Csv), RunError> {
    let (m0, e0) = (init.mass(), init.energy());
    let legs = sc.snapshots + 1;
    let mut cons = Csv::new(&["t", "step", "mass", "energy", "mass_drift", "energy_drift"]);
    let mut snaps = Vec::new();
    let mut current = init;
    let mut steps = 0;
    let mut all_reports = Vec::new();
    let mut last = None;
    for k in 1..=legs {
        let t_stop = if k == legs { sc.t_end } else { sc.t_end * k as f64 / legs as f64 };
        let r = field::run(current, t_stop, &sc.solver).map_err(numerical)?;
        for rep in &r.reports {
            if k > 1 && rep.step == 0 {
                continue;
            }
            let step = steps + rep.step;
            cons.row(&[rep.t, step as f64, rep.mass, rep.energy, rep.mass - m0, rep.energy - e0]);
            all_reports.push(field::ConservationReport { step, mass_drift: rep.mass - m0, energy_drift: rep.energy - e0, ..*rep });
        }
        steps += r.steps;
        let done = r.outcome != FieldOutcome::Completed || k == legs;
        if !done {
            snaps.push((t_stop, profile_csv(&r.field)));
        }
        current = r.field.clone();
        if done {
            last = Some(FieldRun { reports: all_reports, steps, ..r });
            break;
        }
    }
    Ok((last.expect("at least one leg"), snaps, cons))
}

fn run_field(sc: &FieldScenario) -> Result<Out, RunError> {
    match &sc.init {
        FieldInit::Sine { amplitudes, v0 } if amplitudes.len() > 1 => {
            let results: Vec<(f64, FieldRun)> = amplitudes
                .par_iter()
                .map(|&a| {
                    let f = initial_field(sc, a)?;
                    Ok((a, field::run(f, sc.t_end, &sc.solver).map_err(numerical)?))
                })
                .collect::<Result<_, RunError>>()?;
            let mut csv = Csv::new(&["amplitude", "t_last", "steps", "max_mass_drift", "outcome", "reason"]);
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for (a, r) in &results {
                let (outcome, reason) = match r.outcome {
                    FieldOutcome::Completed => {
                        lo = lo.max(*a);
                        ("completed", "")
                    }
                    FieldOutcome::BlowUp { reason, .. } => {
                        hi = hi.min(*a);
                        ("blow_up", blowup_label(reason))
                    }
                };
                csv.row_with_text(&[*a, r.field.t(), r.steps as f64, r.max_mass_drift()], &[outcome, reason]);
            }
            let mut o = Out::new("completed");
            o.set("largest_completed_amplitude", finite_or_null(lo));
            o.set("smallest_blow_up_amplitude", finite_or_null(hi));
            o.set("bracket_consistent", lo < hi);
            if *v0 == 0.0 && sc.closure == Closure::One {
                // E0' = A cos x with V0 = 0: smooth iff 2A - 1 < 0.
                o.set("analytic_threshold", 0.5);
            }
            o.artifacts.push(Artifact::csv("family.csv", csv));
            Ok(o)
        }
        FieldInit::Sine { amplitudes, .. } => single_field(sc, initial_field(sc, amplitudes[0])?),
        FieldInit::Uniform { .. } => single_field(sc, initial_field(sc, 0.0)?),
    }
}

fn single_field(sc: &FieldScenario, init: MomentField) -> Result<Out, RunError> {
    let (r, snaps, cons) = field_legs(sc, init)?;
    let mut o = match r.outcome {
        FieldOutcome::Completed => Out::new("completed"),
        FieldOutcome::BlowUp { cell, t, reason } => {
            let mut o = Out::new("blow_up");
            o.set("blowup_t", t);
            o.set("blowup_cell", cell);
            o.set("blowup_reason", blowup_label(reason));
            o
        }
    };
    o.set("t_last", r.field.t());
    o.set("steps", r.steps);
    o.set("max_mass_drift", r.max_mass_drift());
    o.set("max_energy_drift", r.max_energy_drift());
    let (mean, max) = field::consistency_norms(&field::derive_physical(&r.field));
    o.set("consistency_mean", mean);
    o.set("consistency_max", max);
    let c = r.field.cell(0);
    o.set("cell0_final", c.iter().map(|v| finite_or_null(*v)).collect::<Vec<_>>());
    for (k, (t, csv)) in snaps.into_iter().enumerate() {
        o.set(&format!("snapshot_{k}_t"), t);
        o.artifacts.push(Artifact::csv(format!("profile_{k}.csv"), csv));
    }
    o.artifacts.push(Artifact::csv("profile_final.csv", profile_csv(&r.field)));
    o.artifacts.push(Artifact::csv("conservation.csv", cons));
    Ok(o)
}
