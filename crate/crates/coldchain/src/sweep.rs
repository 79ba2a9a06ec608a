//! Parallel classification of affine initial data.

use coldchain_core::affine::{classify_point, Verdict};
use coldchain_core::odeint::Control;
use rayon::prelude::*;

use crate::output::Csv;
use crate::scenario::SweepScenario;

/// One classified cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub a0: f64,
    pub g10: f64,
    pub third: f64,
    pub verdict: Verdict,
}

/// Classifies every grid point; rows come back sorted by `(a0, g10, third)`.
///
/// `threads = None` uses the global pool.
pub fn run_sweep(sc: &SweepScenario, ctrl: &Control, threads: Option<usize>) -> Vec<SweepRow> {
    let (av, gv, tv) = (sc.a0.values(), sc.g10.values(), sc.third.values());
    let mut cells = Vec::with_capacity(av.len() * gv.len() * tv.len());
    for &a in &av {
        for &g in &gv {
            for &t in &tv {
                cells.push((a, g, t));
            }
        }
    }
    let work = || {
        cells
            .par_iter()
            .map(|&(a0, g10, third)| SweepRow { a0, g10, third, verdict: classify_point(a0, g10, third, sc.mode, sc.horizon, ctrl) })
            .collect::<Vec<_>>()
    };
    let mut rows = match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(work),
        None => work(),
    };
    rows.sort_by(|p, q| (p.a0, p.g10, p.third).partial_cmp(&(q.a0, q.g10, q.third)).unwrap());
    rows
}

/// Table with the third column named after the sweep mode.
pub fn sweep_table(rows: &[SweepRow], third_name: &str) -> Csv {
    let mut csv = Csv::new(&["a0", "g10", third_name, "verdict"]);
    for r in rows {
        csv.row_with_text(&[r.a0, r.g10, r.third], &[r.verdict.label()]);
    }
    csv
}

/// Thread cap from `COLDCHAIN_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("COLDCHAIN_THREADS").ok()?.trim().parse().ok().filter(|n: &usize| *n > 0)
}
