//! Scenario files: TOML-style key/value text with one section per kind.
//!
//! ```text
//! kind = "twave"
//! name = "fig4_region1"
//!
//! [wave]
//! closure = 2
//! w = 1.0
//! u10 = 0.6
//! u20 = 0.7
//! ```

use std::fmt;

use coldchain_core::affine::{AffineState, ChartQE, Closure, SweepMode};
use coldchain_core::field::{Boundary, SolverConfig};
use coldchain_core::wave::WaveState;
use toml::{Table, Value};

use crate::scenario::*;

/// A parse or validation failure, located as precisely as possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line of the offending entry, when known.
    pub line: Option<usize>,
    /// Dotted key, e.g. `affine.g20`.
    pub field: Option<String>,
    /// What is wrong.
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.field) {
            (Some(l), Some(k)) => write!(f, "line {l}, `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "`{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parsed text plus enough of the source to point at lines.
struct Doc<'a> {
    text: &'a str,
    root: Table,
}

impl<'a> Doc<'a> {
    fn parse(text: &'a str) -> Result<Self, ConfigError> {
        let root = text.parse::<Table>().map_err(|e| ConfigError {
            line: e.span().map(|s| line_of(text, s.start)),
            field: None,
            message: e.message().trim().to_string(),
        })?;
        Ok(Doc { text, root })
    }

    /// Line of `key = ...` inside `[section]` (top level when `section` is empty).
    fn line(&self, section: &str, key: &str) -> Option<usize> {
        let mut current = String::new();
        let mut section_line = None;
        for (i, raw) in self.text.lines().enumerate() {
            let l = raw.trim();
            if let Some(h) = l.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
                current = h.trim().to_string();
                if current == section {
                    section_line = Some(i + 1);
                }
                continue;
            }
            if current == section {
                let k = l.split('=').next().unwrap_or("").trim();
                if k == key && l.contains('=') {
                    return Some(i + 1);
                }
            }
        }
        if key.is_empty() { section_line } else { None }
    }

    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        let field = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        ConfigError { line: self.line(section, key), field: Some(field), message: message.into() }
    }

    fn section(&self, name: &str) -> Result<Section<'_, 'a>, ConfigError> {
        match self.root.get(name) {
            Some(Value::Table(t)) => Ok(Section { doc: self, name: name.to_string(), table: t }),
            Some(_) => Err(self.err("", name, "expected a [section]")),
            None => Err(ConfigError { line: None, field: Some(name.to_string()), message: format!("missing [{name}] section") }),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Section<'d, 'a> {
    doc: &'d Doc<'a>,
    name: String,
    table: &'d Table,
}

impl Section<'_, '_> {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        self.doc.err(&self.name, key, message)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for k in self.table.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(self.err(k, format!("unknown key (expected one of: {})", allowed.join(", "))));
            }
        }
        Ok(())
    }

    fn value_f64(&self, key: &str, v: &Value) -> Result<f64, ConfigError> {
        let x = match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            _ => return Err(self.err(key, "expected a number")),
        };
        if !x.is_finite() {
            return Err(self.err(key, "must be finite"));
        }
        Ok(x)
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.table.get(key).map(|v| self.value_f64(key, v)).transpose()
    }

    fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.opt_f64(key)?.ok_or_else(|| self.err(key, "required"))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a.iter().map(|v| self.value_f64(key, v)).collect::<Result<_, _>>().map(Some),
            Some(v) => self.value_f64(key, v).map(|x| Some(vec![x])),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.table.get(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(self.err(key, "expected a nonnegative integer")),
        }
    }

    fn str_or<'s>(&'s self, key: &str, default: &'s str) -> Result<&'s str, ConfigError> {
        match self.table.get(key) {
            None => Ok(default),
            Some(Value::String(s)) => Ok(s),
            Some(_) => Err(self.err(key, "expected a string")),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.table.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(self.err(key, "expected true or false")),
        }
    }

    fn closure(&self, default: usize) -> Result<Closure, ConfigError> {
        match self.usize_or("closure", default)? {
            1 => Ok(Closure::One),
            2 => Ok(Closure::Two),
            _ => Err(self.err("closure", "closure level must be 1 or 2")),
        }
    }

    fn positive(&self, key: &str, x: f64) -> Result<f64, ConfigError> {
        if x > 0.0 { Ok(x) } else { Err(self.err(key, "must be positive")) }
    }
}

/// Parses and validates a scenario. `fallback_name` is used when the file has no `name`.
pub fn parse_scenario(text: &str, fallback_name: &str) -> Result<ScenarioFile, ConfigError> {
    let doc = Doc::parse(text)?;
    for (k, v) in &doc.root {
        let known = matches!(k.as_str(), "kind" | "name" | "tol" | "affine" | "wave" | "field" | "sweep");
        if !known || (matches!(k.as_str(), "kind" | "name" | "tol") && v.is_table()) {
            return Err(doc.err("", k, "unknown top-level key"));
        }
    }
    let kind = match doc.root.get("kind") {
        Some(Value::String(s)) => s.as_str(),
        Some(_) => return Err(doc.err("", "kind", "expected a string")),
        None => return Err(ConfigError { line: None, field: Some("kind".into()), message: "required".into() }),
    };
    let name = match doc.root.get("name") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => return Err(doc.err("", "name", "expected a nonempty string")),
        None => fallback_name.to_string(),
    };
    let tol = match doc.root.get("tol") {
        None => None,
        Some(Value::Float(x)) if *x > 0.0 && *x < 1.0 => Some(*x),
        Some(_) => return Err(doc.err("", "tol", "expected a number in (0, 1)")),
    };
    let scenario = match kind {
        "affine" => Scenario::Affine(parse_affine(&doc.section("affine")?)?),
        "twave" => Scenario::Wave(parse_wave(&doc.section("wave")?)?),
        "field" => Scenario::Field(parse_field(&doc.section("field")?)?),
        "sweep" => Scenario::Sweep(parse_sweep(&doc.section("sweep")?)?),
        _ => return Err(doc.err("", "kind", "expected affine, twave, field or sweep")),
    };
    let echo = serde_json::to_value(&doc.root).unwrap_or(serde_json::Value::Null);
    Ok(ScenarioFile { name, tol, scenario, echo })
}

fn affine_init(s: &Section, closure: Closure) -> Result<AffineState, ConfigError> {
    let a0 = s.f64("a0")?;
    let g10 = s.f64("g10")?;
    if !(a0 < 1.0) {
        return Err(s.err("a0", "physical data need a0 < 1"));
    }
    match closure {
        Closure::One => Ok(AffineState::closure1(a0, g10)),
        Closure::Two => {
            let g20 = s.f64("g20")?;
            if g20 < g10 {
                return Err(s.err("g20", format!("g20 = {g20} must not be below g10 = {g10}")));
            }
            if g10 == 0.0 {
                return Err(s.err("g10", "closure 2 needs g10 != 0"));
            }
            AffineState::new(a0, g10, g20).map_err(|e| s.err("g20", e.to_string()))
        }
    }
}

fn parse_affine(s: &Section) -> Result<AffineScenario, ConfigError> {
    let mode = s.str_or("mode", "simulate")?;
    let samples = s.usize_or("samples", 0)?;
    let task = match mode {
        "simulate" => {
            s.check_keys(&["mode", "closure", "a0", "g10", "g20", "t_end", "samples"])?;
            let closure = s.closure(1)?;
            AffineTask::Simulate { closure, init: affine_init(s, closure)?, t_end: s.positive("t_end", s.f64("t_end")?)? }
        }
        "compare" => {
            s.check_keys(&["mode", "a0", "g10", "g20", "t_end", "samples"])?;
            AffineTask::Compare { init: affine_init(s, Closure::Two)?, t_end: s.positive("t_end", s.f64("t_end")?)? }
        }
        "phase" => {
            s.check_keys(&["mode", "q0", "eps0", "t_span", "samples"])?;
            let q = s.list_f64("q0")?.ok_or_else(|| s.err("q0", "required"))?;
            let e = s.list_f64("eps0")?.ok_or_else(|| s.err("eps0", "required"))?;
            if q.len() != e.len() {
                return Err(s.err("eps0", format!("{} values for {} q0 values", e.len(), q.len())));
            }
            if let Some(bad) = e.iter().find(|x| !(**x > 0.0)) {
                return Err(s.err("eps0", format!("eps0 = {bad} must be positive")));
            }
            let starts = q.into_iter().zip(e).map(|(q, eps)| ChartQE { q, eps }).collect();
            AffineTask::Phase { starts, t_span: s.positive("t_span", s.f64_or("t_span", 5.0)?)? }
        }
        "continue" => {
            s.check_keys(&["mode", "a0", "g10", "g20", "t_end", "tau", "gamma1", "beta", "samples"])?;
            let init = affine_init(s, Closure::Two)?;
            if !(init.g1 < 0.0) {
                return Err(s.err("g10", "continuation starts in the lower half-plane (g10 < 0)"));
            }
            let gamma1 = s.list_f64("gamma1")?.ok_or_else(|| s.err("gamma1", "required"))?;
            if gamma1.is_empty() || gamma1.iter().any(|g| !(*g > 0.0)) {
                return Err(s.err("gamma1", "upper re-initializations need gamma1 > 0"));
            }
            AffineTask::Continue {
                init,
                tau: s.f64("tau")?,
                gamma1,
                beta: s.opt_f64("beta")?,
                t_end: s.positive("t_end", s.f64("t_end")?)?,
            }
        }
        _ => return Err(s.err("mode", "expected simulate, compare, phase or continue")),
    };
    Ok(AffineScenario { task, samples })
}

fn parse_wave(s: &Section) -> Result<WaveScenario, ConfigError> {
    let max_rows = s.usize_or("max_rows", 4000)?;
    if max_rows < 2 {
        return Err(s.err("max_rows", "must be at least 2"));
    }
    let closure = s.closure(2)?;
    let w = s.f64("w")?;
    let task = match (closure, s.str_or("mode", "profile")?) {
        (Closure::One, "profile") => {
            s.check_keys(&["closure", "mode", "w", "e0", "u10", "xi_min", "xi_max", "samples", "max_rows"])?;
            let (lo, hi) = (s.f64_or("xi_min", -10.0)?, s.f64_or("xi_max", 10.0)?);
            if !(hi > lo) {
                return Err(s.err("xi_max", "must exceed xi_min"));
            }
            if w == 0.0 {
                return Err(s.err("w", "must be nonzero"));
            }
            let (e0, u10) = (s.f64_or("e0", 0.0)?, s.f64("u10")?);
            if w * w < e0 * e0 + u10 * u10 {
                return Err(s.err("u10", format!("no smooth closure-1 wave: w^2 = {} < E0^2 + U10^2 = {}", w * w, e0 * e0 + u10 * u10)));
            }
            WaveTask::Closure1 { w, e0, u10, xi: (lo, hi), samples: s.usize_or("samples", 1001)?.max(2) }
        }
        (Closure::Two, "profile") => {
            s.check_keys(&["closure", "mode", "w", "e0", "u10", "u20", "compare_closure1", "closure1_u10", "max_rows"])?;
            let init = WaveState { e: s.f64_or("e0", 0.0)?, u1: s.f64("u10")?, u2: s.f64("u20")? };
            wave2_checks(s, w, init.u1, init.u2, "u20")?;
            let compare = s.bool_or("compare_closure1", false)?;
            let c1 = s.opt_f64("closure1_u10")?;
            if c1.is_some() && !compare {
                return Err(s.err("closure1_u10", "only used with compare_closure1 = true"));
            }
            WaveTask::Closure2 { w, init, compare: compare.then(|| c1.unwrap_or(init.u1)) }
        }
        (Closure::Two, "plane") => {
            s.check_keys(&["closure", "mode", "w", "u10", "u20", "max_rows"])?;
            let u1 = s.list_f64("u10")?.ok_or_else(|| s.err("u10", "required"))?;
            let u2 = s.list_f64("u20")?.ok_or_else(|| s.err("u20", "required"))?;
            if u1.len() != u2.len() {
                return Err(s.err("u20", format!("{} values for {} u10 values", u2.len(), u1.len())));
            }
            for (a, b) in u1.iter().zip(&u2) {
                wave2_checks(s, w, *a, *b, "u20")?;
            }
            WaveTask::Plane { w, starts: u1.into_iter().zip(u2).collect() }
        }
        (_, m) => return Err(s.err("mode", format!("mode `{m}` is not available for this closure"))),
    };
    Ok(WaveScenario { task, max_rows })
}

fn wave2_checks(s: &Section, w: f64, u1: f64, u2: f64, key: &str) -> Result<(), ConfigError> {
    if !(w > 0.0) {
        return Err(s.err("w", "closure-2 waves need w > 0"));
    }
    if !(u1 > 0.0) {
        return Err(s.err("u10", "closure-2 waves need U1 > 0"));
    }
    if !(u2 > u1) {
        return Err(s.err(key, format!("U2 = {u2} must exceed U1 = {u1}")));
    }
    if u1 == w || u2 == w {
        return Err(s.err(key, "initial data on a singular line U = w"));
    }
    Ok(())
}

fn parse_field(s: &Section) -> Result<FieldScenario, ConfigError> {
    s.check_keys(&[
        "closure", "n", "x_lo", "x_hi", "boundary", "init", "amplitude", "v0", "e0", "m0", "m1", "m2", "t_end", "cfl", "max_dt",
        "value_limit", "gradient_limit", "jump_fraction", "report_every", "snapshots",
    ])?;
    let closure = s.closure(1)?;
    let n = s.usize_or("n", 256)?;
    if n < 8 {
        return Err(s.err("n", "at least 8 cells"));
    }
    let (x_lo, x_hi) = (s.f64_or("x_lo", 0.0)?, s.f64_or("x_hi", 2.0 * std::f64::consts::PI)?);
    if !(x_hi > x_lo) {
        return Err(s.err("x_hi", "must exceed x_lo"));
    }
    let boundary = match s.str_or("boundary", "periodic")? {
        "periodic" => Boundary::Periodic,
        "outflow" => Boundary::Outflow,
        _ => return Err(s.err("boundary", "expected periodic or outflow")),
    };
    let init = match s.str_or("init", "sine")? {
        "sine" => {
            let amps = s.list_f64("amplitude")?.unwrap_or_else(|| vec![0.0]);
            if amps.is_empty() {
                return Err(s.err("amplitude", "empty list"));
            }
            if let Some(a) = amps.iter().find(|a| !(a.abs() < 1.0)) {
                return Err(s.err("amplitude", format!("|A| = {} gives n <= 0", a.abs())));
            }
            let v0 = s.f64_or("v0", 0.0)?;
            if closure == Closure::Two && v0 == 0.0 {
                return Err(s.err("v0", "closure 2 needs M1 != 0 (v0 != 0)"));
            }
            FieldInit::Sine { amplitudes: amps, v0 }
        }
        "uniform" => {
            let m0 = s.positive("m0", s.f64("m0")?)?;
            let m2 = match closure {
                Closure::One => None,
                Closure::Two => Some(s.f64("m2")?),
            };
            FieldInit::Uniform { e: s.f64_or("e0", 0.0)?, m0, m1: s.f64_or("m1", 0.0)?, m2 }
        }
        _ => return Err(s.err("init", "expected sine or uniform")),
    };
    let d = SolverConfig::default();
    let jump = match s.table.get("jump_fraction") {
        Some(Value::Boolean(false)) => None,
        Some(_) => Some(s.positive("jump_fraction", s.f64("jump_fraction")?)?),
        None => d.jump_fraction,
    };
    let solver = SolverConfig {
        cfl: s.f64_or("cfl", d.cfl)?,
        max_dt: s.positive("max_dt", s.f64_or("max_dt", d.max_dt)?)?,
        value_limit: s.positive("value_limit", s.f64_or("value_limit", d.value_limit)?)?,
        gradient_limit: s.positive("gradient_limit", s.f64_or("gradient_limit", d.gradient_limit)?)?,
        jump_fraction: jump,
        report_every: s.usize_or("report_every", d.report_every)?.max(1),
    };
    if !(solver.cfl > 0.0 && solver.cfl < 1.0) {
        return Err(s.err("cfl", "must lie in (0, 1)"));
    }
    Ok(FieldScenario {
        closure,
        n,
        x: (x_lo, x_hi),
        boundary,
        init,
        t_end: s.positive("t_end", s.f64("t_end")?)?,
        solver,
        snapshots: s.usize_or("snapshots", 0)?,
    })
}

fn axis(s: &Section, key: &str) -> Result<Axis, ConfigError> {
    let lo = s.f64(&format!("{key}_min"))?;
    let hi = s.f64_or(&format!("{key}_max"), lo)?;
    let n = s.usize_or(&format!("{key}_n"), 1)?;
    if hi < lo {
        return Err(s.err(&format!("{key}_max"), "must not be below the minimum"));
    }
    if n == 1 && hi != lo {
        return Err(s.err(&format!("{key}_n"), "one point needs min = max"));
    }
    Ok(Axis { lo, hi, n })
}

fn parse_sweep(s: &Section) -> Result<SweepScenario, ConfigError> {
    s.check_keys(&[
        "mode", "a0_min", "a0_max", "a0_n", "g10_min", "g10_max", "g10_n", "third_min", "third_max", "third_n", "horizon",
    ])?;
    let mode = match s.str_or("mode", "eps_star")? {
        "eps_star" => SweepMode::EpsStar,
        "g20" => SweepMode::Gamma20,
        _ => return Err(s.err("mode", "expected eps_star or g20")),
    };
    let third = axis(s, "third")?;
    if mode == SweepMode::EpsStar && third.lo < 0.0 {
        return Err(s.err("third_min", "eps* must be nonnegative"));
    }
    Ok(SweepScenario {
        mode,
        a0: axis(s, "a0")?,
        g10: axis(s, "g10")?,
        third,
        horizon: s.positive("horizon", s.f64_or("horizon", 8.0 * std::f64::consts::PI)?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_violation_points_at_g20() {
        let text = "kind = \"affine\"\n[affine]\nclosure = 2\na0 = 0.1\ng10 = -0.2\ng20 = -0.5\nt_end = 1.0\n";
        let e = parse_scenario(text, "x").unwrap_err();
        assert_eq!(e.line, Some(6));
        assert_eq!(e.field.as_deref(), Some("affine.g20"));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let e = parse_scenario("kind = \"affine\"\n[affine\n", "x").unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse_scenario("kind = \"sweep\"\n[sweep]\na0_min = 0\ng10_min = 0\nthird_min = 0\nhorizn = 3\n", "x").unwrap_err();
        assert_eq!(e.field.as_deref(), Some("sweep.horizn"));
        assert_eq!(e.line, Some(6));
    }

    #[test]
    fn integers_read_as_floats() {
        let sc = parse_scenario("kind = \"affine\"\n[affine]\na0 = 0\ng10 = 0\nt_end = 2\n", "x").unwrap();
        assert_eq!(sc.name, "x");
        let Scenario::Affine(a) = sc.scenario else { panic!() };
        assert!(matches!(a.task, AffineTask::Simulate { closure: Closure::One, t_end, .. } if t_end == 2.0));
    }
}
