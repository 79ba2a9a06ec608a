//! CSV tables and run artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// 17 significant digits, `.` separator; round-trips every finite double.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// A CSV table built in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    columns: usize,
    text: String,
    rows: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { columns: header.len(), text, rows: 0 }
    }

    /// Appends a numeric row.
    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(&fmt_num(*v));
        }
        self.text.push('\n');
        self.rows += 1;
    }

    /// Appends a row of numbers followed by text cells.
    pub fn row_with_text(&mut self, values: &[f64], text: &[&str]) {
        debug_assert_eq!(values.len() + text.len(), self.columns);
        let mut line = values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>();
        line.extend(text.iter().map(|t| t.to_string()));
        let _ = writeln!(self.text, "{}", line.join(","));
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// At most `max` indices out of `0..len`, evenly strided, first and last kept.
pub fn decimate(len: usize, max: usize) -> Vec<usize> {
    if len <= max || max < 2 {
        return (0..len).collect();
    }
    let mut out: Vec<usize> = (0..max).map(|i| ((i as f64) * (len - 1) as f64 / (max - 1) as f64).round() as usize).collect();
    out.dedup();
    out
}

/// At most about `max` indices along a sampled curve, evenly spaced in arc
/// length with each column scaled by its range; first and last kept.
pub fn decimate_path(cols: &[&[f64]], max: usize) -> Vec<usize> {
    let len = cols.first().map_or(0, |c| c.len());
    if len <= max || max < 2 {
        return (0..len).collect();
    }
    let scale: Vec<f64> = cols
        .iter()
        .map(|c| {
            let (lo, hi) = c.iter().filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
            if hi > lo { 1.0 / (hi - lo) } else { 0.0 }
        })
        .collect();
    let mut s = vec![0.0; len];
    for i in 1..len {
        let d2: f64 = cols.iter().zip(&scale).map(|(c, k)| ((c[i] - c[i - 1]) * k).powi(2)).filter(|v| v.is_finite()).sum();
        s[i] = s[i - 1] + d2.sqrt();
    }
    let step = s[len - 1] / (max - 1) as f64;
    let mut out = vec![0];
    let mut next = step;
    for i in 1..len - 1 {
        if s[i] >= next {
            out.push(i);
            next = s[i] + step;
        }
    }
    out.push(len - 1);
    out
}

/// A named file to be written into the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

impl Artifact {
    pub fn csv(file: impl Into<String>, csv: Csv) -> Self {
        Artifact { file: file.into(), contents: csv.text }
    }
}

/// Writes every artifact into `dir` (created if needed) and returns the paths.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| {
            let p = dir.join(&a.file);
            fs::write(&p, &a.contents)?;
            Ok(p)
        })
        .collect()
}
