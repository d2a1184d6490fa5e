//! Tabular results, CSV output and scenario fingerprints.

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::params::Scenario;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Free-form `key: value` lines written into the CSV header.
    pub metadata: Vec<(String, String)>,
}

impl SweepResult {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// CSV with `#` header lines, LF endings, 12 significant digits.
    pub fn to_csv(&self, fingerprint: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("# twomode {TOOL_VERSION}\n"));
        out.push_str(&format!("# scenario_fingerprint: {fingerprint}\n"));
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Scientific notation with 12 significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.11e}")
    }
}

/// Canonical text form of a scenario; shortest round-trip float repr.
pub fn canonical_text(s: &Scenario) -> String {
    let fields = [
        ("omega0", s.omega0),
        ("delta", s.delta),
        ("ebar", s.ebar),
        ("delta1", s.delta1),
        ("delta2", s.delta2),
        ("gamma1", s.gamma1),
        ("gamma2", s.gamma2),
        ("m1", s.m1),
        ("m2", s.m2),
        ("mw", s.mw),
        ("n_atoms", s.n_atoms),
    ];
    fields.iter().map(|(k, v)| format!("{k}={v:e}\n")).collect()
}

/// SHA-256 hex of the canonical scenario text.
pub fn fingerprint(s: &Scenario) -> String {
    hex::encode(Sha256::digest(canonical_text(s).as_bytes()))
}

/// Map `f` over `items`, in parallel when asked; output order follows input.
pub fn map_ordered<I, T, F>(items: &[I], parallel: bool, f: F) -> Result<Vec<T>>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T> + Sync + Send,
{
    if parallel {
        items.par_iter().map(&f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

/// `n` points evenly spaced on [a, b], endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `n` points log-spaced on [a, b], endpoints included.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.log10(), b.log10(), n)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect()
}

/// d ln y / d ln x by central differences, one-sided at the ends.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    (0..n)
        .map(|i| {
            if n < 2 {
                return f64::NAN;
            }
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (ly[b] - ly[a]) / (lx[b] - lx[a])
        })
        .collect()
}
