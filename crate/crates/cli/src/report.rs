//! Machine-readable run reports: named checks with residuals and tolerances,
//! a command-specific payload, and a digest of the exact config bytes.
//!
//! Serialization is deterministic for a fixed config and seed: struct field
//! order is fixed, collections are emitted in index order, and the only
//! nondeterministic field (`wall_clock_ms`) is a single top-level key that
//! consumers can drop when comparing runs.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use sisdiag::{CMat, CVec};

/// One verified property: a residual measured against its tolerance, or an
/// exact yes/no condition (both numeric fields `null`).
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
}

impl Check {
    pub fn measured(name: &str, residual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), pass: residual <= tolerance, residual: Some(residual), tolerance: Some(tolerance) }
    }

    pub fn exact(name: &str, pass: bool) -> Self {
        Check { name: name.into(), pass, residual: None, tolerance: None }
    }

    /// A check that must FAIL with a strictly positive defect.
    pub fn expected_defect(name: &str, defect: f64) -> Self {
        Check { name: name.into(), pass: defect > 0.0, residual: Some(defect), tolerance: None }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub payload: Value,
    pub wall_clock_ms: u64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Hex SHA-256 of the raw config file bytes.
pub fn digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Complex scalar as a two-element `[re, im]` array.
pub fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn cvec_json(v: &CVec) -> Value {
    Value::Array(v.iter().map(|&z| complex_json(z)).collect())
}

/// Row-major nested arrays of `[re, im]` pairs.
pub fn cmat_json(m: &CMat) -> Value {
    Value::Array(
        m.rows()
            .into_iter()
            .map(|row| Value::Array(row.iter().map(|&z| complex_json(z)).collect()))
            .collect(),
    )
}
