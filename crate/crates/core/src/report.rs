//! Records of individual inequality and identity checks.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Default slack for inequality margins.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Holds, but with `|margin| < 10·tol`.
    Tight,
    Error,
}

impl Status {
    /// `Fail` below `−tol`, `Tight` within `10·tol` of zero, `Pass` otherwise.
    /// A NaN margin is a failure.
    pub fn classify(margin: f64, tol: f64) -> Self {
        if margin.is_nan() || margin < -tol {
            Status::Fail
        } else if margin.abs() < 10.0 * tol {
            Status::Tight
        } else {
            Status::Pass
        }
    }

    pub fn is_ok(self) -> bool {
        matches!(self, Status::Pass | Status::Tight)
    }

    /// The worse of two statuses: error > fail > tight > pass.
    pub fn worst(self, other: Self) -> Self {
        fn rank(s: Status) -> u8 {
            match s {
                Status::Pass => 0,
                Status::Tight => 1,
                Status::Fail => 2,
                Status::Error => 3,
            }
        }
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Tight => "tight",
            Status::Error => "error",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single input parameter of a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputValue {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<f64> for InputValue {
    fn from(v: f64) -> Self {
        InputValue::Real(v)
    }
}

impl From<usize> for InputValue {
    fn from(v: usize) -> Self {
        InputValue::Int(v as i64)
    }
}

impl From<u64> for InputValue {
    fn from(v: u64) -> Self {
        InputValue::Int(v as i64)
    }
}

impl From<i64> for InputValue {
    fn from(v: i64) -> Self {
        InputValue::Int(v)
    }
}

impl From<&str> for InputValue {
    fn from(v: &str) -> Self {
        InputValue::Text(v.to_string())
    }
}

impl From<String> for InputValue {
    fn from(v: String) -> Self {
        InputValue::Text(v)
    }
}

impl fmt::Display for InputValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputValue::Int(v) => write!(f, "{v}"),
            InputValue::Real(v) => f.write_str(&format_real(*v)),
            InputValue::Text(v) => f.write_str(v),
        }
    }
}

/// Fixed 17-significant-digit formatting used in every report file.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Outcome of one check. For an inequality `lhs ≥ rhs` the margin is
/// `lhs − rhs`; for `lhs ≤ rhs` it is `rhs − lhs`; for an identity it is
/// `−|lhs − rhs|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_id: String,
    pub inputs: BTreeMap<String, InputValue>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub status: Status,
    /// Derived quantities recorded alongside the check.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Wall-clock time; kept out of serialized output so that report files
    /// are reproducible byte for byte.
    #[serde(skip)]
    pub runtime: Duration,
}

impl VerificationReport {
    fn build(check_id: impl Into<String>, lhs: f64, rhs: f64, margin: f64, tol: f64) -> Self {
        Self {
            check_id: check_id.into(),
            inputs: BTreeMap::new(),
            lhs,
            rhs,
            margin,
            status: Status::classify(margin, tol),
            details: BTreeMap::new(),
            message: None,
            runtime: Duration::ZERO,
        }
    }

    /// `lhs ≥ rhs`.
    pub fn at_least(check_id: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::build(check_id, lhs, rhs, lhs - rhs, tol)
    }

    /// `lhs ≤ rhs`.
    pub fn at_most(check_id: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::build(check_id, lhs, rhs, rhs - lhs, tol)
    }

    /// `lhs = rhs` up to `tol`; never reported as tight.
    pub fn identity(check_id: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let mut r = Self::build(check_id, lhs, rhs, -(lhs - rhs).abs(), tol);
        if r.status == Status::Tight {
            r.status = Status::Pass;
        }
        r
    }

    pub fn error(check_id: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            check_id: check_id.into(),
            inputs: BTreeMap::new(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            status: Status::Error,
            details: BTreeMap::new(),
            message: Some(message.into()),
            runtime: Duration::ZERO,
        }
    }

    pub fn with_input(mut self, key: &str, value: impl Into<InputValue>) -> Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn with_runtime(mut self, runtime: Duration) -> Self {
        self.runtime = runtime;
        self
    }

    pub fn passed(&self) -> bool {
        self.status.is_ok()
    }
}

/// Aggregate of a batch of reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Tally {
    pub total: usize,
    pub pass: usize,
    pub tight: usize,
    pub fail: usize,
    pub error: usize,
    /// Smallest finite margin and the check that attained it.
    pub min_margin: Option<f64>,
    pub min_margin_check: Option<String>,
}

impl Tally {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a VerificationReport>) -> Self {
        let mut t = Tally::default();
        for r in reports {
            t.total += 1;
            match r.status {
                Status::Pass => t.pass += 1,
                Status::Tight => t.tight += 1,
                Status::Fail => t.fail += 1,
                Status::Error => t.error += 1,
            }
            if r.margin.is_finite() && t.min_margin.map_or(true, |m| r.margin < m) {
                t.min_margin = Some(r.margin);
                t.min_margin_check = Some(r.check_id.clone());
            }
        }
        t
    }

    pub fn all_ok(&self) -> bool {
        self.fail == 0 && self.error == 0
    }
}
