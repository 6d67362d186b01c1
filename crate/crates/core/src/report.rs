//! Structured check results and the CSV conventions shared by every emitter.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Formats a float with 17 significant digits ('.' decimal point).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A rectangular numeric table with named columns.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// One recorded breach of a checked inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub location: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of a check: pass/fail, empirical constants, a bounded sample of
/// violations, and any tables worth plotting.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub passed: bool,
    pub constants: BTreeMap<String, f64>,
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    pub tables: BTreeMap<String, Table>,
    pub notes: Vec<String>,
}

/// Upper bound on stored violation samples.
pub const MAX_VIOLATION_SAMPLES: usize = 32;

impl Report {
    pub fn new(check: &str) -> Self {
        Report {
            check: check.to_string(),
            passed: true,
            ..Default::default()
        }
    }

    pub fn constant(&mut self, name: &str, v: f64) -> &mut Self {
        self.constants.insert(name.to_string(), v);
        self
    }

    pub fn record_violation(&mut self, location: Vec<f64>, lhs: f64, rhs: f64) {
        self.violation_count += 1;
        self.passed = false;
        if self.violations.len() < MAX_VIOLATION_SAMPLES {
            self.violations.push(Violation { location, lhs, rhs });
        }
    }

    pub fn fail(&mut self, note: impl Into<String>) {
        self.passed = false;
        self.notes.push(note.into());
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Mean and standard error of the mean of a sample, summed in order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn table_csv() {
        let mut t = Table::new(&["t", "value"]);
        t.push(vec![0.0, 1.5]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,value\n0.0000000000000000e0,1.5000000000000000e0\n"
        );
    }

    #[test]
    fn violations_are_capped() {
        let mut r = Report::new("x");
        for i in 0..100 {
            r.record_violation(vec![i as f64], 1.0, 0.0);
        }
        assert!(!r.passed);
        assert_eq!(r.violation_count, 100);
        assert_eq!(r.violations.len(), MAX_VIOLATION_SAMPLES);
    }

    #[test]
    fn stderr_of_constant_sample_is_zero() {
        let (m, s) = mean_stderr(&[2.0; 10]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 0.0);
    }
}
