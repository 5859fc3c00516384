//! Pointwise verification reports with a flat key/value serialization.

use std::fmt::Write as _;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    /// `(found, expected)` for rank checks.
    pub rank: Option<(usize, usize)>,
    pub pass: bool,
}

impl CheckResult {
    pub fn residual(name: &str, residual: f64, threshold: f64) -> CheckResult {
        CheckResult { name: name.into(), residual, threshold, rank: None, pass: residual <= threshold }
    }

    pub fn rank(name: &str, found: usize, expected: usize) -> CheckResult {
        CheckResult {
            name: name.into(),
            residual: (found as f64 - expected as f64).abs(),
            threshold: 0.0,
            rank: Some((found, expected)),
            pass: found == expected,
        }
    }

    pub fn boolean(name: &str, pass: bool) -> CheckResult {
        CheckResult {
            name: name.into(),
            residual: if pass { 0.0 } else { 1.0 },
            threshold: 0.0,
            rank: None,
            pass,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerificationReport {
    pub subject: String,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn new(subject: &str) -> VerificationReport {
        VerificationReport { subject: subject.into(), checks: Vec::new() }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn merge(&mut self, other: VerificationReport) {
        for mut check in other.checks {
            check.name = format!("{}.{}", other.subject, check.name);
            self.checks.push(check);
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().fold(0.0f64, |acc, c| acc.max(c.residual))
    }

    /// Flat `key = value` block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "report = {}", self.subject);
        for c in &self.checks {
            let _ = writeln!(out, "check.{}.residual = {:e}", c.name, c.residual);
            if let Some((found, expected)) = c.rank {
                let _ = writeln!(out, "check.{}.rank_found = {}", c.name, found);
                let _ = writeln!(out, "check.{}.rank_expected = {}", c.name, expected);
            }
            let _ = writeln!(out, "check.{}.pass = {}", c.name, c.pass);
        }
        let _ = writeln!(out, "overall.pass = {}", self.pass());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serializes_flat_keys() {
        let mut r = VerificationReport::new("demo");
        r.push(CheckResult::residual("closedness", 1e-12, 1e-9));
        r.push(CheckResult::rank("kernel", 2, 2));
        let text = r.to_text();
        assert!(text.contains("report = demo"));
        assert!(text.contains("check.closedness.residual = 1e-12"));
        assert!(text.contains("check.kernel.rank_found = 2"));
        assert!(text.contains("overall.pass = true"));
        assert!(r.pass());
    }

    #[test]
    fn first_failure_is_reported_in_order() {
        let mut r = VerificationReport::new("demo");
        r.push(CheckResult::residual("a", 0.0, 1.0));
        r.push(CheckResult::rank("b", 0, 2));
        r.push(CheckResult::residual("c", 2.0, 1.0));
        assert_eq!(r.first_failure().unwrap().name, "b");
    }
}
