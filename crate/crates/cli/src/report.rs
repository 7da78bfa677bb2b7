//! Machine-readable verification reports (`report.json`).

use serde_json::{json, Value};

/// One verification line: a measured value against its threshold.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Pass when `value <= threshold`.
    pub fn max(name: &str, value: f64, threshold: f64) -> Check {
        Check {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    /// Pass when `value < threshold` strictly.
    pub fn strict(name: &str, value: f64, threshold: f64) -> Check {
        Check {
            name: name.into(),
            value,
            threshold,
            pass: value < threshold,
        }
    }

    /// A boolean condition rendered as 0/1 against threshold 1.
    pub fn flag(name: &str, ok: bool) -> Check {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            pass: ok,
        }
    }
}

/// A bundle of checks; passes iff all checks pass.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "pass": self.pass(),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "value": c.value,
                "threshold": c.threshold,
                "pass": c.pass,
            })).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_report_aggregates() {
        let mut r = Report::default();
        r.push(Check::max("a", 0.5, 1.0));
        assert!(r.pass());
        r.push(Check::max("b", 2.0, 1.0));
        assert!(!r.pass());
        assert_eq!(r.failures().len(), 1);
        assert_eq!(r.to_json()["pass"], serde_json::json!(false));
    }
}
