use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One named pass/fail check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Result of one command. The JSON form leaves out wall-clock time so that
/// it is reproducible byte for byte; the table form shows it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub v: u32,
    pub command: String,
    pub seed: u64,
    pub checks: Vec<CheckLine>,
    pub values: BTreeMap<String, Value>,
    #[serde(skip)]
    pub elapsed_ms: Option<u128>,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        Self {
            v: 1,
            command: command.into(),
            seed,
            checks: Vec::new(),
            values: BTreeMap::new(),
            elapsed_ms: None,
        }
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(CheckLine {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn value(&mut self, key: &str, v: impl Serialize) {
        self.values.insert(
            key.to_string(),
            serde_json::to_value(v).expect("report values serialize"),
        );
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "command: {}", self.command)?;
        writeln!(f, "seed:    {}", self.seed)?;
        let width = self
            .checks
            .iter()
            .map(|c| c.name.chars().count())
            .max()
            .unwrap_or(0);
        for c in &self.checks {
            let mark = if c.pass { "PASS" } else { "FAIL" };
            writeln!(f, "{mark}  {:width$}  {}", c.name, c.detail)?;
        }
        let width = self
            .values
            .keys()
            .map(|k| k.chars().count())
            .max()
            .unwrap_or(0);
        for (k, v) in &self.values {
            let shown = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            writeln!(f, "  {k:width$}  {shown}")?;
        }
        if let Some(ms) = self.elapsed_ms {
            writeln!(f, "elapsed: {ms} ms")?;
        }
        write!(
            f,
            "result:  {}",
            if self.passed() { "pass" } else { "fail" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut r = Report::new("run --n 4 --target 1", 7);
        r.check("exact", true, "found 1, queries 2");
        r.value("queries", 2);
        r.value("sizes", vec![4]);
        r.value("probability", 0.1 + 0.2);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), r.to_json());
    }

    #[test]
    fn table_marks_failures() {
        let mut r = Report::new("verify", 1);
        r.check("a", true, "");
        r.check("b", false, "broken");
        let text = r.to_string();
        assert!(text.contains("FAIL  b  broken"));
        assert!(text.ends_with("result:  fail"));
        assert!(!r.passed());
    }
}
