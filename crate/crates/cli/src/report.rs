//! Run reports and their renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::scenario::Expectation;

#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub op: String,
    pub inputs: Value,
    pub output: Value,
    pub verdicts: BTreeMap<String, bool>,
    /// CSV table written for this task, relative to the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    pub passed: bool,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub seed: u64,
    pub passed: bool,
    pub tasks: Vec<TaskReport>,
    pub wall_time_ms: f64,
}

fn close(a: &Value, b: &Value, tol: f64) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => (x - y).abs() <= tol,
            _ => false,
        },
        (Value::Array(xs), Value::Array(ys)) => xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| close(x, y, tol)),
        (Value::Object(xs), Value::Object(ys)) => {
            xs.len() == ys.len() && xs.iter().all(|(k, x)| ys.get(k).is_some_and(|y| close(x, y, tol)))
        }
        _ => a == b,
    }
}

/// `(x, y, probability)` rows of a joint table.
fn joint_rows(v: &Value) -> Option<Vec<(f64, f64, f64)>> {
    v.as_array()?
        .iter()
        .map(|e| Some((e.get("x")?.as_f64()?, e.get("y")?.as_f64()?, e.get("probability")?.as_f64()?)))
        .collect()
}

/// Checks one expectation against the value at `pointer` in `output`.
pub fn check_expectation(output: &Value, pointer: &str, expected: &Expectation) -> bool {
    let Some(actual) = output.pointer(pointer) else {
        return false;
    };
    match expected {
        Expectation::Approx { approx, tol } => actual.as_f64().is_some_and(|x| (x - approx).abs() <= *tol),
        Expectation::Joint { joint, tol } => {
            let Some(rows) = joint_rows(actual) else {
                return false;
            };
            let lookup = |x: f64, y: f64| -> f64 {
                rows.iter()
                    .filter(|r| (r.0 - x).abs() <= 1e-6 && (r.1 - y).abs() <= 1e-6)
                    .map(|r| r.2)
                    .sum()
            };
            let listed = joint.iter().all(|&[x, y, p]| (lookup(x, y) - p).abs() <= *tol);
            let unlisted = rows.iter().all(|r| {
                joint.iter().any(|j| (j[0] - r.0).abs() <= 1e-6 && (j[1] - r.1).abs() <= 1e-6) || r.2.abs() <= *tol
            });
            listed && unlisted
        }
        Expectation::Exact(v) => close(actual, v, 1e-9),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&format!("{prefix}/{k}"), x, out);
            }
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&format!("{prefix}/{i}"), x, out);
            }
        }
        Value::Number(n) => {
            let s = match n.as_f64() {
                Some(x) if !n.is_i64() && !n.is_u64() => format!("{x:.16e}"),
                _ => n.to_string(),
            };
            out.push((prefix.to_string(), s));
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per scalar leaf of every task output and verdict.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("task,op,key,value\n");
        for t in &self.tasks {
            let mut leaves = Vec::new();
            flatten("/output", &t.output, &mut leaves);
            for (k, v) in &t.verdicts {
                leaves.push((format!("/verdicts/{k}"), v.to_string()));
            }
            leaves.push(("/passed".into(), t.passed.to_string()));
            for (k, v) in leaves {
                let _ = writeln!(s, "{},{},{},{}", t.index, t.op, csv_field(&k), csv_field(&v));
            }
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let width = self.tasks.iter().map(|t| t.op.len()).max().unwrap_or(2).max(2);
        let _ = writeln!(s, "{:>4}  {:<width$}  {:<6}  {:>10}  verdicts", "task", "op", "status", "time_ms");
        for t in &self.tasks {
            let verdicts: Vec<String> = t
                .verdicts
                .iter()
                .map(|(k, v)| format!("{k}={}", if *v { "pass" } else { "FAIL" }))
                .collect();
            let status = if t.passed { "ok" } else { "FAILED" };
            let _ = writeln!(
                s,
                "{:>4}  {:<width$}  {:<6}  {:>10.3}  {}",
                t.index,
                t.op,
                status,
                t.wall_time_ms,
                if verdicts.is_empty() { "-".to_string() } else { verdicts.join(" ") }
            );
            if let Some(report) = condition_table(&t.output) {
                s.push_str(&report);
            }
        }
        let passed = self.tasks.iter().filter(|t| t.passed).count();
        let _ = writeln!(
            s,
            "{} of {} tasks passed (seed {}){}",
            passed,
            self.tasks.len(),
            self.seed,
            if self.passed { "" } else { "; FAILED" }
        );
        s
    }
}

/// Indented per-condition rows for commutativity and correlation reports.
fn condition_table(output: &Value) -> Option<String> {
    let conditions = output.pointer("/report/conditions")?.as_object()?;
    let mut s = String::new();
    for (label, check) in conditions {
        let verdict = check.get("verdict").and_then(Value::as_str).unwrap_or("?");
        let residual = check.get("residual").and_then(Value::as_f64).unwrap_or(f64::NAN);
        let _ = writeln!(s, "        {label:<6} {verdict:<8} {residual:.3e}");
    }
    Some(s)
}
