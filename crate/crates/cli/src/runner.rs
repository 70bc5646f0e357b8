use std::path::Path;
use std::time::Instant;

use serde_json::Value;

use crate::error::{CliError, Result};
use crate::ops::{self, Call, Saved};
use crate::report::{check_expectation, Report, TaskReport};
use crate::scenario::{self, Scenario, Workspace};

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Seed precedence: explicit, then the scenario's own, then zero.
pub fn resolve_seed(explicit: Option<u64>, scenario: &Scenario) -> u64 {
    explicit.or(scenario.seed).unwrap_or(0)
}

/// Runs every task in order. Nothing is written unless `out_dir` is given;
/// then it receives `report.json` and each task's CSV table.
pub fn run_scenario(path: &Path, seed: Option<u64>, out_dir: Option<&Path>) -> Result<Report> {
    let scenario = scenario::load(path)?;
    let report = execute(&scenario, seed, out_dir)?;
    if let Some(dir) = out_dir {
        write_file(&dir.join("report.json"), &report.to_json())?;
    }
    Ok(report)
}

pub fn execute(scenario: &Scenario, seed: Option<u64>, out_dir: Option<&Path>) -> Result<Report> {
    let start = Instant::now();
    let seed = resolve_seed(seed, scenario);
    let mut ws = Workspace::from_objects(&scenario.objects)?;
    let mut tasks = Vec::with_capacity(scenario.tasks.len());
    for (index, task) in scenario.tasks.iter().enumerate() {
        let t0 = Instant::now();
        let call = Call { ws: &ws, args: &task.args, index, op: &task.op, seed };
        let outcome = ops::run(&call)?;
        let binding = |message: String| CliError::Binding { task: index, op: task.op.clone(), message };

        let mut verdicts = outcome.verdicts;
        for (pointer, expected) in &task.expect {
            verdicts.insert(format!("expect {pointer}"), check_expectation(&outcome.output, pointer, expected));
        }

        if let Some(name) = &task.save_as {
            match outcome.saved {
                Some(Saved::Observable(a)) => ws.observables.insert(name.clone(), a).map(drop),
                Some(Saved::Process(p)) => ws.processes.insert(name.clone(), p).map(drop),
                Some(Saved::Povm(p)) => ws.povms.insert(name.clone(), p).map(drop),
                None => return Err(binding(format!("operation produces nothing to save as {name:?}"))),
            };
        }

        let csv = match (&task.output, outcome.table) {
            (Some(rel), Some(table)) => {
                if let Some(dir) = out_dir {
                    write_file(&dir.join(rel), &table)?;
                }
                Some(rel.clone())
            }
            (Some(_), None) => return Err(binding("operation produces no table for \"output\"".into())),
            (None, _) => None,
        };

        tasks.push(TaskReport {
            index,
            op: task.op.clone(),
            inputs: Value::Object(task.args.clone()),
            output: outcome.output,
            passed: verdicts.values().all(|&v| v),
            verdicts,
            csv,
            wall_time_ms: elapsed_ms(t0),
        });
    }
    Ok(Report {
        schema: scenario::SCHEMA_VERSION,
        description: scenario.description.clone(),
        seed,
        passed: tasks.iter().all(|t| t.passed),
        tasks,
        wall_time_ms: elapsed_ms(start),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Scenario {
        scenario::parse(Path::new("inline.json"), text).unwrap()
    }

    #[test]
    fn empty_task_list_passes() {
        let r = execute(&scenario(r#"{"schema": 1}"#), None, None).unwrap();
        assert!(r.passed && r.tasks.is_empty());
    }

    #[test]
    fn later_tasks_see_saved_objects() {
        let s = scenario(
            r#"{"schema": 1, "tasks": [
                {"op": "construct_eigenstate_measurement", "args": {"a": "pauli_z", "b": "pauli_x", "psi": "zero"}, "save_as": "W"},
                {"op": "joint_output", "args": {"process": "W", "psi": "zero"},
                 "expect": {"/entries": {"joint": [[1, 1, 0.5], [1, -1, 0.5]]}}}
            ]}"#,
        );
        let r = execute(&s, Some(3), None).unwrap();
        assert!(r.passed, "{}", r.to_json());
        assert_eq!(r.seed, 3);
    }

    #[test]
    fn errors_carry_the_task_index() {
        let unknown = scenario(r#"{"schema": 1, "tasks": [{"op": "std_dev", "args": {"a": "pauli_z", "psi": "zero"}}, {"op": "frobnicate"}]}"#);
        assert!(matches!(execute(&unknown, None, None), Err(CliError::UnknownOperation { task: 1, .. })));
        let unbound = scenario(r#"{"schema": 1, "tasks": [{"op": "std_dev", "args": {"a": "A", "psi": "zero"}}]}"#);
        assert!(matches!(execute(&unbound, None, None), Err(CliError::Binding { task: 0, .. })));
        let mismatch = scenario(r#"{"schema": 1, "tasks": [{"op": "std_dev", "args": {"a": "pauli_z", "psi": "bell"}}]}"#);
        let err = execute(&mismatch, None, None).unwrap_err();
        assert!(matches!(err, CliError::Task { task: 0, source: qsimul_core::Error::DimensionMismatch { .. }, .. }), "{err}");
    }

    #[test]
    fn failed_expectation_fails_the_report() {
        let s = scenario(r#"{"schema": 1, "tasks": [{"op": "std_dev", "args": {"a": "pauli_z", "psi": "zero"}, "expect": {"/std_dev": 1.0}}]}"#);
        let r = execute(&s, None, None).unwrap();
        assert!(!r.passed);
        assert!(!r.tasks[0].verdicts["expect /std_dev"]);
    }
}
