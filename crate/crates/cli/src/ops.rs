//! Task dispatch: binds arguments, calls into the library, and attaches the
//! verdicts each operation is contracted to meet.

use std::collections::BTreeMap;

use qsimul_core::correlation::{
    commute_in_state, cyclic_subspace, nowhere_commuting, perfectly_correlated, transitivity_check,
};
use qsimul_core::linalg::{self, CMatrix, CVector, MatrixJson, Projection};
use qsimul_core::measproc::{
    extract_povm, heisenberg_meter, mean_error_check, noise_operator, output_distribution, rms_errors,
    uncertainty_report, von_neumann_model, Povm2, ProcessJson, Side, SimultaneousProcess,
};
use qsimul_core::observables::{born_distribution, std_dev, Observable, ObservableJson, PureState};
use qsimul_core::quasiprob::{
    conditional_qe, conditional_qp, jqpd, steinberg_check, strong_weak_gap, weak_value, Flavor,
};
use qsimul_core::random::{self, instance_rng};
use qsimul_core::simul::{
    check_povm_marginals, construct_commuting_measurement, construct_eigenstate_measurement, dim2_characterization,
    dress_with_ancilla, eigenstate_povm, feasibility_search, joint_output, joint_output_equals_weak, product_povm,
    state_independence_check, verify_simultaneous, MarginalMode,
};
use qsimul_core::sweep::{run_sweep, SweepConfig, SweepKind};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};
use crate::scenario::Workspace;

pub const OPERATIONS: &[&str] = &[
    "spectrum",
    "expectation",
    "born_distribution",
    "std_dev",
    "projection_meet",
    "partial_trace",
    "jqpd",
    "conditional_qp",
    "conditional_qe",
    "weak_value",
    "steinberg_check",
    "strong_weak_gap",
    "commute_in_state",
    "nowhere_commuting",
    "cyclic_subspace",
    "perfectly_correlated",
    "transitivity_check",
    "von_neumann_model",
    "heisenberg_meter",
    "extract_povm",
    "output_distribution",
    "noise_operator",
    "rms_errors",
    "uncertainty_report",
    "mean_error_check",
    "verify_simultaneous",
    "joint_output",
    "joint_output_equals_weak",
    "check_povm_marginals",
    "product_povm",
    "eigenstate_povm",
    "construct_eigenstate_measurement",
    "construct_commuting_measurement",
    "dress_with_ancilla",
    "dim2_characterization",
    "feasibility_search",
    "state_independence_check",
    "sweep",
];

/// Residual thresholds for contracted verdicts.
const STEINBERG_TOL: f64 = 1e-9;
const CROSS_TOL: f64 = 1e-9;
const WEAK_MATCH_TOL: f64 = 1e-8;
const POVM_TOL: f64 = 1e-8;

pub enum Saved {
    Observable(Observable),
    Process(SimultaneousProcess),
    Povm(Povm2),
}

pub struct Outcome {
    pub output: Value,
    pub verdicts: BTreeMap<String, bool>,
    pub table: Option<String>,
    pub saved: Option<Saved>,
}

impl Outcome {
    fn new(output: impl Serialize) -> Self {
        Self {
            output: serde_json::to_value(output).expect("report values serialize"),
            verdicts: BTreeMap::new(),
            table: None,
            saved: None,
        }
    }

    fn verdict(mut self, name: &str, pass: bool) -> Self {
        self.verdicts.insert(name.to_string(), pass);
        self
    }

    fn table(mut self, csv: String) -> Self {
        self.table = Some(csv);
        self
    }

    fn saved(mut self, s: Saved) -> Self {
        self.saved = Some(s);
        self
    }
}

/// One task invocation: argument lookup with task-annotated errors.
pub struct Call<'a> {
    pub ws: &'a Workspace,
    pub args: &'a Map<String, Value>,
    pub index: usize,
    pub op: &'a str,
    pub seed: u64,
}

impl Call<'_> {
    fn binding(&self, message: impl Into<String>) -> CliError {
        CliError::Binding { task: self.index, op: self.op.to_string(), message: message.into() }
    }

    fn core(&self, source: qsimul_core::Error) -> CliError {
        CliError::Task { task: self.index, op: self.op.to_string(), source }
    }

    fn arg(&self, key: &str) -> Result<&Value> {
        self.args.get(key).ok_or_else(|| self.binding(format!("missing argument {key:?}")))
    }

    fn observable(&self, key: &str) -> Result<Observable> {
        self.ws.observable(self.arg(key)?).map_err(|m| self.binding(format!("argument {key:?}: {m}")))
    }

    fn state(&self, key: &str) -> Result<PureState> {
        self.ws.state(self.arg(key)?).map_err(|m| self.binding(format!("argument {key:?}: {m}")))
    }

    fn process(&self, key: &str) -> Result<SimultaneousProcess> {
        self.ws.process(self.arg(key)?).map_err(|m| self.binding(format!("argument {key:?}: {m}")))
    }

    fn povm(&self, key: &str) -> Result<Povm2> {
        self.ws.povm(self.arg(key)?).map_err(|m| self.binding(format!("argument {key:?}: {m}")))
    }

    fn matrix(&self, key: &str) -> Result<CMatrix> {
        let j: MatrixJson = serde_json::from_value(self.arg(key)?.clone())
            .map_err(|e| self.binding(format!("argument {key:?}: {e}")))?;
        CMatrix::try_from(j).map_err(|e| self.core(e))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.arg(key)?.as_f64().ok_or_else(|| self.binding(format!("argument {key:?} must be a number")))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.args.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| self.binding(format!("argument {key:?} must be a non-negative integer"))),
        }
    }

    fn seed(&self) -> Result<u64> {
        match self.args.get("seed") {
            None => Ok(self.seed),
            Some(v) => v.as_u64().ok_or_else(|| self.binding("argument \"seed\" must be a non-negative integer")),
        }
    }

    fn flavor(&self) -> Result<Flavor> {
        match self.args.get("flavor") {
            None => Ok(Flavor::Weak),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|_| self.binding("argument \"flavor\" must be \"strong\" or \"weak\"")),
        }
    }

    fn list(&self, key: &str) -> Result<&Vec<Value>> {
        self.arg(key)?.as_array().ok_or_else(|| self.binding(format!("argument {key:?} must be a list")))
    }

    fn pair(&self) -> Result<(Observable, Observable)> {
        Ok((self.observable("a")?, self.observable("b")?))
    }

    fn triple(&self) -> Result<(Observable, Observable, PureState)> {
        Ok((self.observable("a")?, self.observable("b")?, self.state("psi")?))
    }
}

fn vector_json(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn outcome_csv(rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut s = String::from("outcome,probability\n");
    for (x, p) in rows {
        s.push_str(&format!("{x:.16e},{p:.16e}\n"));
    }
    s
}

fn verified(sp: &SimultaneousProcess, a: &Observable, b: &Observable, psi: &PureState) -> qsimul_core::Result<bool> {
    verify_simultaneous(sp, a, b, psi).map(|r| r.is_simultaneous)
}

pub fn run(call: &Call) -> Result<Outcome> {
    let c = call;
    if !OPERATIONS.contains(&c.op) {
        return Err(CliError::UnknownOperation { task: c.index, op: c.op.to_string() });
    }
    let core = |e| c.core(e);
    let out = match c.op {
        "spectrum" => {
            let a = c.observable("a")?;
            let (completeness, orthogonality, reconstruction) = a.resolution_defects();
            Outcome::new(json!({
                "observable": ObservableJson::spectral(&a),
                "completeness_defect": completeness,
                "orthogonality_defect": orthogonality,
                "reconstruction_defect": reconstruction,
            }))
        }
        "expectation" => {
            let (a, psi) = (c.observable("a")?, c.state("psi")?);
            Outcome::new(json!({ "expectation": a.expectation(&psi).map_err(core)? }))
        }
        "born_distribution" => {
            let (a, psi) = (c.observable("a")?, c.state("psi")?);
            let d = born_distribution(&a, &psi).map_err(core)?;
            let csv = outcome_csv(d.entries.iter().map(|e| (e.outcome, e.probability)));
            let normalized = (d.total() - 1.0).abs() <= 1e-9;
            Outcome::new(&d).verdict("normalized", normalized).table(csv)
        }
        "std_dev" => {
            let (a, psi) = (c.observable("a")?, c.state("psi")?);
            Outcome::new(json!({ "std_dev": std_dev(&a, &psi).map_err(core)? }))
        }
        "projection_meet" => {
            let p = Projection::new(c.matrix("p")?).map_err(core)?;
            let q = Projection::new(c.matrix("q")?).map_err(core)?;
            let m = linalg::projection_meet(&p, &q).map_err(core)?;
            Outcome::new(json!({ "rank": m.rank(), "matrix": MatrixJson::from(m.matrix()) }))
        }
        "partial_trace" => {
            let m = c.matrix("matrix")?;
            let (dh, dk) = (c.usize_or("system_dim", 0)?, c.usize_or("probe_dim", 0)?);
            let r = linalg::partial_trace_probe(&m, dh, dk).map_err(core)?;
            Outcome::new(json!({ "matrix": MatrixJson::from(&r) }))
        }
        "jqpd" => {
            let (a, b, psi) = c.triple()?;
            let q = jqpd(&a, &b, &psi, c.flavor()?).map_err(core)?;
            let csv = q.to_csv();
            Outcome::new(json!({
                "distribution": &q,
                "total": [q.total().re, q.total().im],
                "max_off_diagonal": q.max_off_diagonal(),
            }))
            .table(csv)
        }
        "conditional_qp" => {
            let (a, b, psi) = c.triple()?;
            let given = c.f64("given_b")?;
            let rows = conditional_qp(&a, &b, &psi, given, c.flavor()?).map_err(core)?;
            let mut csv = String::from("a,re,im\n");
            for (x, z) in &rows {
                csv.push_str(&format!("{x:.16e},{:.16e},{:.16e}\n", z.re, z.im));
            }
            let entries: Vec<Value> = rows.iter().map(|(x, z)| json!({ "a": x, "re": z.re, "im": z.im })).collect();
            Outcome::new(json!({ "given_b": given, "entries": entries })).table(csv)
        }
        "conditional_qe" => {
            let (a, b, psi) = c.triple()?;
            let z = conditional_qe(&a, &b, &psi, c.f64("given_b")?, c.flavor()?).map_err(core)?;
            Outcome::new(json!({ "value": [z.re, z.im] }))
        }
        "weak_value" => {
            let a = c.observable("a")?;
            let (pre, post) = (c.state("preselect")?, c.state("postselect")?);
            Outcome::new(weak_value(&a, &pre, &post).map_err(core)?)
        }
        "steinberg_check" => {
            let (a, b, psi) = c.triple()?;
            let residual = steinberg_check(&a, &b, &psi, c.f64("given_b")?).map_err(core)?;
            Outcome::new(json!({ "residual": residual })).verdict("steinberg_identity", residual <= STEINBERG_TOL)
        }
        "strong_weak_gap" => {
            let (a, b, psi) = c.triple()?;
            Outcome::new(json!({ "gap": strong_weak_gap(&a, &b, &psi).map_err(core)? }))
        }
        "commute_in_state" => {
            let (a, b, psi) = c.triple()?;
            let r = commute_in_state(&a, &b, &psi).map_err(core)?;
            let consistent = r.is_consistent();
            Outcome::new(json!({ "holds": r.holds(), "report": r })).verdict("consistent", consistent)
        }
        "nowhere_commuting" => {
            let (a, b) = c.pair()?;
            Outcome::new(json!({ "nowhere_commuting": nowhere_commuting(&a, &b).map_err(core)? }))
        }
        "cyclic_subspace" => {
            let ops = c
                .list("ops")?
                .iter()
                .map(|v| c.ws.observable(v).map_err(|m| c.binding(format!("argument \"ops\": {m}"))))
                .collect::<Result<Vec<_>>>()?;
            let psi = c.state("psi")?;
            let refs: Vec<&Observable> = ops.iter().collect();
            let s = cyclic_subspace(&refs, &psi).map_err(core)?;
            let basis: Vec<_> = s.basis().iter().map(vector_json).collect();
            Outcome::new(json!({ "dim": s.dim(), "ambient": s.ambient(), "basis": basis }))
        }
        "perfectly_correlated" => {
            let (a, b, psi) = c.triple()?;
            let r = perfectly_correlated(&a, &b, &psi).map_err(core)?;
            let consistent = r.is_consistent();
            Outcome::new(json!({ "holds": r.holds(), "report": r })).verdict("consistent", consistent)
        }
        "transitivity_check" => {
            let (a, b, psi) = c.triple()?;
            let third = c.observable("c")?;
            let holds = transitivity_check(&a, &b, &third, &psi).map_err(core)?;
            Outcome::new(json!({ "a_equals_c": holds })).verdict("transitive", holds)
        }
        "von_neumann_model" => {
            let b = c.observable("b")?;
            let sp = SimultaneousProcess::identity_maps(von_neumann_model(&b));
            Outcome::new(ProcessJson::from_process(&sp)).saved(Saved::Process(sp))
        }
        "heisenberg_meter" => {
            let sp = c.process("process")?;
            let m = heisenberg_meter(sp.base());
            Outcome::new(ObservableJson::spectral(&m)).saved(Saved::Observable(m))
        }
        "extract_povm" => {
            let sp = c.process("process")?;
            let povm = extract_povm(sp.base());
            let (positivity, completeness) = povm.defects();
            Outcome::new(json!({
                "povm": &povm,
                "positivity_defect": positivity,
                "completeness_defect": completeness,
            }))
            .verdict("valid_povm", positivity <= POVM_TOL && completeness <= POVM_TOL)
        }
        "output_distribution" => {
            let (sp, psi) = (c.process("process")?, c.state("psi")?);
            let d = output_distribution(sp.base(), &psi).map_err(core)?;
            let csv = outcome_csv(d.distribution.entries.iter().map(|e| (e.outcome, e.probability)));
            let cross = d.cross_residual <= CROSS_TOL;
            Outcome::new(&d).verdict("povm_cross_check", cross).table(csv)
        }
        "noise_operator" => {
            let sp = c.process("process")?;
            let target = c.observable("target")?;
            let side = match c.args.get("side").and_then(Value::as_str).unwrap_or("a") {
                "a" | "A" => Side::A,
                "b" | "B" => Side::B,
                other => return Err(c.binding(format!("argument \"side\" must be \"a\" or \"b\", got {other:?}"))),
            };
            let n = noise_operator(&sp, &target, side).map_err(core)?;
            Outcome::new(json!({ "matrix": MatrixJson::from(&n) }))
        }
        "rms_errors" => {
            let (sp, (a, b, psi)) = (c.process("process")?, c.triple()?);
            Outcome::new(rms_errors(&sp, &a, &b, &psi).map_err(core)?)
        }
        "uncertainty_report" => {
            let (sp, (a, b, psi)) = (c.process("process")?, c.triple()?);
            let budget = rms_errors(&sp, &a, &b, &psi).map_err(core)?;
            let r = uncertainty_report(&budget);
            Outcome::new(json!({ "budget": budget, "report": r })).verdict("universal_relation", r.uup_holds)
        }
        "mean_error_check" => {
            let (sp, (a, b)) = (c.process("process")?, c.pair()?);
            Outcome::new(mean_error_check(&sp, &a, &b).map_err(core)?)
        }
        "verify_simultaneous" => {
            let (sp, (a, b, psi)) = (c.process("process")?, c.triple()?);
            let r = verify_simultaneous(&sp, &a, &b, &psi).map_err(core)?;
            let consequences = r.consequences_hold;
            Outcome::new(r).verdict("consequences", consequences)
        }
        "joint_output" => {
            let (sp, psi) = (c.process("process")?, c.state("psi")?);
            let d = joint_output(&sp, &psi).map_err(core)?;
            let cross = d.cross_residual <= CROSS_TOL;
            let csv = d.to_csv();
            Outcome::new(d).verdict("povm_cross_check", cross).table(csv)
        }
        "joint_output_equals_weak" => {
            let (sp, (a, b, psi)) = (c.process("process")?, c.triple()?);
            let residual = joint_output_equals_weak(&sp, &a, &b, &psi).map_err(core)?;
            Outcome::new(json!({ "residual": residual })).verdict("matches_weak", residual <= WEAK_MATCH_TOL)
        }
        "check_povm_marginals" => {
            let (povm, (a, b, psi)) = (c.povm("povm")?, c.triple()?);
            let mode = match c.args.get("mode") {
                None => MarginalMode::Simul,
                Some(v) => serde_json::from_value(v.clone())
                    .map_err(|_| c.binding("argument \"mode\" must be \"commute\" or \"simul\""))?,
            };
            Outcome::new(check_povm_marginals(&povm, &a, &b, &psi, mode).map_err(core)?)
        }
        "product_povm" => {
            let (a, b) = c.pair()?;
            let povm = product_povm(&a, &b).map_err(core)?;
            Outcome::new(&povm).saved(Saved::Povm(povm))
        }
        "eigenstate_povm" => {
            let (a, b) = c.pair()?;
            let povm = eigenstate_povm(&a, &b, c.f64("a0")?).map_err(core)?;
            Outcome::new(&povm).saved(Saved::Povm(povm))
        }
        "construct_eigenstate_measurement" | "construct_commuting_measurement" => {
            let (a, b, psi) = c.triple()?;
            let sp = if c.op == "construct_eigenstate_measurement" {
                construct_eigenstate_measurement(&a, &b, &psi)
            } else {
                construct_commuting_measurement(&a, &b, &psi)
            }
            .map_err(core)?;
            let ok = verified(&sp, &a, &b, &psi).map_err(core)?;
            Outcome::new(ProcessJson::from_process(&sp)).verdict("verified", ok).saved(Saved::Process(sp))
        }
        "dress_with_ancilla" => {
            let sp = c.process("process")?;
            let mut rng = instance_rng(c.seed()?, c.index as u64);
            let dressed = dress_with_ancilla(&sp, c.usize_or("ancilla_dim", 2)?, &mut rng).map_err(core)?;
            Outcome::new(ProcessJson::from_process(&dressed)).saved(Saved::Process(dressed))
        }
        "dim2_characterization" => {
            let (a, b, psi) = c.triple()?;
            let r = dim2_characterization(&a, &b, &psi).map_err(core)?;
            Outcome::new(r).verdict("consistent", r.consistent)
        }
        "feasibility_search" => {
            let (a, b, psi) = c.triple()?;
            let iters = c.usize_or("iters", 10_000)?;
            let found = feasibility_search(&a, &b, &psi, iters, c.seed()?).map_err(core)?;
            let out = Outcome::new(json!({ "found": found.is_some(), "povm": &found }));
            match found {
                Some(povm) => out.saved(Saved::Povm(povm)),
                None => out,
            }
        }
        "state_independence_check" => {
            let (a, b) = c.pair()?;
            let states = match c.args.get("states") {
                Some(_) => c
                    .list("states")?
                    .iter()
                    .map(|v| c.ws.state(v).map_err(|m| c.binding(format!("argument \"states\": {m}"))))
                    .collect::<Result<Vec<_>>>()?,
                None => {
                    let mut rng = instance_rng(c.seed()?, c.index as u64);
                    (0..c.usize_or("samples", 32)?).map(|_| random::state(&mut rng, a.dim())).collect()
                }
            };
            let r = state_independence_check(&a, &b, &states).map_err(core)?;
            Outcome::new(r).verdict("consistent", r.consistent)
        }
        "sweep" => {
            let kind: SweepKind = c
                .arg("kind")?
                .as_str()
                .ok_or_else(|| c.binding("argument \"kind\" must be a string"))?
                .parse()
                .map_err(|e| c.binding(format!("argument \"kind\": {e}")))?;
            let dims = c
                .list("dims")?
                .iter()
                .map(|v| v.as_u64().map(|d| d as usize).ok_or_else(|| c.binding("argument \"dims\" must hold integers")))
                .collect::<Result<Vec<_>>>()?;
            let config = SweepConfig { kind, count: c.usize_or("count", 100)?, dims, seed: c.seed()? };
            let r = run_sweep(&config).map_err(core)?;
            let passed = r.passed();
            Outcome::new(r).verdict("no_violations", passed)
        }
        other => unreachable!("operation {other} is listed but not dispatched"),
    };
    Ok(out)
}
