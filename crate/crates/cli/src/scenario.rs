//! Scenario files: named objects plus an ordered task list.

use std::collections::BTreeMap;
use std::path::Path;

use qsimul_core::measproc::{
    von_neumann_model, MeasuringProcess, OutcomeMapJson, Povm2, ProcessJson, SimultaneousProcess,
};
use qsimul_core::observables::{Observable, ObservableJson, PureState};
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    #[serde(default)]
    pub description: Option<String>,
    /// Used when neither `--seed` nor `QSIMUL_SEED` is given.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub objects: Objects,
    #[serde(default)]
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Objects {
    #[serde(default)]
    pub observables: BTreeMap<String, ObservableJson>,
    #[serde(default)]
    pub states: BTreeMap<String, StateSpec>,
    #[serde(default)]
    pub processes: BTreeMap<String, ProcessSpec>,
    #[serde(default)]
    pub povms: BTreeMap<String, Povm2>,
}

/// A preset name, explicit amplitudes `[[re, im], ...]`, or a tensor product.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Preset(String),
    Amplitudes(Vec<[f64; 2]>),
    Tensor { tensor: Vec<StateSpec> },
}

/// A preset string, a preset with outcome maps, or a full process.
///
/// Presets are `von_neumann(OBS)` with `OBS` a declared observable or an
/// observable preset, and `trivial(d,k)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProcessSpec {
    Preset(String),
    Mapped(MappedPreset),
    Full(ProcessJson),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappedPreset {
    pub preset: String,
    #[serde(default)]
    pub f_map: Option<OutcomeMapJson>,
    #[serde(default)]
    pub g_map: Option<OutcomeMapJson>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub op: String,
    #[serde(default)]
    pub args: Map<String, Value>,
    /// Name under which a produced observable, process or POVM is stored.
    #[serde(default)]
    pub save_as: Option<String>,
    /// CSV file for the task's table, relative to the output directory.
    #[serde(default)]
    pub output: Option<String>,
    /// Expected values keyed by JSON pointer into the task output.
    #[serde(default)]
    pub expect: BTreeMap<String, Expectation>,
}

#[derive(Debug, Clone, Deserialize, serde::Serialize)]
#[serde(untagged)]
pub enum Expectation {
    Approx {
        approx: f64,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    /// Joint table given as `[x, y, probability]` rows; outcomes not listed must carry at most `tol`.
    Joint {
        joint: Vec<[f64; 3]>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Exact(Value),
}

fn default_tol() -> f64 {
    1e-9
}

pub fn parse(path: &Path, text: &str) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if scenario.schema != SCHEMA_VERSION {
        return Err(CliError::Schema(scenario.schema));
    }
    Ok(scenario)
}

pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(path, &text)
}

/// Resolved objects, extended by `save_as` as tasks run.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pub observables: BTreeMap<String, Observable>,
    pub states: BTreeMap<String, PureState>,
    pub processes: BTreeMap<String, SimultaneousProcess>,
    pub povms: BTreeMap<String, Povm2>,
}

fn object_error(name: &str, message: impl ToString) -> CliError {
    CliError::Object { name: name.to_string(), message: message.to_string() }
}

impl Workspace {
    pub fn from_objects(objects: &Objects) -> Result<Self> {
        let mut ws = Workspace::default();
        for (name, spec) in &objects.observables {
            let obs = spec.to_observable().map_err(|e| object_error(name, e))?;
            ws.observables.insert(name.clone(), obs);
        }
        for (name, spec) in &objects.states {
            let psi = state_from_spec(spec).map_err(|m| object_error(name, m))?;
            ws.states.insert(name.clone(), psi);
        }
        for (name, spec) in &objects.processes {
            let sp = ws.process_from_spec(spec).map_err(|m| object_error(name, m))?;
            ws.processes.insert(name.clone(), sp);
        }
        for (name, povm) in &objects.povms {
            ws.povms.insert(name.clone(), povm.clone());
        }
        Ok(ws)
    }

    /// A declared name, an observable preset, or an inline observable.
    pub fn observable(&self, v: &Value) -> std::result::Result<Observable, String> {
        if let Value::String(name) = v {
            if let Some(obs) = self.observables.get(name) {
                return Ok(obs.clone());
            }
        }
        let spec: ObservableJson = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        spec.to_observable().map_err(|_| format!("{v} is neither a declared observable nor a valid observable"))
    }

    pub fn state(&self, v: &Value) -> std::result::Result<PureState, String> {
        if let Value::String(name) = v {
            if let Some(psi) = self.states.get(name) {
                return Ok(psi.clone());
            }
        }
        let spec: StateSpec = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        state_from_spec(&spec)
    }

    pub fn process(&self, v: &Value) -> std::result::Result<SimultaneousProcess, String> {
        if let Value::String(name) = v {
            if let Some(sp) = self.processes.get(name) {
                return Ok(sp.clone());
            }
        }
        let spec: ProcessSpec = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        self.process_from_spec(&spec)
    }

    pub fn povm(&self, v: &Value) -> std::result::Result<Povm2, String> {
        if let Value::String(name) = v {
            return self.povms.get(name).cloned().ok_or_else(|| format!("no POVM named {name:?}"));
        }
        serde_json::from_value(v.clone()).map_err(|e| e.to_string())
    }

    fn process_from_spec(&self, spec: &ProcessSpec) -> std::result::Result<SimultaneousProcess, String> {
        match spec {
            ProcessSpec::Preset(name) => self.preset_process(name).map(SimultaneousProcess::identity_maps),
            ProcessSpec::Mapped(MappedPreset { preset, f_map, g_map }) => {
                let base = self.preset_process(preset)?;
                let values = base.meter().values();
                let resolve = |m: &Option<OutcomeMapJson>| match m {
                    Some(m) => m.resolve(&values),
                    None => OutcomeMapJson::Named("identity".into()).resolve(&values),
                };
                let f = resolve(f_map).map_err(|e| e.to_string())?;
                let g = resolve(g_map).map_err(|e| e.to_string())?;
                SimultaneousProcess::new(base, f, g).map_err(|e| e.to_string())
            }
            ProcessSpec::Full(json) => json.to_process().map_err(|e| e.to_string()),
        }
    }

    fn preset_process(&self, preset: &str) -> std::result::Result<MeasuringProcess, String> {
        let bad = || format!("unknown process preset {preset:?}");
        let (head, rest) = preset.trim().split_once('(').ok_or_else(bad)?;
        let inner = rest.strip_suffix(')').ok_or_else(bad)?.trim();
        match head.trim() {
            "von_neumann" => {
                let obs = self.observable(&Value::String(inner.to_string()))?;
                Ok(von_neumann_model(&obs))
            }
            "trivial" => {
                let dims: Vec<usize> = inner
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| bad()))
                    .collect::<std::result::Result<_, _>>()?;
                match dims.as_slice() {
                    &[d, k] if d > 0 && k > 0 => Ok(MeasuringProcess::trivial(d, k)),
                    _ => Err(format!("trivial preset takes (system_dim, probe_dim), got {preset:?}")),
                }
            }
            _ => Err(bad()),
        }
    }
}

fn state_from_spec(spec: &StateSpec) -> std::result::Result<PureState, String> {
    match spec {
        StateSpec::Preset(name) => PureState::preset(name).ok_or_else(|| format!("unknown state {name:?}")),
        StateSpec::Amplitudes(amps) => {
            let amps: Vec<_> = amps.iter().map(|p| qsimul_core::linalg::c(p[0], p[1])).collect();
            PureState::from_amplitudes(&amps).map_err(|e| e.to_string())
        }
        StateSpec::Tensor { tensor } => {
            let mut it = tensor.iter();
            let first = it.next().ok_or("empty tensor product")?;
            let mut acc = state_from_spec(first)?;
            for s in it {
                acc = acc.tensor(&state_from_spec(s)?);
            }
            Ok(acc)
        }
    }
}
