//! Randomized property sweeps, run in parallel with one RNG stream per instance.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{commute_in_state, perfectly_correlated, ConditionReport, Verdict};
use crate::error::{Error, Result};
use crate::measproc::{rms_errors, uncertainty_report};
use crate::observables::Observable;
use crate::quasiprob::weak_jqpd;
use crate::random::{self, instance_rng};
use crate::simul::dim2_characterization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Universal uncertainty relation over random simultaneous processes.
    Uup,
    /// Qubit characterization of simultaneous measurability.
    Dim2,
    /// Agreement of the four state-dependent commutativity conditions.
    Gudder,
    /// Agreement of the perfect-correlation characterizations.
    Idc,
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uup" => Ok(Self::Uup),
            "dim2" => Ok(Self::Dim2),
            "gudder" => Ok(Self::Gudder),
            "idc" => Ok(Self::Idc),
            other => Err(Error::Malformed(format!("unknown sweep kind {other:?}"))),
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uup => "uup",
            Self::Dim2 => "dim2",
            Self::Gudder => "gudder",
            Self::Idc => "idc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub count: usize,
    pub dims: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub count: usize,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub violations: usize,
    /// Largest residual seen on instances that passed; for `uup` the largest
    /// `rhs − lhs`, which must stay at or below zero.
    pub worst_residual: f64,
    /// Indices of the first few violating instances.
    pub failing_instances: Vec<u64>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Outcome {
    violated: bool,
    residual: f64,
}

fn worst_holding_residual(r: &ConditionReport) -> f64 {
    r.conditions
        .values()
        .filter(|c| c.verdict == Verdict::Holds)
        .map(|c| c.residual)
        .fold(0.0, f64::max)
}

fn uup_instance(rng: &mut impl Rng, dim: usize) -> Result<Outcome> {
    let probe = rng.random_range(2..=4);
    let sp = random::simultaneous_process(rng, dim, probe);
    let (da, db) = (rng.random_bool(0.3), rng.random_bool(0.3));
    let a = random::observable(rng, dim, da);
    let b = random::observable(rng, dim, db);
    let psi = random::state(rng, dim);
    let report = uncertainty_report(&rms_errors(&sp, &a, &b, &psi)?);
    Ok(Outcome { violated: !report.uup_holds, residual: report.rhs - report.uup_lhs })
}

fn gudder_instance(rng: &mut impl Rng, dim: usize, index: u64) -> Result<Outcome> {
    let (a, b, psi, expect_commute) = match index % 3 {
        0 => {
            let (a, b) = random::commuting_pair(rng, dim);
            (a, b, random::state(rng, dim), true)
        }
        1 => {
            let block = rng.random_range(1..=dim);
            let (a, b, psi) = random::block_commuting(rng, dim, block);
            (a, b, psi, true)
        }
        _ => {
            let (da, db) = (rng.random_bool(0.5), rng.random_bool(0.5));
            let a = random::observable(rng, dim, da);
            let b = random::observable(rng, dim, db);
            (a, b, random::state(rng, dim), false)
        }
    };
    let r = commute_in_state(&a, &b, &psi)?;
    let violated = !r.is_consistent() || (expect_commute && !r.holds());
    Ok(Outcome { violated, residual: worst_holding_residual(&r) })
}

fn dim2_instance(rng: &mut impl Rng, index: u64) -> Result<Outcome> {
    let (a, b, psi) = random::qubit_triple(rng, index);
    let r = dim2_characterization(&a, &b, &psi)?;
    let residual = if r.weak_nonneg {
        weak_jqpd(&a, &b, &psi)?
            .entries
            .iter()
            .map(|e| e.im.abs().max(-e.re))
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(Outcome { violated: !r.consistent, residual })
}

fn idc_instance(rng: &mut impl Rng, dim: usize, index: u64) -> Result<Outcome> {
    let positive = index.is_multiple_of(2);
    let (a, b, psi): (Observable, Observable, _) = if positive {
        let block = rng.random_range(1..=dim);
        random::perfectly_correlated(rng, dim, block)
    } else {
        random::not_correlated(rng, dim)
    };
    let forward = perfectly_correlated(&a, &b, &psi)?;
    let backward = perfectly_correlated(&b, &a, &psi)?;
    let violated = !forward.is_consistent()
        || !backward.is_consistent()
        || forward.consensus != backward.consensus
        || forward.holds() != positive;
    Ok(Outcome { violated, residual: worst_holding_residual(&forward) })
}

fn validate(config: &SweepConfig) -> Result<()> {
    if config.count == 0 {
        return Err(Error::PreconditionUnmet("sweep count must be at least 1".into()));
    }
    if config.dims.is_empty() || config.dims.iter().any(|d| !(2..=16).contains(d)) {
        return Err(Error::PreconditionUnmet("sweep dimensions must lie in 2..=16".into()));
    }
    if config.kind == SweepKind::Dim2 && config.dims.iter().any(|&d| d != 2) {
        return Err(Error::WrongDimension { expected: 2, found: *config.dims.iter().find(|&&d| d != 2).unwrap() });
    }
    Ok(())
}

/// Runs `count` instances, cycling through `dims` by instance index.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    validate(config)?;
    let outcomes = (0..config.count as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = instance_rng(config.seed, index);
            let dim = config.dims[index as usize % config.dims.len()];
            match config.kind {
                SweepKind::Uup => uup_instance(&mut rng, dim),
                SweepKind::Dim2 => dim2_instance(&mut rng, index),
                SweepKind::Gudder => gudder_instance(&mut rng, dim, index),
                SweepKind::Idc => idc_instance(&mut rng, dim, index),
            }
        })
        .collect::<Result<Vec<Outcome>>>()?;
    let failing: Vec<u64> = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.violated)
        .map(|(i, _)| i as u64)
        .collect();
    let worst_residual = outcomes
        .iter()
        .filter(|o| !o.violated)
        .map(|o| o.residual)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SweepReport {
        kind: config.kind,
        count: config.count,
        dims: config.dims.clone(),
        seed: config.seed,
        violations: failing.len(),
        worst_residual,
        failing_instances: failing.into_iter().take(10).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: SweepKind, count: usize, dims: &[usize]) -> SweepConfig {
        SweepConfig { kind, count, dims: dims.to_vec(), seed: 7 }
    }

    #[test]
    fn small_sweeps_pass_and_are_deterministic() {
        for (kind, dims) in [
            (SweepKind::Uup, vec![2, 3]),
            (SweepKind::Dim2, vec![2]),
            (SweepKind::Gudder, vec![2, 3, 4]),
            (SweepKind::Idc, vec![2, 3, 4]),
        ] {
            let r = run_sweep(&config(kind, 60, &dims)).unwrap();
            assert!(r.passed(), "{r:?}");
            assert_eq!(r, run_sweep(&config(kind, 60, &dims)).unwrap());
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(run_sweep(&config(SweepKind::Uup, 0, &[2])).is_err());
        assert!(run_sweep(&config(SweepKind::Uup, 1, &[17])).is_err());
        assert!(run_sweep(&config(SweepKind::Dim2, 1, &[3])).is_err());
        assert_eq!("idc".parse::<SweepKind>().unwrap(), SweepKind::Idc);
    }
}
