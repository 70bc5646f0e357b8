//! State-dependent commutativity, cyclic subspaces and perfect correlation.
//!
//! Each relation is evaluated through several independent characterizations.
//! A report records every condition with its residual; when the verdicts
//! disagree the report carries no consensus and is flagged inconsistent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, check_dim, projection_meet, CMatrix, CVector, Projection, Subspace};
use crate::observables::{born_distribution, Observable, PureState};
use crate::quasiprob::{eigenvector_for, strong_jqpd, weak_jqpd, weak_value_of};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    /// Not evaluated, or evaluated only partially with a passing result.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub verdict: Verdict,
    pub residual: f64,
}

impl ConditionCheck {
    fn threshold(residual: f64, tol: f64) -> Self {
        let verdict = if residual <= tol { Verdict::Holds } else { Verdict::Fails };
        Self { verdict, residual }
    }

    fn skipped(residual: f64) -> Self {
        Self { verdict: Verdict::Skipped, residual }
    }
}

/// Verdicts of equivalent conditions, keyed by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub conditions: BTreeMap<String, ConditionCheck>,
    /// Common verdict of all evaluated conditions; `None` when they disagree.
    pub consensus: Option<bool>,
}

impl ConditionReport {
    fn from_checks(checks: Vec<(&str, ConditionCheck)>) -> Self {
        let mut seen: Option<bool> = None;
        let mut consistent = true;
        for (_, c) in &checks {
            let v = match c.verdict {
                Verdict::Holds => true,
                Verdict::Fails => false,
                Verdict::Skipped => continue,
            };
            match seen {
                None => seen = Some(v),
                Some(prev) if prev != v => consistent = false,
                _ => {}
            }
        }
        Self {
            conditions: checks.into_iter().map(|(k, c)| (k.to_string(), c)).collect(),
            consensus: if consistent { seen } else { None },
        }
    }

    pub fn holds(&self) -> bool {
        self.consensus == Some(true)
    }

    pub fn is_consistent(&self) -> bool {
        self.consensus.is_some()
    }

    pub fn verdict(&self, label: &str) -> Option<Verdict> {
        self.conditions.get(label).map(|c| c.verdict)
    }

    pub fn residual(&self, label: &str) -> Option<f64> {
        self.conditions.get(label).map(|c| c.residual)
    }
}

/// Gudder conditions `G_i`–`G_iv` for `A ↔_ψ B`.
pub type CommutativityReport = ConditionReport;
/// Characterizations `C_i`–`C_x` of `A =_ψ B`.
pub type CorrelationReport = ConditionReport;

fn check_pair(a: &Observable, b: &Observable, psi: &PureState) -> Result<()> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), psi.dim())
}

/// Pairwise meets `E^A(a) ∧ E^B(b)`, `a`-major.
fn spectral_meets(a: &Observable, b: &Observable) -> Result<Vec<Projection>> {
    let mut out = Vec::with_capacity(a.spectrum().len() * b.spectrum().len());
    for sa in a.spectrum() {
        for sb in b.spectrum() {
            out.push(projection_meet(&sa.projection, &sb.projection)?);
        }
    }
    Ok(out)
}

/// `max_{a,b} ‖[E^A(a), E^B(b)] ψ‖`.
pub fn spectral_commutator_residual(a: &Observable, b: &Observable, psi: &PureState) -> Result<f64> {
    check_pair(a, b, psi)?;
    let v = psi.vector();
    let mut worst: f64 = 0.0;
    for sa in a.spectrum() {
        let ea_v = sa.projection.apply(v);
        for sb in b.spectrum() {
            let lhs = sa.projection.apply(&sb.projection.apply(v));
            let rhs = sb.projection.apply(&ea_v);
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}

/// Evaluates the four Gudder conditions for `A ↔_ψ B`.
pub fn commute_in_state(a: &Observable, b: &Observable, psi: &PureState) -> Result<CommutativityReport> {
    check_pair(a, b, psi)?;
    let v = psi.vector();
    let g_ii = spectral_commutator_residual(a, b, psi)?;

    let meets = spectral_meets(a, b)?;
    let mut common = CVector::zeros(v.len());
    let mut strong_total = 0.0;
    for m in &meets {
        common += m.apply(v);
        strong_total += m.expectation(v);
    }
    let g_iii = (v - common).norm();
    let g_iv = (strong_total - 1.0).abs();

    Ok(ConditionReport::from_checks(vec![
        ("G_i", ConditionCheck::threshold(g_iv, tol::CONDITION)),
        ("G_ii", ConditionCheck::threshold(g_ii, tol::CONDITION)),
        ("G_iii", ConditionCheck::threshold(g_iii, tol::CONDITION)),
        ("G_iv", ConditionCheck::threshold(g_iv, tol::CONDITION)),
    ]))
}

/// True iff `A` and `B` share no common eigenvector.
pub fn nowhere_commuting(a: &Observable, b: &Observable) -> Result<bool> {
    check_dim(a.dim(), b.dim())?;
    Ok(spectral_meets(a, b)?.iter().all(Projection::is_zero))
}

/// Smallest subspace containing `v` and invariant under every matrix in `ops`.
///
/// Operator words are explored breadth-first in the given operator order.
pub fn cyclic_subspace_of(ops: &[&CMatrix], v: &CVector) -> Subspace {
    let mut space = Subspace::zero(v.len());
    if !space.try_extend(v, tol::RANK) {
        return space;
    }
    let mut frontier = 0;
    while frontier < space.dim() {
        let current = space.basis()[frontier].clone();
        for op in ops {
            let w = *op * &current;
            space.try_extend(&w, tol::RANK);
        }
        frontier += 1;
    }
    space
}

/// `C(ops, ψ)`: the cyclic subspace generated by the observables from `ψ`.
pub fn cyclic_subspace(ops: &[&Observable], psi: &PureState) -> Result<Subspace> {
    for op in ops {
        check_dim(psi.dim(), op.dim())?;
    }
    let mats: Vec<&CMatrix> = ops.iter().map(|o| o.matrix()).collect();
    Ok(cyclic_subspace_of(&mats, psi.vector()))
}

/// Spectral values of `A` paired with the matching projection of `B`
/// (zero when unmatched), followed by unmatched values of `B`.
fn matched_projections<'a>(a: &'a Observable, b: &'a Observable) -> Vec<(f64, CMatrix, CMatrix)> {
    let dim = a.dim();
    let zero = || CMatrix::zeros(dim, dim);
    let mut out: Vec<(f64, CMatrix, CMatrix)> = a
        .spectrum()
        .iter()
        .map(|s| {
            let pb = b.projection_for(s.value).map_or_else(zero, |p| p.matrix().clone());
            (s.value, s.projection.matrix().clone(), pb)
        })
        .collect();
    for s in b.spectrum() {
        if a.projection_for(s.value).is_none() {
            out.push((s.value, zero(), s.projection.matrix().clone()));
        }
    }
    out
}

/// Spectral norm of a matrix via the largest eigenvalue of `M† M`.
fn spectral_norm(m: &CMatrix) -> f64 {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    let e = linalg::eigh_unchecked(&linalg::hermitian_part(&gram));
    e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Evaluates all ten characterizations of `A =_ψ B`.
///
/// `C_ix` uses only the nondegenerate spectral values `b` of `B` with
/// `Pr{B=b} > COND`. It is skipped when there is none, and a pass is
/// recorded as skipped when some positive-probability value of `B` is
/// degenerate, since the check is then partial.
pub fn perfectly_correlated(a: &Observable, b: &Observable, psi: &PureState) -> Result<CorrelationReport> {
    check_pair(a, b, psi)?;
    let v = psi.vector();
    let weak = weak_jqpd(a, b, psi)?;
    let strong = strong_jqpd(a, b, psi)?;
    let born_a = born_distribution(a, psi)?;
    let gudder = commute_in_state(a, b, psi)?;
    let matched = matched_projections(a, b);

    let c_i = weak.max_off_diagonal();

    let diag_strong = (strong.diagonal_sum().re - 1.0).abs();
    let c_ii = gudder.residual("G_ii").unwrap_or(f64::INFINITY).max(diag_strong);
    let c_ii_check = if gudder.holds() && diag_strong <= tol::CONDITION {
        ConditionCheck { verdict: Verdict::Holds, residual: c_ii }
    } else {
        ConditionCheck { verdict: Verdict::Fails, residual: c_ii }
    };

    let mut common = CVector::zeros(v.len());
    for sa in a.spectrum() {
        if let Some(pb) = b.projection_for(sa.value) {
            common += projection_meet(&sa.projection, pb)?.apply(v);
        }
    }
    let c_iii = (v - common).norm();

    let cyc = cyclic_subspace(&[a], psi)?;
    let q = cyc.basis_matrix();
    let diff = a.matrix() - b.matrix();
    let c_iv = cyc.basis().iter().map(|u| (&diff * u).norm()).fold(0.0, f64::max);
    let c_vii = spectral_norm(&(&diff * &q));

    let mut c_v: f64 = 0.0;
    let mut c_vi: f64 = 0.0;
    for (_, pa, pb) in &matched {
        let d = pa - pb;
        for u in cyc.basis() {
            c_v = c_v.max((&d * u).norm());
        }
        c_vi = c_vi.max(linalg::max_abs(&(q.adjoint() * &d * &q)));
    }

    let c_viii = diag_strong;

    let born_b = born_distribution(b, psi)?;
    let mut c_ix: f64 = 0.0;
    let mut evaluated = 0usize;
    let mut partial = false;
    for sb in b.spectrum() {
        if born_b.get(sb.value) <= tol::COND {
            continue;
        }
        if sb.projection.rank() != 1 {
            partial = true;
            continue;
        }
        let post = eigenvector_for(b, sb.value)?;
        for sa in a.spectrum() {
            let delta = if (sa.value - sb.value).abs() <= tol::OUTCOME_MATCH { 1.0 } else { 0.0 };
            let wv = weak_value_of(sa.projection.matrix(), psi, &post)?;
            c_ix = c_ix.max((wv - linalg::c(delta, 0.0)).norm());
        }
        evaluated += 1;
    }
    let c_ix_check = if evaluated == 0 {
        ConditionCheck::skipped(0.0)
    } else {
        let check = ConditionCheck::threshold(c_ix, tol::CONDITION);
        if partial && check.verdict == Verdict::Holds {
            ConditionCheck::skipped(c_ix)
        } else {
            check
        }
    };

    let mut c_x: f64 = 0.0;
    for (s, w) in strong.entries.iter().zip(&weak.entries) {
        let target = if (s.a - s.b).abs() <= tol::OUTCOME_MATCH { born_a.get(s.a) } else { 0.0 };
        let t = linalg::c(target, 0.0);
        c_x = c_x.max((s.value() - t).norm()).max((w.value() - t).norm());
    }

    Ok(ConditionReport::from_checks(vec![
        ("C_i", ConditionCheck::threshold(c_i, tol::CONDITION)),
        ("C_ii", c_ii_check),
        ("C_iii", ConditionCheck::threshold(c_iii, tol::CONDITION)),
        ("C_iv", ConditionCheck::threshold(c_iv, tol::CONDITION)),
        ("C_v", ConditionCheck::threshold(c_v, tol::CONDITION)),
        ("C_vi", ConditionCheck::threshold(c_vi, tol::CONDITION)),
        ("C_vii", ConditionCheck::threshold(c_vii, tol::CONDITION)),
        ("C_viii", ConditionCheck::threshold(c_viii, tol::CONDITION)),
        ("C_ix", c_ix_check),
        ("C_x", ConditionCheck::threshold(c_x, tol::CONDITION)),
    ]))
}

/// Given `A =_ψ B` and `B =_ψ C`, reports whether `A =_ψ C`.
pub fn transitivity_check(a: &Observable, b: &Observable, c: &Observable, psi: &PureState) -> Result<bool> {
    if !perfectly_correlated(a, b, psi)?.holds() {
        return Err(Error::PreconditionUnmet("A and B are not perfectly correlated".into()));
    }
    if !perfectly_correlated(b, c, psi)?.holds() {
        return Err(Error::PreconditionUnmet("B and C are not perfectly correlated".into()));
    }
    Ok(perfectly_correlated(a, c, psi)?.holds())
}

/// Per-condition verdicts as a compact map, for rendering.
pub fn verdict_map(r: &ConditionReport) -> BTreeMap<String, Verdict> {
    r.conditions.iter().map(|(k, c)| (k.clone(), c.verdict)).collect()
}
