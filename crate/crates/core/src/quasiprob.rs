//! Strong and weak (Kirkwood) joint quasiprobabilities, conditional
//! quasiprobabilities and quasiexpectations, and weak values.
//!
//! The weak distribution uses the ordering
//! `Pr_W{A=a, B=b ‖ ψ} = ⟨ψ|E^B(b) E^A(a)|ψ⟩`, so that conditioning on `B`
//! is postselection and reproduces the weak value with `ψ_f = |B=b⟩`.
//! The preselection variant is obtained by swapping the roles of `A` and `B`
//! and conjugating.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, projection_meet, sandwich, CMatrix, CVector, C64};
use crate::observables::{born_distribution, Observable, PureState};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiEntry {
    pub a: f64,
    pub b: f64,
    pub re: f64,
    pub im: f64,
}

impl QuasiEntry {
    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// Complex-valued function on `spec(A) × spec(B)`, stored `a`-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiDistribution {
    pub flavor: Flavor,
    pub entries: Vec<QuasiEntry>,
}

impl QuasiDistribution {
    fn from_fn(flavor: Flavor, a: &Observable, b: &Observable, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(a.spectrum().len() * b.spectrum().len());
        for (i, sa) in a.spectrum().iter().enumerate() {
            for (j, sb) in b.spectrum().iter().enumerate() {
                let z = f(i, j);
                entries.push(QuasiEntry { a: sa.value, b: sb.value, re: z.re, im: z.im });
            }
        }
        Self { flavor, entries }
    }

    /// Entry at `(a, b)` with outcomes matched within `OUTCOME_MATCH`; zero
    /// when either value lies outside the spectrum.
    pub fn get(&self, a: f64, b: f64) -> C64 {
        self.entries
            .iter()
            .filter(|e| (e.a - a).abs() <= tol::OUTCOME_MATCH && (e.b - b).abs() <= tol::OUTCOME_MATCH)
            .map(QuasiEntry::value)
            .sum()
    }

    pub fn total(&self) -> C64 {
        self.entries.iter().map(QuasiEntry::value).sum()
    }

    /// `Σ_b q(a, b)` for each distinct `a`.
    pub fn marginal_a(&self) -> Vec<(f64, C64)> {
        marginal(self.entries.iter().map(|e| (e.a, e.value())))
    }

    /// `Σ_a q(a, b)` for each distinct `b`.
    pub fn marginal_b(&self) -> Vec<(f64, C64)> {
        marginal(self.entries.iter().map(|e| (e.b, e.value())))
    }

    /// Sum of the entries with `a` and `b` matched as the same real number.
    pub fn diagonal_sum(&self) -> C64 {
        self.entries
            .iter()
            .filter(|e| (e.a - e.b).abs() <= tol::OUTCOME_MATCH)
            .map(QuasiEntry::value)
            .sum()
    }

    /// Largest modulus among entries with `a ≠ b`.
    pub fn max_off_diagonal(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| (e.a - e.b).abs() > tol::OUTCOME_MATCH)
            .map(|e| e.value().norm())
            .fold(0.0, f64::max)
    }

    /// `max |self − other|` over entries; both must share the same support order.
    pub fn max_difference(&self, other: &QuasiDistribution) -> f64 {
        self.entries
            .iter()
            .map(|e| (e.value() - other.get(e.a, e.b)).norm())
            .chain(other.entries.iter().map(|e| (e.value() - self.get(e.a, e.b)).norm()))
            .fold(0.0, f64::max)
    }

    /// CSV with header `a,b,re,im` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b,re,im\n");
        for e in &self.entries {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", e.a, e.b, e.re, e.im));
        }
        out
    }
}

fn marginal(items: impl Iterator<Item = (f64, C64)>) -> Vec<(f64, C64)> {
    let mut out: Vec<(f64, C64)> = Vec::new();
    for (k, z) in items {
        match out.iter_mut().find(|(x, _)| *x == k) {
            Some((_, acc)) => *acc += z,
            None => out.push((k, z)),
        }
    }
    out
}

fn check_pair(a: &Observable, b: &Observable, psi: &PureState) -> Result<()> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), psi.dim())
}

/// `Pr_S{A=a, B=b ‖ ψ} = ⟨ψ|E^A(a) ∧ E^B(b)|ψ⟩`.
pub fn strong_jqpd(a: &Observable, b: &Observable, psi: &PureState) -> Result<QuasiDistribution> {
    check_pair(a, b, psi)?;
    let mut meets = Vec::with_capacity(a.spectrum().len() * b.spectrum().len());
    for sa in a.spectrum() {
        for sb in b.spectrum() {
            meets.push(projection_meet(&sa.projection, &sb.projection)?);
        }
    }
    let nb = b.spectrum().len();
    Ok(QuasiDistribution::from_fn(Flavor::Strong, a, b, |i, j| {
        C64::new(meets[i * nb + j].expectation(psi.vector()), 0.0)
    }))
}

/// Kirkwood distribution `Pr_W{A=a, B=b ‖ ψ} = ⟨ψ|E^B(b) E^A(a)|ψ⟩`.
pub fn weak_jqpd(a: &Observable, b: &Observable, psi: &PureState) -> Result<QuasiDistribution> {
    check_pair(a, b, psi)?;
    let v = psi.vector();
    let ea: Vec<CVector> = a.spectrum().iter().map(|s| s.projection.apply(v)).collect();
    let eb: Vec<CVector> = b.spectrum().iter().map(|s| s.projection.apply(v)).collect();
    // ⟨ψ|E^B(b) E^A(a)|ψ⟩ = ⟨E^B(b)ψ | E^A(a)ψ⟩
    Ok(QuasiDistribution::from_fn(Flavor::Weak, a, b, |i, j| eb[j].dotc(&ea[i])))
}

/// Whether a weak distribution is a genuine probability distribution.
pub fn is_weak_jpd(q: &QuasiDistribution) -> bool {
    q.entries.iter().all(|e| e.im.abs() <= 1e-9 && e.re >= -1e-9)
}

pub fn jqpd(a: &Observable, b: &Observable, psi: &PureState, flavor: Flavor) -> Result<QuasiDistribution> {
    match flavor {
        Flavor::Strong => strong_jqpd(a, b, psi),
        Flavor::Weak => weak_jqpd(a, b, psi),
    }
}

/// `Pr{B = given_b ‖ ψ}`, zero when `given_b` is not a spectral value.
fn condition_probability(b: &Observable, psi: &PureState, given_b: f64) -> Result<f64> {
    Ok(born_distribution(b, psi)?.get(given_b))
}

/// Conditional quasiprobability of `A` given `B = given_b`, one entry per
/// spectral value of `A`.
pub fn conditional_qp(
    a: &Observable,
    b: &Observable,
    psi: &PureState,
    given_b: f64,
    flavor: Flavor,
) -> Result<Vec<(f64, C64)>> {
    check_pair(a, b, psi)?;
    let probability = condition_probability(b, psi, given_b)?;
    if probability <= tol::COND {
        return Err(Error::ZeroConditionProbability { probability });
    }
    let q = jqpd(a, b, psi, flavor)?;
    Ok(a.values().into_iter().map(|x| (x, q.get(x, given_b) / probability)).collect())
}

/// `Σ_a a · conditional_qp(a)`.
pub fn conditional_qe(a: &Observable, b: &Observable, psi: &PureState, given_b: f64, flavor: Flavor) -> Result<C64> {
    Ok(conditional_qp(a, b, psi, given_b, flavor)?.into_iter().map(|(x, p)| p * x).sum())
}

/// Closed form of the weak postconditional quasiexpectation,
/// `⟨ψ|E^B(b) A|ψ⟩ / ⟨ψ|E^B(b)|ψ⟩`.
pub fn weak_conditional_closed_form(a: &Observable, b: &Observable, psi: &PureState, given_b: f64) -> Result<C64> {
    check_pair(a, b, psi)?;
    let e = b.projection_for(given_b).ok_or(Error::UnknownOutcome { value: given_b })?;
    let v = psi.vector();
    let denom = e.expectation(v);
    if denom <= tol::COND {
        return Err(Error::ZeroConditionProbability { probability: denom });
    }
    Ok(sandwich(v, &(e.matrix() * a.matrix()), v) / denom)
}

/// Weak value with its selections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakValue {
    pub value: C64,
    pub preselect: PureState,
    pub postselect: PureState,
}

/// `⟨ψ_f|M|ψ_i⟩ / ⟨ψ_f|ψ_i⟩` for an arbitrary square matrix.
pub fn weak_value_of(m: &CMatrix, psi_i: &PureState, psi_f: &PureState) -> Result<C64> {
    check_dim(psi_i.dim(), psi_f.dim())?;
    check_dim(m.nrows(), psi_i.dim())?;
    let overlap = psi_f.inner(psi_i);
    if overlap.norm() <= tol::OVERLAP {
        return Err(Error::OrthogonalSelection { overlap: overlap.norm() });
    }
    Ok(sandwich(psi_f.vector(), m, psi_i.vector()) / overlap)
}

pub fn weak_value(a: &Observable, psi_i: &PureState, psi_f: &PureState) -> Result<WeakValue> {
    Ok(WeakValue {
        value: weak_value_of(a.matrix(), psi_i, psi_f)?,
        preselect: psi_i.clone(),
        postselect: psi_f.clone(),
    })
}

/// The unit vector `|B=b⟩` of a nondegenerate spectral value.
pub fn eigenvector_for(b: &Observable, value: f64) -> Result<PureState> {
    let p = b.projection_for(value).ok_or(Error::UnknownOutcome { value })?;
    if p.rank() != 1 {
        return Err(Error::DegeneratePostselection { rank: p.rank() });
    }
    // column with the largest norm of a rank-one projection is ∝ the eigenvector
    let m = p.matrix();
    let k = (0..m.ncols())
        .max_by(|&i, &j| m.column(i).norm().total_cmp(&m.column(j).norm()))
        .unwrap_or(0);
    PureState::normalized(m.column(k).into_owned())
}

/// `|A_w − Ex_W{A | B=b ‖ ψ}|` with `ψ_i = ψ` and `ψ_f = |B=b⟩`.
pub fn steinberg_check(a: &Observable, b: &Observable, psi: &PureState, given_b: f64) -> Result<f64> {
    check_pair(a, b, psi)?;
    let probability = condition_probability(b, psi, given_b)?;
    if probability <= tol::COND {
        return Err(Error::ZeroConditionProbability { probability });
    }
    let post = eigenvector_for(b, given_b)?;
    let wv = weak_value(a, psi, &post)?.value;
    let ex = conditional_qe(a, b, psi, given_b, Flavor::Weak)?;
    Ok((wv - ex).norm())
}

/// Strong minus weak, entrywise maximum modulus.
pub fn strong_weak_gap(a: &Observable, b: &Observable, psi: &PureState) -> Result<f64> {
    let s = strong_jqpd(a, b, psi)?;
    let w = weak_jqpd(a, b, psi)?;
    Ok(s.entries
        .iter()
        .zip(&w.entries)
        .map(|(x, y)| (x.value() - y.value()).norm())
        .fold(0.0, f64::max))
}
