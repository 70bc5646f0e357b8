//! Simultaneous measurability of two observables in a given state.
//!
//! A process `(K, ξ, U, M, f, g)` measures `A` and `B` simultaneously in `ψ`
//! when `f(M(Δt)) =_{ψ⊗ξ} A⊗I` and `g(M(Δt)) =_{ψ⊗ξ} B⊗I`. This module
//! verifies that definition, builds witnesses in the commuting and
//! eigenstate cases, compares joint outputs with the weak joint
//! distribution, and checks or searches for two-outcome POVMs with the
//! required marginals.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::{commute_in_state, cyclic_subspace, perfectly_correlated, CorrelationReport};
use crate::error::{Error, Result};
use crate::linalg::{self, c, check_dim, commutator, max_abs, CMatrix, CVector, Projection, Subspace};
use crate::measproc::{
    extract_povm, rms_errors, von_neumann_model, MeasuringProcess, OutcomeMap, Povm2,
    ProcessJson, SimultaneousProcess, Side,
};
use crate::observables::{Observable, PureState};
use crate::quasiprob::{is_weak_jpd, weak_jqpd};
use crate::random;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// A process supplied by the caller.
    Given,
    CommutingCase,
    EigenstateCase,
    Dim2Case,
    FeasibilitySearch,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Process(ProcessJson),
    Povm(Povm2),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimultaneityReport {
    pub is_simultaneous: bool,
    pub method: Method,
    pub witness: Option<Witness>,
    /// `f(M(Δt))` against `A ⊗ I` in `ψ ⊗ ξ`.
    pub a_correlation: CorrelationReport,
    /// `g(M(Δt))` against `B ⊗ I` in `ψ ⊗ ξ`.
    pub b_correlation: CorrelationReport,
    pub eps_a: f64,
    pub eps_b: f64,
    /// `max_{a,b} |⟨ψ|[E^A(a), E^B(b)]|ψ⟩|`.
    pub max_commutator_expectation: f64,
    /// `max_{a,b} |⟨ψ|[E^A(a), E^B(b)]²|ψ⟩|`, reported only as a diagnostic.
    pub max_commutator_square: f64,
    /// Zero rms errors and vanishing commutator expectations, as a
    /// simultaneous measurement requires. Vacuously true otherwise.
    pub consequences_hold: bool,
}

fn check_triple(a: &Observable, b: &Observable, psi: &PureState) -> Result<()> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), psi.dim())
}

/// `(max |⟨ψ|[E^A,E^B]|ψ⟩|, max ‖[E^A,E^B]ψ‖²)` over spectral pairs.
fn commutator_diagnostics(a: &Observable, b: &Observable, psi: &PureState) -> (f64, f64) {
    let v = psi.vector();
    let mut expectation: f64 = 0.0;
    let mut square: f64 = 0.0;
    for sa in a.spectrum() {
        for sb in b.spectrum() {
            let cm = commutator(sa.projection.matrix(), sb.projection.matrix());
            let cv = &cm * v;
            expectation = expectation.max(v.dotc(&cv).norm());
            // [E,F] is anti-Hermitian, so ⟨ψ|[E,F]²|ψ⟩ = −‖[E,F]ψ‖²
            square = square.max(cv.norm_squared());
        }
    }
    (expectation, square)
}

pub fn verify_simultaneous(
    sp: &SimultaneousProcess,
    a: &Observable,
    b: &Observable,
    psi: &PureState,
) -> Result<SimultaneityReport> {
    check_triple(a, b, psi)?;
    check_dim(sp.base().system_dim(), psi.dim())?;
    let k = sp.base().probe_dim();
    let composite = sp.base().composite_state(psi)?;
    let a_correlation = perfectly_correlated(&sp.readout(Side::A), &a.tensor_identity(k), &composite)?;
    let b_correlation = perfectly_correlated(&sp.readout(Side::B), &b.tensor_identity(k), &composite)?;
    let is_simultaneous = a_correlation.holds() && b_correlation.holds();
    let budget = rms_errors(sp, a, b, psi)?;
    let (max_commutator_expectation, max_commutator_square) = commutator_diagnostics(a, b, psi);
    let consequences_hold = !is_simultaneous
        || (budget.eps_a <= tol::CONDITION
            && budget.eps_b <= tol::CONDITION
            && max_commutator_expectation <= tol::CONDITION);
    Ok(SimultaneityReport {
        is_simultaneous,
        method: Method::Given,
        witness: is_simultaneous.then(|| Witness::Process(ProcessJson::from_process(sp))),
        a_correlation,
        b_correlation,
        eps_a: budget.eps_a,
        eps_b: budget.eps_b,
        max_commutator_expectation,
        max_commutator_square,
        consequences_hold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointEntry {
    pub x: f64,
    pub y: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointOutputDistribution {
    pub entries: Vec<JointEntry>,
    /// Largest disagreement between the composite Born rule and the POVM pushforward.
    pub cross_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

fn matches(p: (f64, f64), q: (f64, f64)) -> bool {
    (p.0 - q.0).abs() <= tol::OUTCOME_MATCH && (p.1 - q.1).abs() <= tol::OUTCOME_MATCH
}

fn accumulate(entries: &mut Vec<JointEntry>, x: f64, y: f64, p: f64) {
    match entries.iter_mut().find(|e| matches((e.x, e.y), (x, y))) {
        Some(e) => e.probability += p,
        None => entries.push(JointEntry { x, y, probability: p }),
    }
}

impl JointOutputDistribution {
    pub fn get(&self, x: f64, y: f64) -> f64 {
        self.entries.iter().filter(|e| matches((e.x, e.y), (x, y))).map(|e| e.probability).sum()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    pub fn max_difference(&self, other: &JointOutputDistribution) -> f64 {
        self.entries
            .iter()
            .chain(&other.entries)
            .map(|e| (self.get(e.x, e.y) - other.get(e.x, e.y)).abs())
            .fold(0.0, f64::max)
    }

    /// Marginal over `y` (for `Side::A`) or over `x`.
    pub fn marginal(&self, side: Side) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for e in &self.entries {
            let key = if side == Side::A { e.x } else { e.y };
            match out.iter_mut().find(|(k, _)| (k - key).abs() <= tol::OUTCOME_MATCH) {
                Some((_, p)) => *p += e.probability,
                None => out.push((key, e.probability)),
            }
        }
        out.sort_by(|p, q| p.0.total_cmp(&q.0));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,probability\n");
        for e in &self.entries {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", e.x, e.y, e.probability));
        }
        s
    }
}

/// `Pr{x, y ‖ ψ}` from the commuting pair `(f(M(Δt)), g(M(Δt)))` in `ψ ⊗ ξ`,
/// cross-checked against `Σ_{u: f(u)=x, g(u)=y} ⟨ψ|Π(u)|ψ⟩`.
pub fn joint_output(sp: &SimultaneousProcess, psi: &PureState) -> Result<JointOutputDistribution> {
    let composite = sp.base().composite_state(psi)?;
    let v = composite.vector();
    let fa = sp.readout(Side::A);
    let gb = sp.readout(Side::B);
    let ga: Vec<CVector> = gb.spectrum().iter().map(|t| t.projection.apply(v)).collect();
    let mut born = Vec::new();
    for s in fa.spectrum() {
        let fv = s.projection.apply(v);
        for (t, gv) in gb.spectrum().iter().zip(&ga) {
            let p = fv.dotc(gv).re;
            if p.abs() > 1e-14 {
                accumulate(&mut born, s.value, t.value, p);
            }
        }
    }
    let povm = extract_povm(sp.base());
    let mut pushed = Vec::new();
    for (u, p) in povm.probabilities(psi)? {
        accumulate(&mut pushed, sp.f_map().get(u)?, sp.g_map().get(u)?, p);
    }
    born.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    let born = JointOutputDistribution { entries: born, cross_residual: 0.0, source: None };
    let pushed = JointOutputDistribution { entries: pushed, cross_residual: 0.0, source: None };
    let cross_residual = born.max_difference(&pushed);
    Ok(JointOutputDistribution { cross_residual, ..born })
}

/// `max_{x,y} |Pr{x,y‖ψ} − Pr_W{A=x, B=y‖ψ}|` for a verified simultaneous measurement.
pub fn joint_output_equals_weak(sp: &SimultaneousProcess, a: &Observable, b: &Observable, psi: &PureState) -> Result<f64> {
    if !verify_simultaneous(sp, a, b, psi)?.is_simultaneous {
        return Err(Error::PreconditionUnmet("process is not a simultaneous measurement in this state".into()));
    }
    let joint = joint_output(sp, psi)?;
    let weak = weak_jqpd(a, b, psi)?;
    let over_weak = weak.entries.iter().map(|e| (c(joint.get(e.a, e.b), 0.0) - e.value()).norm());
    let over_joint = joint.entries.iter().map(|e| (c(e.probability, 0.0) - weak.get(e.x, e.y)).norm());
    Ok(over_weak.chain(over_joint).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalMode {
    /// Marginals checked on `C(A, B, ψ)`.
    Commute,
    /// `A`-marginals on `C(A, ψ)` and `B`-marginals on `C(B, ψ)`.
    Simul,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalResiduals {
    /// `max_{x,v} ‖(Σ_y Π(x,y) − E^A(x)) v‖`.
    pub a_residual: f64,
    pub b_residual: f64,
    pub passes: bool,
}

fn marginal_subspaces(a: &Observable, b: &Observable, psi: &PureState, mode: MarginalMode) -> Result<(Subspace, Subspace)> {
    Ok(match mode {
        MarginalMode::Commute => {
            let s = cyclic_subspace(&[a, b], psi)?;
            (s.clone(), s)
        }
        MarginalMode::Simul => (cyclic_subspace(&[a], psi)?, cyclic_subspace(&[b], psi)?),
    })
}

fn marginal_residual(
    p: &Povm2,
    target: &Observable,
    subspace: &Subspace,
    side: Side,
) -> f64 {
    let d = target.dim();
    let mut worst: f64 = 0.0;
    for s in target.spectrum() {
        let mut sum = -s.projection.matrix().clone();
        for (&(x, y), e) in p.outcomes.iter().zip(&p.elements) {
            let label = if side == Side::A { x } else { y };
            if (label - s.value).abs() <= tol::OUTCOME_MATCH {
                sum += e;
            }
        }
        debug_assert_eq!(sum.nrows(), d);
        for v in subspace.basis() {
            worst = worst.max((&sum * v).norm());
        }
    }
    worst
}

/// Residuals of the marginal equations for a two-outcome POVM.
pub fn check_povm_marginals(
    p: &Povm2,
    a: &Observable,
    b: &Observable,
    psi: &PureState,
    mode: MarginalMode,
) -> Result<MarginalResiduals> {
    check_triple(a, b, psi)?;
    check_dim(a.dim(), p.dim())?;
    for x in a.values() {
        for y in b.values() {
            if p.element(x, y).is_none() {
                return Err(Error::OutcomeCoverage { a: x, b: y });
            }
        }
    }
    let (sa, sb) = marginal_subspaces(a, b, psi, mode)?;
    let a_residual = marginal_residual(p, a, &sa, Side::A);
    let b_residual = marginal_residual(p, b, &sb, Side::B);
    Ok(MarginalResiduals { a_residual, b_residual, passes: a_residual <= tol::CONDITION && b_residual <= tol::CONDITION })
}

/// `Π(x, y) = E^A(x) E^B(y)` for a globally commuting pair.
pub fn product_povm(a: &Observable, b: &Observable) -> Result<Povm2> {
    check_dim(a.dim(), b.dim())?;
    let mut outcomes = Vec::new();
    let mut elements = Vec::new();
    for sa in a.spectrum() {
        for sb in b.spectrum() {
            outcomes.push((sa.value, sb.value));
            elements.push(linalg::hermitian_part(&(sa.projection.matrix() * sb.projection.matrix())));
        }
    }
    Povm2::new(outcomes, elements)
}

/// `Π(x, y) = δ_{x,a₀} E^B(y)`.
pub fn eigenstate_povm(a: &Observable, b: &Observable, a0: f64) -> Result<Povm2> {
    check_dim(a.dim(), b.dim())?;
    let d = a.dim();
    let mut outcomes = Vec::new();
    let mut elements = Vec::new();
    for sa in a.spectrum() {
        for sb in b.spectrum() {
            outcomes.push((sa.value, sb.value));
            let hit = (sa.value - a0).abs() <= tol::OUTCOME_MATCH;
            elements.push(if hit { sb.projection.matrix().clone() } else { CMatrix::zeros(d, d) });
        }
    }
    Povm2::new(outcomes, elements)
}

/// Which observable the state is an eigenvector of, with its eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EigenRole {
    A(f64),
    B(f64),
}

pub fn eigen_role(a: &Observable, b: &Observable, psi: &PureState) -> Result<Option<EigenRole>> {
    check_triple(a, b, psi)?;
    if let Some(a0) = a.eigenvalue_of(psi)? {
        return Ok(Some(EigenRole::A(a0)));
    }
    Ok(b.eigenvalue_of(psi)?.map(EigenRole::B))
}

/// Exact measurement of the other observable, with the output for the one
/// having `ψ` as eigenvector held at its eigenvalue.
pub fn construct_eigenstate_measurement(a: &Observable, b: &Observable, psi: &PureState) -> Result<SimultaneousProcess> {
    let (model, f_const, g_const) = match eigen_role(a, b, psi)?.ok_or(Error::NotEigenstate)? {
        EigenRole::A(a0) => (von_neumann_model(b), Some(a0), None),
        EigenRole::B(b0) => (von_neumann_model(a), None, Some(b0)),
    };
    let values = model.meter().values();
    let map = |constant: Option<f64>| match constant {
        Some(v) => OutcomeMap::constant(&values, v),
        None => OutcomeMap::identity(&values),
    };
    let (f, g) = (map(f_const), map(g_const));
    SimultaneousProcess::new(model, f, g)
}

/// Witness for `A ↔_ψ B`: an exact measurement of the joint observable
/// whose spectral projections are the nonzero meets `E^A(a) ∧ E^B(b)`
/// (plus their orthocomplement), read out through `f(j) = a_j`, `g(j) = b_j`.
/// On the range of the meets it agrees with `A` and `B`, and `ψ` lies there.
pub fn construct_commuting_measurement(a: &Observable, b: &Observable, psi: &PureState) -> Result<SimultaneousProcess> {
    if !commute_in_state(a, b, psi)?.holds() {
        return Err(Error::PreconditionUnmet("observables do not commute in this state".into()));
    }
    let d = a.dim();
    let mut labels = Vec::new();
    let mut projections = Vec::new();
    let mut covered = CMatrix::zeros(d, d);
    for sa in a.spectrum() {
        for sb in b.spectrum() {
            let meet = linalg::projection_meet(&sa.projection, &sb.projection)?;
            if !meet.is_zero() {
                covered += meet.matrix();
                labels.push((sa.value, sb.value));
                projections.push(meet.into_matrix());
            }
        }
    }
    let rest = CMatrix::identity(d, d) - covered;
    if Projection::new(rest.clone()).map(|p| !p.is_zero())? {
        labels.push((a.values()[0], b.values()[0]));
        projections.push(rest);
    }
    let indices: Vec<f64> = (0..labels.len()).map(|j| j as f64).collect();
    let joint = Observable::from_spectrum(&indices, projections)?;
    let model = von_neumann_model(&joint);
    let f = OutcomeMap::from_pairs(indices.iter().zip(&labels).map(|(&j, l)| (j, l.0)).collect());
    let g = OutcomeMap::from_pairs(indices.iter().zip(&labels).map(|(&j, l)| (j, l.1)).collect());
    SimultaneousProcess::new(model, f, g)
}

/// Same statistics through a larger probe `K ⊗ C^m`: probe state
/// `W(ξ ⊗ η)`, interaction `(I⊗V)(U⊗I)(I⊗W†)` and meter `V(M⊗I)V†` with
/// random unitaries `V`, `W` and a random ancilla state `η`.
pub fn dress_with_ancilla(sp: &SimultaneousProcess, ancilla_dim: usize, rng: &mut impl Rng) -> Result<SimultaneousProcess> {
    let base = sp.base();
    let d = base.system_dim();
    let km = base.probe_dim() * ancilla_dim;
    let eta = random::state(rng, ancilla_dim);
    let w = random::unitary(rng, km);
    let v = random::unitary(rng, km);
    let xi = PureState::new(&w * base.probe_state().tensor(&eta).vector())?;
    let id_h = CMatrix::identity(d, d);
    let id_m = CMatrix::identity(ancilla_dim, ancilla_dim);
    let u = linalg::tensor(&id_h, &v) * linalg::tensor(base.unitary(), &id_m) * linalg::tensor(&id_h, &w.adjoint());
    let meter = base.meter().tensor_identity(ancilla_dim).conjugate(&v.adjoint())?;
    SimultaneousProcess::new(MeasuringProcess::new(xi, u, meter)?, sp.f_map().clone(), sp.g_map().clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dim2Report {
    pub simul: bool,
    pub weak_nonneg: bool,
    pub commute_or_eigen: bool,
    pub consistent: bool,
    pub method: Method,
}

/// For a qubit: simultaneous measurability, nonnegativity of the weak joint
/// distribution, and "commute in ψ or ψ is an eigenstate of A or B" agree.
/// `simul` is decided constructively by building and verifying a witness.
pub fn dim2_characterization(a: &Observable, b: &Observable, psi: &PureState) -> Result<Dim2Report> {
    if a.dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, found: a.dim() });
    }
    check_triple(a, b, psi)?;
    let weak_nonneg = is_weak_jpd(&weak_jqpd(a, b, psi)?);
    let commute = commute_in_state(a, b, psi)?.holds();
    let eigen = eigen_role(a, b, psi)?.is_some();
    let (simul, method) = if commute {
        let sp = construct_commuting_measurement(a, b, psi)?;
        (verify_simultaneous(&sp, a, b, psi)?.is_simultaneous, Method::CommutingCase)
    } else if eigen {
        let sp = construct_eigenstate_measurement(a, b, psi)?;
        (verify_simultaneous(&sp, a, b, psi)?.is_simultaneous, Method::EigenstateCase)
    } else {
        (false, Method::Dim2Case)
    };
    let commute_or_eigen = commute || eigen;
    Ok(Dim2Report {
        simul,
        weak_nonneg,
        commute_or_eigen,
        consistent: simul == weak_nonneg && weak_nonneg == commute_or_eigen,
        method,
    })
}

/// Real coordinates of a Hermitian matrix, isometric for the Frobenius norm.
fn hermitian_coords(h: &CMatrix, out: &mut [f64]) {
    let d = h.nrows();
    let s = std::f64::consts::SQRT_2;
    let mut k = 0;
    for i in 0..d {
        out[k] = h[(i, i)].re;
        k += 1;
        for j in i + 1..d {
            out[k] = s * h[(i, j)].re;
            out[k + 1] = s * h[(i, j)].im;
            k += 2;
        }
    }
}

fn hermitian_from_coords(p: &[f64], d: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = CMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        h[(i, i)] = c(p[k], 0.0);
        k += 1;
        for j in i + 1..d {
            let z = c(s * p[k], s * p[k + 1]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

/// Linear constraints of the search as a real system `L p = r`.
struct MarginalSystem {
    d: usize,
    outcomes: Vec<(f64, f64)>,
    /// Orthogonal projector onto `ker L`.
    kernel: DMatrix<f64>,
    /// Minimal-norm solution `L⁺ r`.
    offset: DVector<f64>,
}

impl MarginalSystem {
    fn new(a: &Observable, b: &Observable, psi: &PureState) -> Result<Self> {
        let d = a.dim();
        let (sa, sb) = marginal_subspaces(a, b, psi, MarginalMode::Simul)?;
        let na = a.spectrum().len();
        let nb = b.spectrum().len();
        let per = d * d;
        let n = na * nb * per;
        let outcomes: Vec<(f64, f64)> = a.values().iter().flat_map(|&x| b.values().into_iter().map(move |y| (x, y))).collect();

        // Each equation block maps the family to a complex vector; split into real rows.
        let apply = |family: &[CMatrix]| -> Vec<f64> {
            let mut rows = Vec::new();
            let mut push = |w: CVector| {
                for z in w.iter() {
                    rows.push(z.re);
                    rows.push(z.im);
                }
            };
            for i in 0..na {
                let sum: CMatrix = (0..nb).map(|j| &family[i * nb + j]).fold(CMatrix::zeros(d, d), |acc, m| acc + m);
                for v in sa.basis() {
                    push(&sum * v);
                }
            }
            for j in 0..nb {
                let sum: CMatrix = (0..na).map(|i| &family[i * nb + j]).fold(CMatrix::zeros(d, d), |acc, m| acc + m);
                for w in sb.basis() {
                    push(&sum * w);
                }
            }
            let total: CMatrix = family.iter().fold(CMatrix::zeros(d, d), |acc, m| acc + m);
            push(CVector::from_iterator(per, total.iter().copied()));
            rows
        };

        let zero_family = vec![CMatrix::zeros(d, d); na * nb];
        let m = apply(&zero_family).len();
        let mut l = DMatrix::<f64>::zeros(m, n);
        let mut unit = vec![0.0; per];
        for col in 0..n {
            let (slot, k) = (col / per, col % per);
            unit.iter_mut().for_each(|u| *u = 0.0);
            unit[k] = 1.0;
            let mut family = zero_family.clone();
            family[slot] = hermitian_from_coords(&unit, d);
            for (r, val) in apply(&family).into_iter().enumerate() {
                l[(r, col)] = val;
            }
        }

        // Right-hand side: E^A(x)v, E^B(y)w and the identity.
        let mut rhs = Vec::with_capacity(m);
        let mut push = |w: CVector| {
            for z in w.iter() {
                rhs.push(z.re);
                rhs.push(z.im);
            }
        };
        for s in a.spectrum() {
            for v in sa.basis() {
                push(s.projection.apply(v));
            }
        }
        for s in b.spectrum() {
            for w in sb.basis() {
                push(s.projection.apply(w));
            }
        }
        push(CVector::from_iterator(per, CMatrix::identity(d, d).iter().copied()));
        let rhs = DVector::from_vec(rhs);

        let pinv = l.clone().pseudo_inverse(1e-10).map_err(|e| Error::Malformed(e.to_string()))?;
        let kernel = DMatrix::<f64>::identity(n, n) - &pinv * &l;
        let offset = pinv * rhs;
        Ok(Self { d, outcomes, kernel, offset })
    }

    fn unpack(&self, p: &DVector<f64>) -> Vec<CMatrix> {
        let per = self.d * self.d;
        p.as_slice().chunks(per).map(|chunk| hermitian_from_coords(chunk, self.d)).collect()
    }

    fn pack(&self, family: &[CMatrix]) -> DVector<f64> {
        let per = self.d * self.d;
        let mut p = DVector::zeros(family.len() * per);
        for (k, m) in family.iter().enumerate() {
            hermitian_coords(m, &mut p.as_mut_slice()[k * per..(k + 1) * per]);
        }
        p
    }

    fn project_affine(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.offset + &self.kernel * p
    }
}

fn clip_positive(m: &CMatrix) -> (CMatrix, f64) {
    let e = linalg::eigh_unchecked(m);
    let lowest = e.values.first().copied().unwrap_or(0.0);
    let clipped: Vec<f64> = e.values.iter().map(|&v| v.max(0.0)).collect();
    (&e.vectors * linalg::diag(&clipped) * e.vectors.adjoint(), lowest)
}

/// `S^{-1/2} Π S^{-1/2}` with `S = Σ Π`, restoring completeness.
fn renormalize(family: &[CMatrix]) -> Option<Vec<CMatrix>> {
    let d = family[0].nrows();
    let total = family.iter().fold(CMatrix::zeros(d, d), |acc, m| acc + m);
    let e = linalg::eigh_unchecked(&linalg::hermitian_part(&total));
    if e.values.first().copied().unwrap_or(0.0) <= 1e-12 {
        return None;
    }
    let inv_sqrt = linalg::positive_power(&total, -0.5, 1e-12);
    Some(family.iter().map(|m| linalg::hermitian_part(&(&inv_sqrt * m * &inv_sqrt))).collect())
}

const SEARCH_TOL: f64 = 1e-7;

fn accept(system: &MarginalSystem, family: Vec<CMatrix>, a: &Observable, b: &Observable, psi: &PureState) -> Option<Povm2> {
    let povm = Povm2::with_tolerance(system.outcomes.clone(), family, SEARCH_TOL).ok()?;
    let r = check_povm_marginals(&povm, a, b, psi, MarginalMode::Simul).ok()?;
    (r.a_residual <= SEARCH_TOL && r.b_residual <= SEARCH_TOL).then_some(povm)
}

/// Alternating projection between the affine set of Hermitian families with
/// the required marginals on `C(A, ψ)` and `C(B, ψ)` (including
/// completeness) and the cone of positive families.
///
/// Starts from the symmetrized products `½{E^A(x), E^B(y)}` perturbed by
/// seeded noise. Returns a POVM meeting the marginal and POVM conditions
/// within `1e-7`, or `None` after `iters` sweeps, which is inconclusive.
pub fn feasibility_search(a: &Observable, b: &Observable, psi: &PureState, iters: usize, seed: u64) -> Result<Option<Povm2>> {
    check_triple(a, b, psi)?;
    let system = MarginalSystem::new(a, b, psi)?;
    let mut rng = random::instance_rng(seed, 0);
    let mut start = Vec::new();
    for sa in a.spectrum() {
        for sb in b.spectrum() {
            let (e, f) = (sa.projection.matrix(), sb.projection.matrix());
            let jordan = (e * f + f * e) * c(0.5, 0.0);
            start.push(jordan + random::hermitian(&mut rng, a.dim()) * c(0.05, 0.0));
        }
    }
    let mut p = system.pack(&start);
    for _ in 0..iters {
        p = system.project_affine(&p);
        let family = system.unpack(&p);
        let mut lowest = f64::INFINITY;
        let clipped: Vec<CMatrix> = family
            .iter()
            .map(|m| {
                let (q, low) = clip_positive(m);
                lowest = lowest.min(low);
                q
            })
            .collect();
        if lowest >= -SEARCH_TOL {
            if let Some(povm) = accept(&system, family, a, b, psi) {
                return Ok(Some(povm));
            }
        }
        if let Some(snapped) = renormalize(&clipped) {
            if let Some(povm) = accept(&system, snapped, a, b, psi) {
                return Ok(Some(povm));
            }
        }
        p = system.pack(&clipped);
    }
    Ok(None)
}

/// Sampling check of the state-independent statement: `A` and `B` are
/// simultaneously measurable in every state iff they commute. When they
/// commute, a witness is built and verified in each sampled state. When
/// they do not, a sampled state refutes simultaneity if the weak joint
/// distribution there is not a probability distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateIndependenceReport {
    pub globally_commute: bool,
    pub commutator_norm: f64,
    pub sampled: usize,
    pub verified: usize,
    pub refuted: usize,
    pub consistent: bool,
}

pub fn state_independence_check(a: &Observable, b: &Observable, states: &[PureState]) -> Result<StateIndependenceReport> {
    check_dim(a.dim(), b.dim())?;
    let commutator_norm = max_abs(&commutator(a.matrix(), b.matrix()));
    let scale = linalg::tol_scale(a.matrix()) * linalg::tol_scale(b.matrix());
    let globally_commute = commutator_norm <= tol::CONDITION * scale;
    let mut verified = 0;
    let mut refuted = 0;
    for psi in states {
        if globally_commute {
            let sp = construct_commuting_measurement(a, b, psi)?;
            if verify_simultaneous(&sp, a, b, psi)?.is_simultaneous {
                verified += 1;
            }
        } else if !is_weak_jpd(&weak_jqpd(a, b, psi)?) {
            refuted += 1;
        }
    }
    let consistent = if globally_commute { verified == states.len() } else { refuted > 0 };
    Ok(StateIndependenceReport { globally_commute, commutator_norm, sampled: states.len(), verified, refuted, consistent })
}
