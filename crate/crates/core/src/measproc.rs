//! Measuring processes `(K, ξ, U, M)`, their POVMs and output statistics,
//! noise operators, rms errors and the uncertainty relations.
//!
//! Heisenberg-picture operators are formed on `H ⊗ K` with the system as the
//! slow index. The meter `M(Δt) = U†(I⊗M)U` keeps the spectral values of `M`
//! exactly, with spectral projections `U†(I⊗E^M(x))U`, so outcome maps given
//! on the meter's values apply to it directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, check_dim, commutator, max_abs, probe_compress, sandwich, CMatrix, MatrixJson,
};
use crate::observables::{born_distribution, std_dev, Observable, ObservableJson, OutcomeDistribution, PureState};
use crate::tol;

/// System–probe interaction with probe preparation and meter.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuringProcess {
    probe_state: PureState,
    unitary: CMatrix,
    meter: Observable,
}

impl MeasuringProcess {
    pub fn new(probe_state: PureState, unitary: CMatrix, meter: Observable) -> Result<Self> {
        let k = probe_state.dim();
        check_dim(k, meter.dim())?;
        let n = linalg::check_square(&unitary)?;
        if n == 0 || n % k != 0 {
            return Err(Error::DimensionMismatch { expected: k, found: n });
        }
        let deviation = linalg::unitarity_deviation(&unitary);
        if deviation > tol::UNITARY {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { probe_state, unitary, meter })
    }

    /// `U = I`, probe in `|0⟩`, meter `diag(0, 1, …, k−1)`.
    pub fn trivial(system_dim: usize, probe_dim: usize) -> Self {
        let values: Vec<f64> = (0..probe_dim).map(|j| j as f64).collect();
        let n = system_dim * probe_dim;
        Self {
            probe_state: PureState::basis(probe_dim, 0),
            unitary: CMatrix::identity(n, n),
            meter: Observable::diagonal(&values),
        }
    }

    pub fn system_dim(&self) -> usize {
        self.unitary.nrows() / self.probe_dim()
    }

    pub fn probe_dim(&self) -> usize {
        self.probe_state.dim()
    }

    pub fn probe_state(&self) -> &PureState {
        &self.probe_state
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn meter(&self) -> &Observable {
        &self.meter
    }

    /// `|ψ⟩ ⊗ |ξ⟩`.
    pub fn composite_state(&self, psi: &PureState) -> Result<PureState> {
        check_dim(self.system_dim(), psi.dim())?;
        Ok(psi.tensor(&self.probe_state))
    }
}

/// `M(Δt) = U†(I ⊗ M)U`.
pub fn heisenberg_meter(mp: &MeasuringProcess) -> Observable {
    mp.meter
        .identity_tensor(mp.system_dim())
        .conjugate(&mp.unitary)
        .expect("unitary matches composite dimension")
}

/// Family of positive operators summing to the identity, labelled by `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Povm<L> {
    pub outcomes: Vec<L>,
    #[serde(with = "linalg::matrices_serde")]
    pub elements: Vec<CMatrix>,
}

/// POVM over real outcomes.
pub type Povm1 = Povm<f64>;
/// POVM over pairs of real outcomes.
pub type Povm2 = Povm<(f64, f64)>;

impl<L: Clone> Povm<L> {
    /// Validates positivity (`λ_min ≥ −POVM`) and completeness within `POVM`.
    pub fn new(outcomes: Vec<L>, elements: Vec<CMatrix>) -> Result<Self> {
        Self::with_tolerance(outcomes, elements, tol::POVM)
    }

    pub fn with_tolerance(outcomes: Vec<L>, elements: Vec<CMatrix>, tolerance: f64) -> Result<Self> {
        let p = Self { outcomes, elements };
        p.validate(tolerance)?;
        Ok(p)
    }

    pub fn validate(&self, tolerance: f64) -> Result<()> {
        if self.outcomes.len() != self.elements.len() || self.elements.is_empty() {
            return Err(Error::InvalidPovm(format!(
                "{} outcomes for {} elements",
                self.outcomes.len(),
                self.elements.len()
            )));
        }
        let d = linalg::check_square(&self.elements[0])?;
        for e in &self.elements {
            check_dim(d, linalg::check_square(e)?)?;
            linalg::check_hermitian(e)?;
        }
        let (positivity, completeness) = self.defects();
        if positivity > tolerance {
            return Err(Error::InvalidPovm(format!("element has eigenvalue {:.3e}", -positivity)));
        }
        if completeness > tolerance {
            return Err(Error::InvalidPovm(format!("elements sum to identity only within {completeness:.3e}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    /// `(max negative eigenvalue magnitude, ‖Σ Π − I‖_max)`.
    pub fn defects(&self) -> (f64, f64) {
        let d = self.dim();
        let mut sum = CMatrix::zeros(d, d);
        let mut positivity: f64 = 0.0;
        for e in &self.elements {
            sum += e;
            let eig = linalg::eigh_unchecked(&linalg::hermitian_part(e));
            positivity = positivity.max(-eig.values.first().copied().unwrap_or(0.0));
        }
        (positivity.max(0.0), max_abs(&(sum - CMatrix::identity(d, d))))
    }

    /// `⟨ψ|Π(x)|ψ⟩` for every outcome.
    pub fn probabilities(&self, psi: &PureState) -> Result<Vec<(L, f64)>> {
        check_dim(self.dim(), psi.dim())?;
        let v = psi.vector();
        Ok(self
            .outcomes
            .iter()
            .cloned()
            .zip(self.elements.iter().map(|e| sandwich(v, e, v).re))
            .collect())
    }
}

impl Povm1 {
    pub fn element(&self, x: f64) -> Option<&CMatrix> {
        self.outcomes
            .iter()
            .position(|&o| (o - x).abs() <= tol::OUTCOME_MATCH)
            .map(|k| &self.elements[k])
    }
}

impl Povm2 {
    pub fn element(&self, x: f64, y: f64) -> Option<&CMatrix> {
        self.outcomes
            .iter()
            .position(|&(a, b)| (a - x).abs() <= tol::OUTCOME_MATCH && (b - y).abs() <= tol::OUTCOME_MATCH)
            .map(|k| &self.elements[k])
    }
}

/// `Π(x) = Tr_K[E^{M(Δt)}(x)(I ⊗ |ξ⟩⟨ξ|)]`, one element per meter value.
pub fn extract_povm(mp: &MeasuringProcess) -> Povm1 {
    let md = heisenberg_meter(mp);
    let xi = mp.probe_state.vector();
    let (outcomes, elements) = md
        .spectrum()
        .iter()
        .map(|s| {
            let e = probe_compress(s.projection.matrix(), xi).expect("composite dimension");
            (s.value, linalg::hermitian_part(&e))
        })
        .unzip();
    Povm { outcomes, elements }
}

/// Output statistics computed on the composite and through the POVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    /// `Pr{M(Δt) = x ‖ ψ⊗ξ}`.
    pub distribution: OutcomeDistribution,
    /// `max_x |Pr{M(Δt)=x ‖ ψ⊗ξ} − ⟨ψ|Π(x)|ψ⟩|`.
    pub cross_residual: f64,
}

pub fn output_distribution(mp: &MeasuringProcess, psi: &PureState) -> Result<OutputDistribution> {
    let composite = mp.composite_state(psi)?;
    let born = born_distribution(&heisenberg_meter(mp), &composite)?;
    let povm = extract_povm(mp);
    let via_povm = OutcomeDistribution::from_raw(povm.probabilities(psi)?);
    Ok(OutputDistribution { cross_residual: born.max_difference(&via_povm), distribution: born })
}

/// Von Neumann model of an exact measurement of `b`: probe `C^n` for `n`
/// spectral values, probe state `|0⟩`, controlled shift
/// `U = Σ_j E^B(b_j) ⊗ S^j` and meter `Σ_j b_j |j⟩⟨j|`.
pub fn von_neumann_model(b: &Observable) -> MeasuringProcess {
    let n = b.spectrum().len();
    let d = b.dim();
    let mut u = CMatrix::zeros(d * n, d * n);
    for (j, s) in b.spectrum().iter().enumerate() {
        let mut shift = CMatrix::zeros(n, n);
        for k in 0..n {
            shift[((k + j) % n, k)] = linalg::ONE;
        }
        u += linalg::tensor(s.projection.matrix(), &shift);
    }
    let meter = Observable::diagonal(&b.values());
    MeasuringProcess { probe_state: PureState::basis(n, 0), unitary: u, meter }
}

/// Real function on the meter's spectral values, stored as `(x, f(x))` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutcomeMap {
    pairs: Vec<(f64, f64)>,
}

impl OutcomeMap {
    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Self {
        Self { pairs }
    }

    pub fn identity(values: &[f64]) -> Self {
        Self { pairs: values.iter().map(|&x| (x, x)).collect() }
    }

    pub fn constant(values: &[f64], value: f64) -> Self {
        Self { pairs: values.iter().map(|&x| (x, value)).collect() }
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn get(&self, x: f64) -> Result<f64> {
        self.pairs
            .iter()
            .filter(|(k, _)| (k - x).abs() <= tol::OUTCOME_MATCH)
            .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()))
            .map(|&(_, y)| y)
            .ok_or(Error::UnmappedOutcome { value: x })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Measuring process with two output maps `f` (for `A`) and `g` (for `B`).
#[derive(Debug, Clone, PartialEq)]
pub struct SimultaneousProcess {
    base: MeasuringProcess,
    f_map: OutcomeMap,
    g_map: OutcomeMap,
}

impl SimultaneousProcess {
    /// Fails with `UnmappedOutcome` unless both maps cover every meter value.
    pub fn new(base: MeasuringProcess, f_map: OutcomeMap, g_map: OutcomeMap) -> Result<Self> {
        for x in base.meter.values() {
            f_map.get(x)?;
            g_map.get(x)?;
        }
        Ok(Self { base, f_map, g_map })
    }

    /// Both maps the identity on the meter's values.
    pub fn identity_maps(base: MeasuringProcess) -> Self {
        let values = base.meter.values();
        Self { f_map: OutcomeMap::identity(&values), g_map: OutcomeMap::identity(&values), base }
    }

    pub fn base(&self) -> &MeasuringProcess {
        &self.base
    }

    pub fn f_map(&self) -> &OutcomeMap {
        &self.f_map
    }

    pub fn g_map(&self) -> &OutcomeMap {
        &self.g_map
    }

    pub fn map(&self, side: Side) -> &OutcomeMap {
        match side {
            Side::A => &self.f_map,
            Side::B => &self.g_map,
        }
    }

    /// `f(M(Δt))` or `g(M(Δt))` by function calculus.
    pub fn readout(&self, side: Side) -> Observable {
        let map = self.map(side);
        heisenberg_meter(&self.base).map_spectrum(|x| map.get(x).expect("maps validated at construction"))
    }

    /// The single-output process `(K, ξ, U, f(M))` or `(K, ξ, U, g(M))`.
    pub fn marginal_process(&self, side: Side) -> MeasuringProcess {
        let map = self.map(side);
        let meter = self.base.meter.map_spectrum(|x| map.get(x).expect("maps validated at construction"));
        MeasuringProcess { meter, ..self.base.clone() }
    }
}

/// `N(A) = f(M(Δt)) − A ⊗ I` or `N(B) = g(M(Δt)) − B ⊗ I`.
pub fn noise_operator(sp: &SimultaneousProcess, target: &Observable, side: Side) -> Result<CMatrix> {
    check_dim(sp.base.system_dim(), target.dim())?;
    let lifted = linalg::tensor(target.matrix(), &CMatrix::identity(sp.base.probe_dim(), sp.base.probe_dim()));
    Ok(sp.readout(side).matrix() - lifted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub eps_a: f64,
    pub eps_b: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// `½ |⟨ψ|[A, B]|ψ⟩|`.
    pub commutator_bound: f64,
}

/// `½ |⟨ψ|[A, B]|ψ⟩|`.
pub fn commutator_bound(a: &Observable, b: &Observable, psi: &PureState) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), psi.dim())?;
    let v = psi.vector();
    Ok(0.5 * sandwich(v, &commutator(a.matrix(), b.matrix()), v).norm())
}

/// rms errors `ε = ‖N |ψ⟩|ξ⟩‖` with the standard deviations and commutator bound.
pub fn rms_errors(sp: &SimultaneousProcess, a: &Observable, b: &Observable, psi: &PureState) -> Result<ErrorBudget> {
    let composite = sp.base.composite_state(psi)?;
    let v = composite.vector();
    let eps_a = (noise_operator(sp, a, Side::A)? * v).norm();
    let eps_b = (noise_operator(sp, b, Side::B)? * v).norm();
    Ok(ErrorBudget {
        eps_a,
        eps_b,
        sigma_a: std_dev(a, psi)?,
        sigma_b: std_dev(b, psi)?,
        commutator_bound: commutator_bound(a, b, psi)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    /// `εAεB + εAσB + σAεB`.
    pub uup_lhs: f64,
    pub uup_holds: bool,
    /// `εAεB`.
    pub hup_lhs: f64,
    pub hup_holds: bool,
    pub rhs: f64,
}

pub fn uncertainty_report(budget: &ErrorBudget) -> UncertaintyReport {
    let ErrorBudget { eps_a, eps_b, sigma_a, sigma_b, commutator_bound } = *budget;
    let uup_lhs = eps_a * eps_b + eps_a * sigma_b + sigma_a * eps_b;
    let hup_lhs = eps_a * eps_b;
    UncertaintyReport {
        uup_lhs,
        uup_holds: uup_lhs >= commutator_bound - 1e-9,
        hup_lhs,
        hup_holds: hup_lhs >= commutator_bound - 1e-9,
        rhs: commutator_bound,
    }
}

/// Whether the mean noise `⟨ψ⊗ξ|N|ψ⊗ξ⟩` is the same for every object state
/// `ψ`, i.e. `Tr_K[N (I ⊗ |ξ⟩⟨ξ|)] ∝ I`. When it holds for both noise
/// operators, `ε(A)ε(B) ≥ ½|⟨[A,B]⟩|` follows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanErrorCheck {
    pub spread_a: f64,
    pub spread_b: f64,
    pub independent: bool,
}

fn mean_noise_spread(noise: &CMatrix, xi: &PureState) -> Result<f64> {
    let t = probe_compress(noise, xi.vector())?;
    let d = t.nrows();
    let mean = t.trace() / c(d as f64, 0.0);
    Ok(max_abs(&(t - CMatrix::identity(d, d) * mean)))
}

pub fn mean_error_check(sp: &SimultaneousProcess, a: &Observable, b: &Observable) -> Result<MeanErrorCheck> {
    let xi = sp.base.probe_state();
    let spread_a = mean_noise_spread(&noise_operator(sp, a, Side::A)?, xi)?;
    let spread_b = mean_noise_spread(&noise_operator(sp, b, Side::B)?, xi)?;
    Ok(MeanErrorCheck { spread_a, spread_b, independent: spread_a <= 1e-8 && spread_b <= 1e-8 })
}

/// Outcome map wire format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutcomeMapJson {
    /// `"identity"`.
    Named(String),
    Constant { constant: f64 },
    Pairs(Vec<[f64; 2]>),
}

impl OutcomeMapJson {
    pub fn resolve(&self, meter_values: &[f64]) -> Result<OutcomeMap> {
        match self {
            OutcomeMapJson::Named(n) if n == "identity" => Ok(OutcomeMap::identity(meter_values)),
            OutcomeMapJson::Named(n) => Err(Error::Malformed(format!("unknown outcome map {n:?}"))),
            OutcomeMapJson::Constant { constant } => Ok(OutcomeMap::constant(meter_values, *constant)),
            OutcomeMapJson::Pairs(p) => Ok(OutcomeMap::from_pairs(p.iter().map(|q| (q[0], q[1])).collect())),
        }
    }
}

/// Process wire format with matrices in [`MatrixJson`] form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessJson {
    pub probe_dim: usize,
    pub probe_state: PureState,
    pub unitary: MatrixJson,
    pub meter: ObservableJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_map: Option<OutcomeMapJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_map: Option<OutcomeMapJson>,
}

impl ProcessJson {
    pub fn from_process(sp: &SimultaneousProcess) -> Self {
        let pairs = |m: &OutcomeMap| OutcomeMapJson::Pairs(m.pairs().iter().map(|&(x, y)| [x, y]).collect());
        Self {
            probe_dim: sp.base.probe_dim(),
            probe_state: sp.base.probe_state.clone(),
            unitary: MatrixJson::from(&sp.base.unitary),
            meter: ObservableJson::spectral(&sp.base.meter),
            f_map: Some(pairs(&sp.f_map)),
            g_map: Some(pairs(&sp.g_map)),
        }
    }

    /// Missing maps default to the identity.
    pub fn to_process(&self) -> Result<SimultaneousProcess> {
        check_dim(self.probe_dim, self.probe_state.dim())?;
        let meter = self.meter.to_observable()?;
        let base = MeasuringProcess::new(self.probe_state.clone(), CMatrix::try_from(self.unitary.clone())?, meter)?;
        let values = base.meter.values();
        let identity = OutcomeMapJson::Named("identity".into());
        let f = self.f_map.as_ref().unwrap_or(&identity).resolve(&values)?;
        let g = self.g_map.as_ref().unwrap_or(&identity).resolve(&values)?;
        SimultaneousProcess::new(base, f, g)
    }
}
