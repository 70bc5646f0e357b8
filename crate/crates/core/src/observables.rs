//! Observables with cached spectral decompositions, pure states and Born-rule
//! statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, check_dim, check_hermitian, hermitian_part, max_abs, tensor, tensor_vec, CMatrix,
    CVector, Projection, C64, ONE,
};
use crate::tol;

/// One eigenvalue cluster and its spectral projection `E^A(a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralValue {
    pub value: f64,
    pub projection: Projection,
}

/// Hermitian operator together with its spectral resolution.
///
/// Spectral values are strictly ascending; the projections are mutually
/// orthogonal and sum to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
    spectrum: Vec<SpectralValue>,
}

/// Spectral decomposition of `m`, merging eigenvalues that lie within
/// `cluster_tol * max(1, ‖m‖_max)` of their neighbour. A merged cluster is
/// labelled by the mean of its eigenvalues.
pub fn spectralize(m: &CMatrix, cluster_tol: f64) -> Result<Observable> {
    check_hermitian(m)?;
    let h = hermitian_part(m);
    let eig = linalg::eigh_unchecked(&h);
    let width = cluster_tol * linalg::tol_scale(&h);

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, &v) in eig.values.iter().enumerate() {
        match clusters.last_mut() {
            Some(cl) if v - eig.values[*cl.last().unwrap()] <= width => cl.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    let spectrum = clusters
        .into_iter()
        .map(|cl| {
            let value = cl.iter().map(|&k| eig.values[k]).sum::<f64>() / cl.len() as f64;
            let mut q = CMatrix::zeros(h.nrows(), cl.len());
            for (dst, &k) in cl.iter().enumerate() {
                q.set_column(dst, &eig.vectors.column(k));
            }
            SpectralValue { value, projection: Projection::from_orthonormal_columns(&q) }
        })
        .collect();
    Ok(Observable { matrix: h, spectrum })
}

impl Observable {
    /// Spectralizes with the default clustering width.
    pub fn new(m: &CMatrix) -> Result<Self> {
        spectralize(m, tol::CLUSTER)
    }

    /// Builds an observable from explicit spectral data. Values equal to
    /// within rounding are merged; projections must be orthogonal and resolve the identity.
    pub fn from_spectrum(values: &[f64], projections: Vec<CMatrix>) -> Result<Self> {
        if values.len() != projections.len() || values.is_empty() {
            return Err(Error::InvalidSpectrum(format!(
                "{} values for {} projections",
                values.len(),
                projections.len()
            )));
        }
        let dim = linalg::check_square(&projections[0])?;
        let mut parts: Vec<(f64, CMatrix)> = Vec::with_capacity(values.len());
        for (&v, p) in values.iter().zip(projections) {
            if !v.is_finite() {
                return Err(Error::InvalidSpectrum(format!("non-finite spectral value {v}")));
            }
            check_dim(dim, linalg::check_square(&p)?)?;
            parts.push((v, p));
        }
        parts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, CMatrix)> = Vec::new();
        for (v, p) in parts {
            match merged.last_mut() {
                Some((last, acc)) if (*last - v).abs() <= 1e-12 * v.abs().max(1.0) => *acc += p,
                _ => merged.push((v, p)),
            }
        }
        let spectrum = merged
            .into_iter()
            .map(|(value, p)| Ok(SpectralValue { value, projection: Projection::new(p)? }))
            .collect::<Result<Vec<_>>>()?;
        let obs = Self::assemble(spectrum);
        obs.check_resolution()?;
        Ok(obs)
    }

    /// Assembles the matrix `Σ a E(a)` from trusted spectral parts.
    pub(crate) fn assemble(spectrum: Vec<SpectralValue>) -> Self {
        let dim = spectrum[0].projection.dim();
        let mut matrix = CMatrix::zeros(dim, dim);
        for s in &spectrum {
            matrix += s.projection.matrix() * c(s.value, 0.0);
        }
        Self { matrix, spectrum }
    }

    fn check_resolution(&self) -> Result<()> {
        let dim = self.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for s in &self.spectrum {
            sum += s.projection.matrix();
        }
        let completeness = max_abs(&(sum - CMatrix::identity(dim, dim)));
        if completeness > tol::PROJ {
            return Err(Error::InvalidSpectrum(format!(
                "projections do not sum to identity (deviation {completeness:.3e})"
            )));
        }
        for (i, s) in self.spectrum.iter().enumerate() {
            for t in &self.spectrum[i + 1..] {
                let overlap = max_abs(&(s.projection.matrix() * t.projection.matrix()));
                if overlap > 1e-8 {
                    return Err(Error::InvalidSpectrum(format!(
                        "projections for {} and {} overlap ({overlap:.3e})",
                        s.value, t.value
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn pauli_x() -> Self {
        Self::new(&CMatrix::from_row_slice(2, 2, &[linalg::ZERO, ONE, ONE, linalg::ZERO])).unwrap()
    }

    pub fn pauli_y() -> Self {
        Self::new(&CMatrix::from_row_slice(2, 2, &[linalg::ZERO, c(0.0, -1.0), c(0.0, 1.0), linalg::ZERO]))
            .unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
            spectrum: vec![SpectralValue { value: 1.0, projection: Projection::identity(dim) }],
        }
    }

    /// Diagonal observable in the computational basis, built without an
    /// eigensolver so that spectral values are exactly the given entries.
    pub fn diagonal(entries: &[f64]) -> Self {
        let mut values: Vec<f64> = entries.to_vec();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let spectrum = values
            .into_iter()
            .map(|v| {
                let mask: Vec<f64> = entries.iter().map(|&e| if e == v { 1.0 } else { 0.0 }).collect();
                let rank = mask.iter().filter(|&&m| m == 1.0).count();
                SpectralValue { value: v, projection: trusted_projection(linalg::diag(&mask), rank) }
            })
            .collect();
        Self::assemble(spectrum)
    }

    /// Named presets: `pauli_x`, `pauli_y`, `pauli_z`, `identity(d)`.
    pub fn preset(name: &str) -> Option<Self> {
        let name = name.trim();
        match name {
            "pauli_x" => Some(Self::pauli_x()),
            "pauli_y" => Some(Self::pauli_y()),
            "pauli_z" => Some(Self::pauli_z()),
            _ => {
                let inner = name.strip_prefix("identity(")?.strip_suffix(')')?;
                let d: usize = inner.trim().parse().ok()?;
                (d > 0).then(|| Self::identity(d))
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &[SpectralValue] {
        &self.spectrum
    }

    pub fn values(&self) -> Vec<f64> {
        self.spectrum.iter().map(|s| s.value).collect()
    }

    /// Index of the spectral value within `tol` of `x`, the nearest if several.
    pub fn find(&self, x: f64, tol: f64) -> Option<usize> {
        self.spectrum
            .iter()
            .enumerate()
            .filter(|(_, s)| (s.value - x).abs() <= tol)
            .min_by(|a, b| (a.1.value - x).abs().total_cmp(&(b.1.value - x).abs()))
            .map(|(k, _)| k)
    }

    /// `E^A(x)`, matched with the cross-observable tolerance.
    pub fn projection_for(&self, x: f64) -> Option<&Projection> {
        self.find(x, tol::OUTCOME_MATCH).map(|k| &self.spectrum[k].projection)
    }

    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        check_dim(self.dim(), psi.dim())?;
        Ok(linalg::sandwich(psi.vector(), &self.matrix, psi.vector()).re)
    }

    /// Function calculus `Σ f(a) E^A(a)`; outputs equal to each other are merged.
    pub fn map_spectrum<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        let mut parts: Vec<(f64, CMatrix)> = self
            .spectrum
            .iter()
            .map(|s| (f(s.value), s.projection.matrix().clone()))
            .collect();
        parts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut spectrum: Vec<SpectralValue> = Vec::new();
        let mut pending: Option<(f64, CMatrix, usize)> = None;
        for (v, p) in parts {
            let rank = p.trace().re.round() as usize;
            pending = match pending {
                Some((pv, pp, pr)) if (pv - v).abs() <= tol::OUTCOME_MATCH * pv.abs().max(1.0) => {
                    Some((pv, pp + p, pr + rank))
                }
                Some((pv, pp, pr)) => {
                    spectrum.push(SpectralValue { value: pv, projection: trusted_projection(pp, pr) });
                    Some((v, p, rank))
                }
                None => Some((v, p, rank)),
            };
        }
        if let Some((pv, pp, pr)) = pending {
            spectrum.push(SpectralValue { value: pv, projection: trusted_projection(pp, pr) });
        }
        Self::assemble(spectrum)
    }

    /// `A ⊗ I_K` with spectral projections `E^A(a) ⊗ I_K`.
    pub fn tensor_identity(&self, probe_dim: usize) -> Self {
        let spectrum = self
            .spectrum
            .iter()
            .map(|s| SpectralValue { value: s.value, projection: s.projection.tensor_identity(probe_dim) })
            .collect();
        Self::assemble(spectrum)
    }

    /// `A ⊗ B` with spectral projections `E^A(a) ⊗ E^B(b)` grouped by `a·b`.
    pub fn tensor(&self, other: &Observable) -> Self {
        let mut values = Vec::new();
        let mut projections = Vec::new();
        for s in &self.spectrum {
            for t in &other.spectrum {
                values.push(s.value * t.value);
                projections.push(tensor(s.projection.matrix(), t.projection.matrix()));
            }
        }
        Observable::from_spectrum(&values, projections).expect("tensor of spectral resolutions")
    }

    /// `I_H ⊗ A` with spectral projections `I_H ⊗ E^A(a)`.
    pub fn identity_tensor(&self, system_dim: usize) -> Self {
        let id = CMatrix::identity(system_dim, system_dim);
        let spectrum = self
            .spectrum
            .iter()
            .map(|s| SpectralValue {
                value: s.value,
                projection: trusted_projection(tensor(&id, s.projection.matrix()), s.projection.rank() * system_dim),
            })
            .collect();
        Self::assemble(spectrum)
    }

    /// Heisenberg-picture conjugation `U† A U`; labels are carried over exactly.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        check_dim(self.dim(), linalg::check_square(u)?)?;
        let ud = u.adjoint();
        let spectrum = self
            .spectrum
            .iter()
            .map(|s| SpectralValue {
                value: s.value,
                projection: trusted_projection(
                    hermitian_part(&(&ud * s.projection.matrix() * u)),
                    s.projection.rank(),
                ),
            })
            .collect();
        Ok(Self::assemble(spectrum))
    }

    /// The spectral value `a` with `‖Aψ − aψ‖ ≤ EIGENSTATE * max(1, ‖A‖_max)`,
    /// if `ψ` is an eigenvector.
    pub fn eigenvalue_of(&self, psi: &PureState) -> Result<Option<f64>> {
        let mean = self.expectation(psi)?;
        let v = psi.vector();
        let residual = (&self.matrix * v - v * c(mean, 0.0)).norm();
        if residual > tol::EIGENSTATE * linalg::tol_scale(&self.matrix) {
            return Ok(None);
        }
        Ok(self
            .spectrum
            .iter()
            .min_by(|a, b| (a.value - mean).abs().total_cmp(&(b.value - mean).abs()))
            .map(|s| s.value))
    }

    /// Completeness and orthogonality defects of the spectral resolution and
    /// reconstruction error of the matrix.
    pub fn resolution_defects(&self) -> (f64, f64, f64) {
        let dim = self.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        let mut recon = CMatrix::zeros(dim, dim);
        let mut ortho: f64 = 0.0;
        for (i, s) in self.spectrum.iter().enumerate() {
            sum += s.projection.matrix();
            recon += s.projection.matrix() * c(s.value, 0.0);
            for (j, t) in self.spectrum.iter().enumerate() {
                let prod = s.projection.matrix() * t.projection.matrix();
                let target = if i == j { s.projection.matrix().clone() } else { CMatrix::zeros(dim, dim) };
                ortho = ortho.max(max_abs(&(prod - target)));
            }
        }
        (
            max_abs(&(sum - CMatrix::identity(dim, dim))),
            ortho,
            max_abs(&(recon - &self.matrix)),
        )
    }
}

fn trusted_projection(m: CMatrix, rank: usize) -> Projection {
    // sums, conjugates and tensor products of validated projections
    Projection::from_parts(m, rank)
}

/// Observable wire format: a preset name, a full matrix, explicit spectral
/// data, or a Kronecker product of other observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableJson {
    Preset(String),
    Matrix {
        matrix: linalg::MatrixJson,
    },
    Spectral {
        eigenvalues: Vec<f64>,
        projections: Vec<linalg::MatrixJson>,
    },
    Tensor {
        tensor: Vec<ObservableJson>,
    },
}

impl ObservableJson {
    /// Spectral form, which round-trips spectral values exactly.
    pub fn spectral(a: &Observable) -> Self {
        ObservableJson::Spectral {
            eigenvalues: a.values(),
            projections: a.spectrum().iter().map(|s| linalg::MatrixJson::from(s.projection.matrix())).collect(),
        }
    }

    pub fn to_observable(&self) -> Result<Observable> {
        match self {
            ObservableJson::Preset(name) => {
                Observable::preset(name).ok_or_else(|| Error::InvalidSpectrum(format!("unknown preset {name:?}")))
            }
            ObservableJson::Matrix { matrix } => Observable::new(&CMatrix::try_from(matrix.clone())?),
            ObservableJson::Spectral { eigenvalues, projections } => {
                let ps = projections.iter().cloned().map(CMatrix::try_from).collect::<Result<Vec<_>>>()?;
                Observable::from_spectrum(eigenvalues, ps)
            }
            ObservableJson::Tensor { tensor: factors } => {
                let mut it = factors.iter();
                let first = it.next().ok_or_else(|| Error::InvalidSpectrum("empty tensor product".into()))?;
                let mut acc = first.to_observable()?;
                for f in it {
                    acc = acc.tensor(&f.to_observable()?);
                }
                Ok(acc)
            }
        }
    }
}

/// Unit vector in `C^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PureState {
    #[serde(with = "linalg::vector_serde")]
    vector: CVector,
}

impl PureState {
    /// Accepts `v` if its norm is within `NORM` of one.
    pub fn new(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if v.is_empty() || (norm - 1.0).abs() > tol::NORM {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { vector: v })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if v.is_empty() || norm <= f64::EPSILON || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { vector: v / c(norm, 0.0) })
    }

    pub fn from_amplitudes(amps: &[C64]) -> Result<Self> {
        Self::normalized(CVector::from_column_slice(amps))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        Self { vector: linalg::basis_vector(dim, k) }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.vector.dotc(&other.vector)
    }

    /// `|self⟩ ⊗ |other⟩`.
    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState { vector: tensor_vec(&self.vector, &other.vector) }
    }

    /// Named presets: `zero`, `one`, `plus`, `minus`, `plus_i`, `minus_i`,
    /// `bell`, `ghz(n)`, `basis(d,k)`, `uniform(d)`.
    pub fn preset(name: &str) -> Option<Self> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let name = name.trim();
        let amps: Vec<C64> = match name {
            "zero" => vec![ONE, linalg::ZERO],
            "one" => vec![linalg::ZERO, ONE],
            "plus" => vec![c(r, 0.0), c(r, 0.0)],
            "minus" => vec![c(r, 0.0), c(-r, 0.0)],
            "plus_i" => vec![c(r, 0.0), c(0.0, r)],
            "minus_i" => vec![c(r, 0.0), c(0.0, -r)],
            "bell" => vec![c(r, 0.0), linalg::ZERO, linalg::ZERO, c(r, 0.0)],
            _ => {
                let (head, args) = name.split_once('(')?;
                let args: Vec<usize> = args
                    .strip_suffix(')')?
                    .split(',')
                    .map(|s| s.trim().parse().ok())
                    .collect::<Option<_>>()?;
                match (head, args.as_slice()) {
                    ("basis", &[d, k]) if k < d => return Some(Self::basis(d, k)),
                    ("uniform", &[d]) if d > 0 => vec![c(1.0 / (d as f64).sqrt(), 0.0); d],
                    ("ghz", &[n]) if (1..=8).contains(&n) => {
                        let d = 1usize << n;
                        let mut v = vec![linalg::ZERO; d];
                        v[0] = c(r, 0.0);
                        v[d - 1] = c(r, 0.0);
                        v
                    }
                    _ => return None,
                }
            }
        };
        Some(Self { vector: CVector::from_vec(amps) })
    }
}

/// Probability distribution over real outcomes, ascending in outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub entries: Vec<OutcomeProbability>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbability {
    pub outcome: f64,
    pub probability: f64,
}

impl OutcomeDistribution {
    /// Clips raw probabilities into `[0, 1]` and sorts by outcome.
    pub fn from_raw(raw: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut entries: Vec<OutcomeProbability> = raw
            .into_iter()
            .map(|(outcome, p)| OutcomeProbability { outcome, probability: p.clamp(0.0, 1.0) })
            .collect();
        entries.sort_by(|a, b| a.outcome.total_cmp(&b.outcome));
        Self { entries }
    }

    /// Probability of the outcome within `OUTCOME_MATCH` of `x`, zero if absent.
    pub fn get(&self, x: f64) -> f64 {
        self.entries
            .iter()
            .filter(|e| (e.outcome - x).abs() <= tol::OUTCOME_MATCH)
            .map(|e| e.probability)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    /// Largest absolute difference over the union of outcomes.
    pub fn max_difference(&self, other: &OutcomeDistribution) -> f64 {
        self.entries
            .iter()
            .map(|e| e.outcome)
            .chain(other.entries.iter().map(|e| e.outcome))
            .map(|x| (self.get(x) - other.get(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// `p(a) = ⟨ψ|E^A(a)|ψ⟩`.
pub fn born_distribution(a: &Observable, psi: &PureState) -> Result<OutcomeDistribution> {
    check_dim(a.dim(), psi.dim())?;
    Ok(OutcomeDistribution::from_raw(
        a.spectrum.iter().map(|s| (s.value, s.projection.expectation(psi.vector()))),
    ))
}

/// Standard deviation, computed as `‖(A − ⟨A⟩)ψ‖` to avoid cancellation.
pub fn std_dev(a: &Observable, psi: &PureState) -> Result<f64> {
    check_dim(a.dim(), psi.dim())?;
    let v = psi.vector();
    let av = a.matrix() * v;
    let mean = v.dotc(&av).re;
    Ok((av - v * c(mean, 0.0)).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectralize_diagonal_with_degeneracy() {
        let a = spectralize(&linalg::diag(&[1.0, 1.0, -1.0]), tol::CLUSTER).unwrap();
        assert_eq!(a.spectrum().len(), 2);
        assert!((a.spectrum()[0].value + 1.0).abs() < 1e-14);
        assert_eq!(a.spectrum()[0].projection.rank(), 1);
        assert!((a.spectrum()[1].value - 1.0).abs() < 1e-14);
        assert_eq!(a.spectrum()[1].projection.rank(), 2);
    }

    #[test]
    fn spectralize_pauli_x() {
        let x = Observable::pauli_x();
        let vals = x.values();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        // |−⟩⟨−| = ½[[1,−1],[−1,1]]
        let minus = x.spectrum()[0].projection.matrix();
        let expected = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(-0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0)]);
        assert!(max_abs(&(minus - expected)) < 1e-14);
    }

    #[test]
    fn spectralize_forced_cluster() {
        let a = spectralize(&linalg::diag(&[0.0, 1e-12]), 1e-9).unwrap();
        assert_eq!(a.spectrum().len(), 1);
        assert!((a.spectrum()[0].value - 5e-13).abs() < 1e-20);
        assert_eq!(a.spectrum()[0].projection.rank(), 2);
    }

    #[test]
    fn spectralize_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, ONE, linalg::ZERO, ONE]);
        assert!(matches!(spectralize(&m, tol::CLUSTER), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn born_examples() {
        let z = Observable::pauli_z();
        let d = born_distribution(&z, &PureState::preset("zero").unwrap()).unwrap();
        assert_eq!(d.get(1.0), 1.0);
        assert_eq!(d.get(-1.0), 0.0);
        let d = born_distribution(&z, &PureState::preset("plus").unwrap()).unwrap();
        assert!((d.get(1.0) - 0.5).abs() < 1e-15 && (d.get(-1.0) - 0.5).abs() < 1e-15);
        let d = born_distribution(&Observable::identity(3), &PureState::preset("uniform(3)").unwrap()).unwrap();
        assert_eq!(d.entries.len(), 1);
        assert!((d.get(1.0) - 1.0).abs() < 1e-15);
        assert!(matches!(
            born_distribution(&z, &PureState::basis(3, 0)),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn std_dev_examples() {
        let z = Observable::pauli_z();
        assert_eq!(std_dev(&z, &PureState::preset("zero").unwrap()).unwrap(), 0.0);
        assert!((std_dev(&z, &PureState::preset("plus").unwrap()).unwrap() - 1.0).abs() < 1e-15);
        assert!(std_dev(&Observable::identity(2), &PureState::preset("plus_i").unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn from_spectrum_merges_and_validates() {
        let p0 = linalg::diag(&[1.0, 0.0, 0.0]);
        let p1 = linalg::diag(&[0.0, 1.0, 0.0]);
        let p2 = linalg::diag(&[0.0, 0.0, 1.0]);
        let a = Observable::from_spectrum(&[2.0, -1.0, 2.0], vec![p0.clone(), p1.clone(), p2]).unwrap();
        assert_eq!(a.values(), vec![-1.0, 2.0]);
        assert_eq!(a.spectrum()[1].projection.rank(), 2);
        assert!(Observable::from_spectrum(&[1.0, 2.0], vec![p0, p1]).is_err());
    }

    #[test]
    fn presets_parse() {
        assert_eq!(Observable::preset("identity(4)").unwrap().dim(), 4);
        assert!(Observable::preset("identity(0)").is_none());
        assert!(Observable::preset("pauli_w").is_none());
        assert_eq!(PureState::preset("ghz(3)").unwrap().dim(), 8);
        assert_eq!(PureState::preset("basis(3,2)").unwrap().vector()[2], ONE);
        assert!(PureState::preset("basis(3,3)").is_none());
    }

    #[test]
    fn pure_state_norm_checks() {
        assert!(PureState::new(CVector::from_vec(vec![ONE, ONE])).is_err());
        assert!(PureState::normalized(CVector::zeros(2)).is_err());
        let s = PureState::normalized(CVector::from_vec(vec![ONE, ONE])).unwrap();
        assert!((s.vector().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn map_spectrum_merges_equal_outputs() {
        let a = Observable::diagonal(&[-1.0, 0.0, 1.0]);
        let sq = a.map_spectrum(|x| x * x);
        assert_eq!(sq.values(), vec![0.0, 1.0]);
        assert_eq!(sq.spectrum()[1].projection.rank(), 2);
    }
}
