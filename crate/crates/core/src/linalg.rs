//! Dense complex linear algebra: Hermitian eigendecomposition, orthogonal
//! projections and their meet, Kronecker products, the probe partial trace
//! and rank-revealing Gram–Schmidt.
//!
//! Composite spaces `H ⊗ K` use the system-major index convention: the basis
//! vector `|i⟩ ⊗ |k⟩` sits at position `i * dim(K) + k`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Scale used to turn absolute tolerances into ones relative to `m`.
pub fn tol_scale(m: &CMatrix) -> f64 {
    max_abs(m).max(1.0)
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn check_square(m: &CMatrix) -> Result<usize> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() })
    }
}

pub fn check_hermitian(m: &CMatrix) -> Result<()> {
    check_square(m)?;
    let deviation = hermitian_deviation(m);
    if deviation <= tol::HERM * tol_scale(m) {
        Ok(())
    } else {
        Err(Error::NotHermitian { deviation })
    }
}

pub fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `⟨u|m|v⟩`.
pub fn sandwich(u: &CVector, m: &CMatrix, v: &CVector) -> C64 {
    u.dotc(&(m * v))
}

/// `|u⟩⟨v|`.
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

pub fn basis_vector(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = ONE;
    v
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&x| c(x, 0.0))))
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Unitary whose columns are the eigenvectors, in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn column(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = diag(&self.values);
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn eigh(m: &CMatrix) -> Result<Eigh> {
    check_hermitian(m)?;
    Ok(eigh_unchecked(&hermitian_part(m)))
}

/// Eigendecomposition of a matrix already known to be Hermitian.
pub(crate) fn eigh_unchecked(h: &CMatrix) -> Eigh {
    let n = h.nrows();
    if n == 0 {
        return Eigh { values: vec![], vectors: CMatrix::zeros(0, 0) };
    }
    let se = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Eigh { values, vectors }
}

/// Orthogonal projection together with its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    matrix: CMatrix,
    rank: usize,
}

impl Projection {
    /// Validates idempotence and self-adjointness within `PROJ`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let herm = hermitian_deviation(&matrix);
        let idem = max_abs(&(&matrix * &matrix - &matrix));
        let deviation = herm.max(idem);
        if deviation > tol::PROJ {
            return Err(Error::NotProjection { deviation });
        }
        let trace = matrix.trace().re;
        let rank = trace.round();
        if (trace - rank).abs() > 0.01 {
            return Err(Error::NotProjection { deviation: (trace - rank).abs() });
        }
        Ok(Self { matrix, rank: rank as usize })
    }

    pub(crate) fn from_parts(matrix: CMatrix, rank: usize) -> Self {
        Self { matrix, rank }
    }

    pub fn zero(dim: usize) -> Self {
        Self { matrix: CMatrix::zeros(dim, dim), rank: 0 }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim, dim), rank: dim }
    }

    /// Projection onto the span of orthonormal columns.
    pub fn from_orthonormal_columns(q: &CMatrix) -> Self {
        Self { matrix: q * q.adjoint(), rank: q.ncols() }
    }

    pub fn from_subspace(s: &Subspace) -> Self {
        Self::from_orthonormal_columns(&s.basis_matrix())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    /// `⟨ψ|P|ψ⟩`, real by self-adjointness.
    pub fn expectation(&self, v: &CVector) -> f64 {
        sandwich(v, &self.matrix, v).re
    }

    /// Orthonormal basis of the range, from the eigenvectors with eigenvalue near one.
    pub fn range_basis(&self) -> Subspace {
        if self.rank == 0 {
            return Subspace::zero(self.dim());
        }
        let e = eigh_unchecked(&hermitian_part(&self.matrix));
        let n = self.dim();
        let basis = (n - self.rank..n).map(|k| e.column(k)).collect();
        Subspace { ambient: n, basis }
    }

    pub fn tensor_identity(&self, probe_dim: usize) -> Projection {
        Projection {
            matrix: tensor(&self.matrix, &CMatrix::identity(probe_dim, probe_dim)),
            rank: self.rank * probe_dim,
        }
    }
}

/// Projection onto `range(e) ∩ range(f)`.
///
/// The intersection is the null space of `(I − E) + (I − F)`, a positive
/// operator whose eigenvalues are at least `1 − cos θ` for the smallest
/// nonzero principal angle `θ` between the ranges.
pub fn projection_meet(e: &Projection, f: &Projection) -> Result<Projection> {
    check_dim(e.dim(), f.dim())?;
    let n = e.dim();
    if e.is_zero() || f.is_zero() {
        return Ok(Projection::zero(n));
    }
    let id = CMatrix::identity(n, n);
    let complement = (&id - e.matrix()) + (&id - f.matrix());
    let eig = eigh_unchecked(&hermitian_part(&complement));
    let k = eig.values.iter().take_while(|&&v| v <= tol::MEET).count();
    let q = eig.vectors.columns(0, k).into_owned();
    Ok(Projection::from_orthonormal_columns(&q))
}

/// Kronecker product, system-major.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Traces out the probe factor of an operator on `H ⊗ K`.
pub fn partial_trace_probe(m: &CMatrix, dim_h: usize, dim_k: usize) -> Result<CMatrix> {
    check_square(m)?;
    check_dim(dim_h * dim_k, m.nrows())?;
    Ok(CMatrix::from_fn(dim_h, dim_h, |i, j| {
        (0..dim_k).map(|k| m[(i * dim_k + k, j * dim_k + k)]).sum()
    }))
}

/// `Tr_K[m (I ⊗ |ξ⟩⟨ξ|)]` computed without forming the product.
pub fn probe_compress(m: &CMatrix, xi: &CVector) -> Result<CMatrix> {
    let dim_k = xi.len();
    check_square(m)?;
    if dim_k == 0 || !m.nrows().is_multiple_of(dim_k) {
        return Err(Error::DimensionMismatch { expected: dim_k, found: m.nrows() });
    }
    let dim_h = m.nrows() / dim_k;
    // (Tr_K[m (I⊗|ξ⟩⟨ξ|)])_{ij} = Σ_{k,l} m_{(i,k),(j,l)} ξ_l conj(ξ_k)
    Ok(CMatrix::from_fn(dim_h, dim_h, |i, j| {
        let mut acc = ZERO;
        for k in 0..dim_k {
            for l in 0..dim_k {
                acc += m[(i * dim_k + k, j * dim_k + l)] * xi[l] * xi[k].conj();
            }
        }
        acc
    }))
}

/// Subspace of `C^ambient` held as an orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<CVector>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Self { ambient, basis: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &[CVector] {
        &self.basis
    }

    /// Columns are the basis vectors.
    pub fn basis_matrix(&self) -> CMatrix {
        let mut q = CMatrix::zeros(self.ambient, self.basis.len());
        for (k, v) in self.basis.iter().enumerate() {
            q.set_column(k, v);
        }
        q
    }

    pub fn project(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.ambient);
        for b in &self.basis {
            out += b * b.dotc(v);
        }
        out
    }

    /// Distance from `v` to the subspace.
    pub fn residual(&self, v: &CVector) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Appends the component of `v` orthogonal to the current basis when its
    /// norm exceeds `rank_tol * max(1, ‖v‖)`. Returns whether `v` was added.
    pub fn try_extend(&mut self, v: &CVector, rank_tol: f64) -> bool {
        let threshold = rank_tol * v.norm().max(1.0);
        let mut w = v.clone();
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for b in &self.basis {
                let coeff = b.dotc(&w);
                w -= b * coeff;
            }
        }
        let n = w.norm();
        if n <= threshold {
            return false;
        }
        self.basis.push(w / c(n, 0.0));
        true
    }

    /// Maximum of `|⟨b_i|b_j⟩ − δ_ij|` over the basis.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, u) in self.basis.iter().enumerate() {
            for (j, v) in self.basis.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((u.dotc(v) - target).norm());
            }
        }
        worst
    }

    /// Whether every basis vector of `other` lies in `self` within `tol`.
    pub fn contains(&self, other: &Subspace, tol: f64) -> bool {
        other.basis.iter().all(|v| self.residual(v) <= tol)
    }
}

/// Rank-revealing Gram–Schmidt.
pub fn orthonormalize(vectors: &[CVector], rank_tol: f64) -> Subspace {
    let ambient = vectors.first().map_or(0, |v| v.len());
    let mut s = Subspace::zero(ambient);
    for v in vectors {
        s.try_extend(v, rank_tol);
    }
    s
}

/// Haar-style unitary check.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// Operator `P^{1/2}` or `P^{-1/2}` of a positive matrix via its eigendecomposition.
/// Eigenvalues below `floor` are treated as `floor`.
pub(crate) fn positive_power(p: &CMatrix, power: f64, floor: f64) -> CMatrix {
    let e = eigh_unchecked(&hermitian_part(p));
    let scaled: Vec<f64> = e.values.iter().map(|&v| v.max(floor).powf(power)).collect();
    &e.vectors * diag(&scaled) * e.vectors.adjoint()
}

/// Matrix wire format: row-major `[re, im]` pairs with explicit shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.rows == 0 || j.cols == 0 {
            return Err(Error::Malformed("rows and cols must be positive".into()));
        }
        if j.data.len() != j.rows * j.cols {
            return Err(Error::Malformed(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                j.rows * j.cols,
                j.rows,
                j.cols,
                j.data.len()
            )));
        }
        Ok(CMatrix::from_row_iterator(j.rows, j.cols, j.data.iter().map(|p| c(p[0], p[1]))))
    }
}

/// Serde adapter for `CMatrix` fields using [`MatrixJson`].
pub mod matrix_serde {
    use super::{CMatrix, MatrixJson};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        CMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for lists of matrices.
pub mod matrices_serde {
    use super::{CMatrix, MatrixJson};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        let js: Vec<MatrixJson> = ms.iter().map(MatrixJson::from).collect();
        js.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        Vec::<MatrixJson>::deserialize(d)?
            .into_iter()
            .map(|j| CMatrix::try_from(j).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for complex vectors as `[[re, im], ...]`.
pub mod vector_serde {
    use super::{c, CVector};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVector, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(CVector::from_iterator(pairs.len(), pairs.iter().map(|p| c(p[0], p[1]))))
    }
}
