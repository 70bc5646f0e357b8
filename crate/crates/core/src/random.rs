//! Seeded random instances for property checks and sweeps.
//!
//! Every instance draws from its own ChaCha8 stream derived from
//! `(seed, index)`, so parallel sweeps reproduce serial ones.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, outer, CMatrix, CVector, C64};
use crate::measproc::{MeasuringProcess, OutcomeMap, SimultaneousProcess};
use crate::observables::{Observable, PureState};

pub type InstanceRng = ChaCha8Rng;

/// Generator for instance `index` of a run seeded with `seed`.
pub fn instance_rng(seed: u64, index: u64) -> InstanceRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard complex Gaussian, `E|z|² = 1`.
pub fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn gaussian_vector(rng: &mut impl Rng, dim: usize) -> CVector {
    DVector::from_fn(dim, |_, _| gaussian(rng))
}

/// Haar-random pure state.
pub fn state(rng: &mut impl Rng, dim: usize) -> PureState {
    loop {
        let v = gaussian_vector(rng, dim);
        if v.norm() > 1e-6 {
            return PureState::normalized(v).expect("nonzero vector");
        }
    }
}

/// Haar-random unitary: QR of a Gaussian matrix with the phases of `R`'s
/// diagonal moved into `Q`.
pub fn unitary(rng: &mut impl Rng, dim: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, dim, dim).qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// GUE-distributed Hermitian matrix.
pub fn hermitian(rng: &mut impl Rng, dim: usize) -> CMatrix {
    let g = gaussian_matrix(rng, dim, dim);
    (&g + g.adjoint()) * c(0.5, 0.0)
}

/// Spectral values: distinct uniform draws in `[-3, 3]`, or small integers
/// in `-2..=2` when `degenerate` (so repeats are likely).
pub fn spectrum_values(rng: &mut impl Rng, count: usize, degenerate: bool) -> Vec<f64> {
    (0..count)
        .map(|_| {
            if degenerate {
                rng.random_range(-2i32..=2) as f64
            } else {
                rng.random_range(-3.0..3.0)
            }
        })
        .collect()
}

/// `Σ_k values[k] |u_k⟩⟨u_k|` with exact spectral labels.
pub fn observable_in_basis(basis: &CMatrix, values: &[f64]) -> Observable {
    let projections = (0..values.len()).map(|k| {
        let u = basis.column(k).into_owned();
        outer(&u, &u)
    });
    Observable::from_spectrum(values, projections.collect()).expect("orthonormal basis")
}

/// Observable with Haar eigenbasis.
pub fn observable(rng: &mut impl Rng, dim: usize, degenerate: bool) -> Observable {
    let u = unitary(rng, dim);
    let values = spectrum_values(rng, dim, degenerate);
    observable_in_basis(&u, &values)
}

/// Globally commuting pair sharing a Haar eigenbasis.
pub fn commuting_pair(rng: &mut impl Rng, dim: usize) -> (Observable, Observable) {
    let u = unitary(rng, dim);
    let degenerate = rng.random_bool(0.5);
    let va = spectrum_values(rng, dim, degenerate);
    let vb = spectrum_values(rng, dim, degenerate);
    (observable_in_basis(&u, &va), observable_in_basis(&u, &vb))
}

/// Orthonormal basis whose first `block` columns are shared by the two
/// observables (with values `shared_a`, `shared_b`) while the complement
/// carries independent eigenbases.
fn block_pair(
    rng: &mut impl Rng,
    dim: usize,
    shared_a: &[f64],
    shared_b: &[f64],
    degenerate: bool,
) -> (CMatrix, Observable, Observable) {
    let block = shared_a.len();
    let u = unitary(rng, dim);
    let rest = dim - block;
    let mut side = |shared: &[f64]| {
        let mut basis = u.clone();
        if rest > 0 {
            let w = unitary(rng, rest);
            let tail = u.columns(block, rest) * w;
            basis.columns_mut(block, rest).copy_from(&tail);
        }
        let mut values = shared.to_vec();
        values.extend(spectrum_values(rng, rest, degenerate));
        observable_in_basis(&basis, &values)
    };
    let a = side(shared_a);
    let b = side(shared_b);
    (u, a, b)
}

fn state_in_block(rng: &mut impl Rng, basis: &CMatrix, block: usize) -> PureState {
    let coeffs = state(rng, block);
    PureState::normalized(basis.columns(0, block) * coeffs.vector()).expect("unit coefficients")
}

/// Pair commuting on a block of `block` common eigenvectors and generic on
/// its complement, with a state inside the block, so that `A ↔_ψ B`.
pub fn block_commuting(rng: &mut impl Rng, dim: usize, block: usize) -> (Observable, Observable, PureState) {
    let degenerate = rng.random_bool(0.5);
    let va = spectrum_values(rng, block, degenerate);
    let vb = spectrum_values(rng, block, degenerate);
    let (u, a, b) = block_pair(rng, dim, &va, &vb, degenerate);
    let psi = state_in_block(rng, &u, block);
    (a, b, psi)
}

/// Pair agreeing on a block of common eigenvectors, with a state inside the
/// block, so that `A =_ψ B`.
pub fn perfectly_correlated(rng: &mut impl Rng, dim: usize, block: usize) -> (Observable, Observable, PureState) {
    let degenerate = rng.random_bool(0.5);
    let shared = spectrum_values(rng, block, degenerate);
    let (u, a, b) = block_pair(rng, dim, &shared, &shared, degenerate);
    let psi = state_in_block(rng, &u, block);
    (a, b, psi)
}

/// Three observables agreeing on a common block, with a state inside it.
pub fn correlated_triple(rng: &mut impl Rng, dim: usize, block: usize) -> ([Observable; 3], PureState) {
    let degenerate = rng.random_bool(0.5);
    let shared = spectrum_values(rng, block, degenerate);
    let (u, a, b) = block_pair(rng, dim, &shared, &shared, degenerate);
    let rest = dim - block;
    let mut basis = u.clone();
    if rest > 0 {
        let tail = u.columns(block, rest) * unitary(rng, rest);
        basis.columns_mut(block, rest).copy_from(&tail);
    }
    let mut values = shared;
    values.extend(spectrum_values(rng, rest, degenerate));
    let c_obs = observable_in_basis(&basis, &values);
    let psi = state_in_block(rng, &u, block);
    ([a, b, c_obs], psi)
}

/// Pair that is not perfectly correlated in the returned state: the state
/// has weight on a common eigenvector where the two values differ by at least one.
pub fn not_correlated(rng: &mut impl Rng, dim: usize) -> (Observable, Observable, PureState) {
    if rng.random_bool(0.5) {
        let (da, db) = (rng.random_bool(0.5), rng.random_bool(0.5));
        let a = observable(rng, dim, da);
        let b = observable(rng, dim, db);
        return (a, b, state(rng, dim));
    }
    let block = rng.random_range(1..=dim);
    let degenerate = rng.random_bool(0.5);
    let va = spectrum_values(rng, block, degenerate);
    let mut vb = va.clone();
    let k = rng.random_range(0..block);
    vb[k] = va[k] + if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(1.0..2.0);
    let (u, a, b) = block_pair(rng, dim, &va, &vb, degenerate);
    let mut coeffs = state(rng, block).vector().clone();
    if coeffs[k].norm() < 0.2 {
        coeffs[k] = c(0.5, 0.0);
    }
    let psi = PureState::normalized(u.columns(0, block) * coeffs).expect("nonzero");
    (a, b, psi)
}

/// Random unit vector inside the eigenspace of a randomly chosen spectral value.
pub fn eigenvector(rng: &mut impl Rng, a: &Observable) -> (f64, PureState) {
    let s = &a.spectrum()[rng.random_range(0..a.spectrum().len())];
    let basis = s.projection.range_basis().basis_matrix();
    let coeffs = state(rng, basis.ncols());
    (s.value, PureState::normalized(basis * coeffs.vector()).expect("nonzero"))
}

/// Random process on `H ⊗ K`: Haar probe state and interaction, random meter
/// (possibly degenerate), and random output maps on the meter's values.
pub fn simultaneous_process(rng: &mut impl Rng, system_dim: usize, probe_dim: usize) -> SimultaneousProcess {
    let xi = state(rng, probe_dim);
    let u = unitary(rng, system_dim * probe_dim);
    let degenerate = rng.random_bool(0.3);
    let meter = observable(rng, probe_dim, degenerate);
    let base = MeasuringProcess::new(xi, u, meter).expect("valid random process");
    let values = base.meter().values();
    let mut map = || {
        let targets = spectrum_values(rng, values.len(), false);
        OutcomeMap::from_pairs(values.iter().copied().zip(targets).collect())
    };
    let f = map();
    let g = map();
    SimultaneousProcess::new(base, f, g).expect("maps cover meter values")
}

/// Qubit triples for the two-dimensional characterization: commuting pairs,
/// eigenstates of either observable, and generic instances in equal shares.
pub fn qubit_triple(rng: &mut impl Rng, index: u64) -> (Observable, Observable, PureState) {
    match index % 3 {
        0 => {
            let (a, b) = commuting_pair(rng, 2);
            (a, b, state(rng, 2))
        }
        1 => {
            let a = observable(rng, 2, false);
            let b = observable(rng, 2, false);
            let mut pair = [a, b];
            pair.shuffle(rng);
            let [a, b] = pair;
            let (_, psi) = eigenvector(rng, &a);
            (a, b, psi)
        }
        _ => (observable(rng, 2, false), observable(rng, 2, false), state(rng, 2)),
    }
}
