//! Numerical tolerances shared across the crate.
//!
//! All values are absolute and assume operators of order-one norm; routines
//! that accept arbitrary operators scale by `max(1, ‖M‖_max)` where noted.

/// Hermiticity check on input matrices.
pub const HERM: f64 = 1e-9;
/// Idempotence and self-adjointness of projections.
pub const PROJ: f64 = 1e-9;
/// Orthonormality of subspace bases.
pub const ORTHO: f64 = 1e-9;
/// Eigenvalue threshold on `(I-E)+(I-F)` below which a direction lies in `E∧F`.
pub const MEET: f64 = 1e-7;
/// Residual norm below which Gram–Schmidt drops a vector.
pub const RANK: f64 = 1e-9;
/// Default eigenvalue clustering width.
pub const CLUSTER: f64 = 1e-8;
/// Matching of spectral values across independently clustered observables.
pub const OUTCOME_MATCH: f64 = 1e-6;
/// Unit-norm check for states.
pub const NORM: f64 = 1e-9;
/// Minimum `|⟨ψ_f|ψ_i⟩|` for a weak value.
pub const OVERLAP: f64 = 1e-8;
/// Minimum conditioning probability.
pub const COND: f64 = 1e-10;
/// Threshold for the commutativity and correlation conditions.
pub const CONDITION: f64 = 1e-8;
/// Unitarity of interaction operators.
pub const UNITARY: f64 = 1e-9;
/// Positivity and completeness of POVM elements.
pub const POVM: f64 = 1e-8;
/// Eigenvector test used when deciding whether a state is an eigenstate.
pub const EIGENSTATE: f64 = 1e-8;
