//! State-dependent quantum measurement theory for finite-dimensional systems.
//!
//! The crate covers quasiprobability distributions (strong and Kirkwood
//! weak), weak values, state-dependent commutativity and perfect
//! correlation, measuring processes with their POVMs and rms errors, the
//! universally valid uncertainty relation, and tests for simultaneous
//! measurability in a given state.

pub mod correlation;
pub mod error;
pub mod linalg;
pub mod measproc;
pub mod observables;
pub mod quasiprob;
pub mod random;
pub mod simul;
pub mod sweep;
pub mod tol;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, Projection, Subspace, C64};
pub use observables::{born_distribution, spectralize, std_dev, Observable, OutcomeDistribution, PureState};
