//! Sparse simulation of the prover's registers.
//!
//! A state is a list of basis terms `(b, x, tag)` with complex amplitudes.
//! The tag stands in for the prover's environment register: terms with
//! different tags never interfere.

mod adversary;
mod commit;
mod extract;
mod measure;
mod state;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::zq::ZqError;

pub use adversary::{make_adversary, AdversaryKind, SimulatedProver};
pub use commit::{honest_commit, AmplitudeModel, CommitOptions, Commitment, ProverEvent};
pub use extract::{extract_preimage, ExtractionResult};
pub use measure::{
    hadamard_distribution, measure_hadamard, measure_hadamard_dense, measure_standard, DEFAULT_HADAMARD_THRESHOLD,
};
pub use state::{ProverState, Term};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("Z_q^{n} with q = {q} does not fit the packed state index")]
    PackingOverflow { q: u64, n: usize },
    #[error("state is empty")]
    EmptyState,
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("duplicate basis term (b = {b}, tag = {tag})")]
    DuplicateTerm { b: u8, tag: u16 },
    #[error("no preimage of y in either branch")]
    NoPreimage,
    #[error("exact Hadamard path needs w + 1 = {needed} ≤ threshold {threshold}")]
    SupportTooLarge { needed: usize, threshold: usize },
    #[error("unknown adversary kind `{0}`")]
    UnknownAdversary(String),
    #[error("skew amplitude must lie in [0, 1], got {0}")]
    BadSkew(f64),
    #[error("prover has no committed state")]
    NotCommitted,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Zq(#[from] ZqError),
}
