//! Brute-force analysis: preimage sets, the binary-kernel and posterior
//! experiments, exact and smooth min-entropy, entropy certificates and pass
//! rate estimation.

mod entropy;
mod kernel;
mod posterior;
mod preimage;
mod rates;
mod stats;

use thiserror::Error;

use crate::zq::ZqError;

pub use entropy::{
    distance_to_min_entropy, entropy_certificate, min_entropy_exact, p_t_excess_from_rate, skew_consistency,
    smooth_min_entropy_report, EntropyCertificate, SkewCheck, SmoothEntropyReport,
};
pub use kernel::{binary_kernel_experiment, count_binary_solutions, KernelReport};
pub use posterior::{posterior, posterior_experiment, PosteriorDistribution, PosteriorReport};
pub use preimage::{branch_target, enumerate_preimages, is_preimage, scan_cost, scan_preimages, Packing, PreimageSet};
pub use rates::{pass_rate_estimator, ProverConfig, RateReport};
pub use stats::{wilson_interval, Rate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("enumeration needs {needed} points, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("every candidate secret has zero likelihood; (matrix, u) is inconsistent")]
    EmptyPosterior,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Zq(#[from] ZqError),
}
