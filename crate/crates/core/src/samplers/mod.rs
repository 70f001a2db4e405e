//! Random objects used by the verifier and the simulated prover: truncated
//! discrete Gaussians, uniform matrices, gadget trapdoor pairs and lossy
//! matrices. Every sampler is a pure function of its inputs and an RNG stream.

mod gaussian;
mod lossy;
mod params;
mod rng;
mod trapdoor;
mod uniform;

use std::sync::Arc;

pub use gaussian::{dgauss_density, sample_dgauss_vector, TruncatedGaussian};
pub use lossy::{sample_lossy, LossyWitness};
pub use params::{ParameterSet, StrictConstants, ValidationMode};
pub use rng::{session_rng, SessionRng, Stream};
pub use trapdoor::{gen_trap, invert, DecodeMargin, Inversion, InvertError, Trapdoor, TrapdoorError};
pub use uniform::{sample_binary, sample_uniform_matrix, sample_uniform_vector};

/// A parameter set together with its three prebuilt noise samplers.
///
/// Building the inverse-CDF tables is the expensive part of sampling at large
/// `B`, so one `Setup` is shared (behind an [`Arc`]) by every session of a run.
#[derive(Debug)]
pub struct Setup {
    pub params: ParameterSet,
    pub noise_l: TruncatedGaussian,
    pub noise_v: TruncatedGaussian,
    pub noise_p: TruncatedGaussian,
}

impl Setup {
    pub fn new(params: ParameterSet) -> Arc<Self> {
        let q = params.q;
        Arc::new(Self {
            noise_l: TruncatedGaussian::new(q, params.b_l),
            noise_v: TruncatedGaussian::new(q, params.b_v),
            noise_p: TruncatedGaussian::new(q, params.b_p),
            params,
        })
    }
}
