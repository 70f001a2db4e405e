//! Certified randomness from a single quantum device via lossy LWE, at desk
//! scale: exact `Z_q` arithmetic, samplers, a sparse simulation of the prover,
//! the verifier state machines and the analysis behind the entropy claims.
//!
//! Lossy and uniform matrices are statistically distinguishable at the
//! parameter sizes used here; the computational indistinguishability the
//! protocols rely on is assumed and never tested.

pub mod analysis;
pub mod harness;
pub mod protocol;
pub mod qsim;
pub mod samplers;
pub mod zq;

pub use analysis::{EntropyCertificate, PosteriorDistribution, PreimageSet};
pub use protocol::{Challenge, Instance, Message, TranscriptRecord, Variant, VerifierSecret};
pub use qsim::{AdversaryKind, ProverState};
pub use samplers::{LossyWitness, ParameterSet, Setup, Trapdoor};
pub use zq::{BitString, Modulus, ZqMatrix, ZqScalar, ZqVector};
