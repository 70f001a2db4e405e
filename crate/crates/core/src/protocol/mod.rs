//! Messages, parameter validation and the verifier side of the three protocol
//! variants, all following the same five-message template:
//! instance, image, challenge, response, verdict.

mod session;
mod types;
mod validate;
mod verifier;
pub mod wire;

pub use session::{
    respond, run_session, InProcessLink, LinkError, Prover, ProverLink, Response, SessionOptions, TranscriptRecord,
};
pub use types::{Challenge, ChallengePolicy, Instance, Reason, Variant, Verdict, VerifierSecret, Witness};
pub use validate::{validate_params, Condition, ValidationError, ValidationReport};
pub use verifier::{check_equation, check_generation, verifier_start, Stage, VerifierError, VerifierMachine};
pub use wire::Message;
