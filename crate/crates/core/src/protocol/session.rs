use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::{Challenge, ChallengePolicy, Instance, Reason, Variant, Verdict};
use super::verifier::{VerifierError, VerifierMachine};
use super::wire::{Message, WireError};
use crate::qsim::{extract_preimage, ProverState, QsimError};
use crate::samplers::{session_rng, SessionRng, Setup, Stream};
use crate::zq::{BitString, ZqVector};

/// Anything that can play the prover.
///
/// The prover sees only `(matrix, u)`: it cannot tell how the matrix was made.
pub trait Prover {
    fn commit(&mut self, instance: &Instance, rng: &mut SessionRng) -> Result<ZqVector, QsimError>;
    fn answer_generation(&mut self, rng: &mut SessionRng) -> Result<(bool, ZqVector), QsimError>;
    fn answer_test(&mut self, rng: &mut SessionRng) -> Result<(bool, BitString), QsimError>;

    /// Direct access to the quantum register, for verifiers that operate on
    /// it. Only meaningful in process.
    fn register(&mut self) -> Option<&mut ProverState> {
        None
    }
}

/// Prover-side handling of one verifier message.
pub fn respond<P: Prover + ?Sized>(
    prover: &mut P,
    msg: &Message,
    rng: &mut SessionRng,
) -> Result<Option<Message>, LinkError> {
    Ok(match msg {
        Message::Instance(inst) => Some(Message::Image(prover.commit(inst, rng)?)),
        Message::Challenge(Challenge::G) => {
            let (b, x) = prover.answer_generation(rng)?;
            Some(Message::GenResp { b, x })
        }
        Message::Challenge(Challenge::T) => {
            let (c, d) = prover.answer_test(rng)?;
            Some(Message::EqResp { c, d })
        }
        Message::Verdict(_) => None,
        other => return Err(LinkError::Unexpected(other.tag())),
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("prover failed: {0}")]
    Prover(#[from] QsimError),
    #[error("prover cannot handle message tag {0:#04x}")]
    Unexpected(u8),
    #[error("the prover register is not reachable over this link")]
    NoRegister,
}

impl LinkError {
    pub fn reason(&self) -> Reason {
        match self {
            Self::Wire(w) => w.reason(),
            Self::Prover(_) | Self::NoRegister => Reason::ProverError,
            Self::Unexpected(_) => Reason::OutOfOrder,
        }
    }
}

/// The verifier's view of the prover.
pub trait ProverLink {
    /// Sends one message and returns the prover's reply, if one is due.
    /// VERDICT frames never get a reply.
    fn exchange(&mut self, msg: &Message) -> Result<Option<Message>, LinkError>;

    fn register(&mut self) -> Option<&mut ProverState> {
        None
    }

    fn in_process(&self) -> bool {
        false
    }
}

/// A prover running in the same process, with its own RNG stream.
pub struct InProcessLink<'a, P: Prover + ?Sized> {
    prover: &'a mut P,
    rng: SessionRng,
}

impl<'a, P: Prover + ?Sized> InProcessLink<'a, P> {
    pub fn new(prover: &'a mut P, seed: u64, session: u64) -> Self {
        Self { prover, rng: session_rng(seed, session, Stream::Prover) }
    }
}

impl<P: Prover + ?Sized> ProverLink for InProcessLink<'_, P> {
    fn exchange(&mut self, msg: &Message) -> Result<Option<Message>, LinkError> {
        respond(self.prover, msg, &mut self.rng)
    }

    fn register(&mut self) -> Option<&mut ProverState> {
        self.prover.register()
    }

    fn in_process(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Response {
    Generation { b: bool, x: Vec<u64> },
    Equation { c: bool, d: String },
}

/// One full session. Everything except `timing_us` is a function of the seed,
/// session index, profile, variant, policy and prover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptRecord {
    pub seed: u64,
    pub session: u64,
    pub profile: String,
    pub variant: Variant,
    pub adversary: String,
    pub instance_digest: String,
    pub y: Option<Vec<u64>>,
    pub challenge: Option<Challenge>,
    pub response: Option<Response>,
    pub verdict: Verdict,
    /// The secret was all zeros, which makes the equation test vacuous.
    pub s_zero: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_us: Option<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct SessionOptions {
    pub seed: u64,
    pub session: u64,
    pub policy: ChallengePolicy,
    pub profile: String,
    pub adversary: String,
    pub timing: bool,
}

/// Runs the verifier side of one session against `link`.
///
/// P2 test rounds reach into the prover register to run preimage extraction,
/// so they require an in-process link; otherwise the session is rejected with
/// [`Reason::ProverError`].
pub fn run_session(
    variant: Variant,
    link: &mut dyn ProverLink,
    setup: &Setup,
    opts: &SessionOptions,
) -> Result<TranscriptRecord, VerifierError> {
    let started = Instant::now();
    let mut rng = session_rng(opts.seed, opts.session, Stream::Verifier);
    let mut machine = VerifierMachine::start(variant, setup, opts.policy, &mut rng)?;
    let mut record = TranscriptRecord {
        seed: opts.seed,
        session: opts.session,
        profile: opts.profile.clone(),
        variant,
        adversary: opts.adversary.clone(),
        instance_digest: machine.instance().digest(),
        y: None,
        challenge: None,
        response: None,
        verdict: Verdict::reject(Reason::None),
        s_zero: machine.secret().s.is_zero(),
        timing_us: None,
    };

    let verdict = drive(variant, link, &mut machine, &mut record, opts.policy, &mut rng);
    record.verdict = verdict;
    // best effort: a prover that already hung up does not change the outcome
    let _ = link.exchange(&Message::Verdict(verdict));
    if opts.timing {
        record.timing_us = Some(started.elapsed().as_micros() as u64);
    }
    Ok(record)
}

fn drive(
    variant: Variant,
    link: &mut dyn ProverLink,
    machine: &mut VerifierMachine<'_>,
    record: &mut TranscriptRecord,
    policy: ChallengePolicy,
    rng: &mut SessionRng,
) -> Verdict {
    let reply = match link.exchange(&Message::Instance(machine.instance().clone())) {
        Ok(Some(m)) => m,
        Ok(None) => return Verdict::reject(Reason::OutOfOrder),
        Err(e) => return Verdict::reject(e.reason()),
    };
    if let Err(v) = machine.receive_image(reply) {
        return v;
    }
    record.y = machine.y().map(|y| y.entries().to_vec());

    let challenge = machine.issue_challenge(policy, rng);
    record.challenge = Some(challenge);
    if variant == Variant::P2 && challenge == Challenge::T {
        let s = machine.secret().s.clone();
        let Some(state) = link.register() else {
            return Verdict::reject(LinkError::NoRegister.reason());
        };
        match extract_preimage(state, &s, rng) {
            Ok(r) => {
                *state = r.collapsed;
                machine.set_extracted(r.x0);
            }
            Err(_) => return Verdict::reject(Reason::ProverError),
        }
    }

    let reply = match link.exchange(&Message::Challenge(challenge)) {
        Ok(Some(m)) => m,
        Ok(None) => return Verdict::reject(Reason::OutOfOrder),
        Err(e) => return Verdict::reject(e.reason()),
    };
    record.response = match &reply {
        Message::GenResp { b, x } => Some(Response::Generation { b: *b, x: x.entries().to_vec() }),
        Message::EqResp { c, d } => Some(Response::Equation { c: *c, d: d.to_string() }),
        _ => None,
    };
    machine.receive_response(reply)
}
