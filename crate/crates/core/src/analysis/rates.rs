use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::Rate;
use crate::protocol::{run_session, ChallengePolicy, InProcessLink, Reason, SessionOptions, Variant, VerifierError};
use crate::qsim::{make_adversary, AdversaryKind, CommitOptions};
use crate::samplers::Setup;

/// Everything needed to build a fresh simulated prover per session.
#[derive(Clone, Copy, Debug)]
pub struct ProverConfig {
    pub kind: AdversaryKind,
    pub commit: CommitOptions,
    pub hadamard_threshold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub variant: Variant,
    pub adversary: String,
    pub generation: Rate,
    pub test: Rate,
    pub decode_failures: u64,
    pub zero_d: u64,
}

/// Runs `n` generation rounds (sessions `0..n`) and `n` test rounds (sessions
/// `n..2n`) in process and reports both pass rates.
pub fn pass_rate_estimator(
    variant: Variant,
    prover: &ProverConfig,
    setup: &Arc<Setup>,
    n: u64,
    seed: u64,
) -> Result<RateReport, VerifierError> {
    let run = |session: u64, policy: ChallengePolicy| {
        let mut p = make_adversary(prover.kind, setup.clone(), prover.commit, prover.hadamard_threshold);
        let mut link = InProcessLink::new(&mut p, seed, session);
        let opts = SessionOptions { seed, session, policy, adversary: prover.kind.to_string(), ..Default::default() };
        run_session(variant, &mut link, setup, &opts).map(|r| r.verdict)
    };
    let gen: Vec<_> = (0..n).into_par_iter().map(|i| run(i, ChallengePolicy::Generation)).collect::<Result<_, _>>()?;
    let test: Vec<_> = (n..2 * n).into_par_iter().map(|i| run(i, ChallengePolicy::Test)).collect::<Result<_, _>>()?;
    let count = |v: &[crate::protocol::Verdict]| v.iter().filter(|x| x.accept).count() as u64;
    Ok(RateReport {
        variant,
        adversary: prover.kind.to_string(),
        generation: Rate::new(count(&gen), n),
        test: Rate::new(count(&test), n),
        decode_failures: test.iter().filter(|v| v.reason == Reason::TrapdoorDecode).count() as u64,
        zero_d: test.iter().filter(|v| v.reason == Reason::ZeroD).count() as u64,
    })
}
