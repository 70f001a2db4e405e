use rand::Rng;
use thiserror::Error;

use super::types::{Challenge, ChallengePolicy, Instance, Reason, Variant, Verdict, VerifierSecret, Witness};
use super::wire::Message;
use crate::samplers::{gen_trap, invert, sample_binary, sample_lossy, ParameterSet, Setup, TrapdoorError};
use crate::zq::{binary_rep, gf2_dot, BitString, ZqVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifierError {
    #[error(transparent)]
    Trapdoor(#[from] TrapdoorError),
}

/// Samples the instance and the verifier's secret.
///
/// P3 draws its challenge before anything else and picks the matrix type from
/// it; P1 and P2 leave the challenge for later.
pub fn verifier_start<R: Rng + ?Sized>(
    variant: Variant,
    setup: &Setup,
    policy: ChallengePolicy,
    rng: &mut R,
) -> Result<(Instance, VerifierSecret), VerifierError> {
    let p = &setup.params;
    let challenge = match variant {
        Variant::P3 => Some(draw_challenge(policy, rng)),
        _ => None,
    };
    let use_trapdoor = match variant {
        Variant::P1 => true,
        Variant::P2 => false,
        Variant::P3 => challenge == Some(Challenge::T),
    };
    let (matrix, witness) = if use_trapdoor {
        let (a, t) = gen_trap(p, rng)?;
        (a, Witness::Trapdoor(t))
    } else {
        let (a, w) = sample_lossy(setup, rng);
        (a, Witness::Lossy(w))
    };
    let s = sample_binary(p.n, rng);
    let e = setup.noise_v.sample_vector(p.m, rng);
    let u = matrix.matvec(&ZqVector::from_bits(&s, p.q)).and_then(|v| v.add(&e)).expect("shapes agree");
    Ok((Instance { matrix, u }, VerifierSecret { s, e, witness, variant, challenge }))
}

fn draw_challenge<R: Rng + ?Sized>(policy: ChallengePolicy, rng: &mut R) -> Challenge {
    // the coin is always drawn so that forcing a challenge does not shift the
    // rest of the verifier's stream
    let coin: bool = rng.random();
    policy.forced().unwrap_or(if coin { Challenge::T } else { Challenge::G })
}

/// Accepts iff `‖y − A·x − b·u‖ ≤ B_P √m` (inclusive, compared exactly).
pub fn check_generation(params: &ParameterSet, instance: &Instance, y: &ZqVector, b: bool, x: &ZqVector) -> Verdict {
    let residual = (|| {
        let mut r = y.sub(&instance.matrix.matvec(x)?)?;
        if b {
            r = r.sub(&instance.u)?;
        }
        Ok::<_, crate::zq::ZqError>(r)
    })();
    match residual {
        Err(_) => Verdict::reject(Reason::Malformed),
        Ok(r) if r.norm_sq() <= params.preimage_bound_sq() => Verdict::ACCEPT,
        Ok(_) => Verdict::reject(Reason::PreimageCheck),
    }
}

/// Accepts iff `d ≠ 0` and `c = d·(J(x0) ⊕ J(x0 − s))`.
pub fn check_equation(params: &ParameterSet, s: &BitString, x0: &ZqVector, c: bool, d: &BitString) -> Verdict {
    if d.len() != params.w || x0.len() != params.n || s.len() != params.n {
        return Verdict::reject(Reason::Malformed);
    }
    if d.is_zero() {
        return Verdict::reject(Reason::ZeroD);
    }
    let x1 = x0.sub(&ZqVector::from_bits(s, params.q)).expect("same shape");
    let z = binary_rep(x0).xor(&binary_rep(&x1)).expect("same length");
    if gf2_dot(d, &z).expect("checked length") == c {
        Verdict::ACCEPT
    } else {
        Verdict::reject(Reason::Equation)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    AwaitImage,
    ChallengePending,
    AwaitResponse(Challenge),
    Done,
}

/// Verifier side of one session, enforcing the message order.
#[derive(Debug)]
pub struct VerifierMachine<'a> {
    setup: &'a Setup,
    instance: Instance,
    secret: VerifierSecret,
    stage: Stage,
    y: Option<ZqVector>,
    x0: Option<ZqVector>,
}

impl<'a> VerifierMachine<'a> {
    pub fn start<R: Rng + ?Sized>(
        variant: Variant,
        setup: &'a Setup,
        policy: ChallengePolicy,
        rng: &mut R,
    ) -> Result<Self, VerifierError> {
        let (instance, secret) = verifier_start(variant, setup, policy, rng)?;
        Ok(Self { setup, instance, secret, stage: Stage::AwaitImage, y: None, x0: None })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn secret(&self) -> &VerifierSecret {
        &self.secret
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn y(&self) -> Option<&ZqVector> {
        self.y.as_ref()
    }

    fn abort(&mut self, reason: Reason) -> Verdict {
        self.stage = Stage::Done;
        Verdict::reject(reason)
    }

    /// Takes the prover's image. Anything else at this point aborts the session.
    pub fn receive_image(&mut self, msg: Message) -> Result<(), Verdict> {
        match (self.stage, msg) {
            (Stage::AwaitImage, Message::Image(y)) => {
                if y.len() != self.setup.params.m || y.modulus() != self.setup.params.q {
                    return Err(self.abort(Reason::Malformed));
                }
                self.y = Some(y);
                self.stage = Stage::ChallengePending;
                Ok(())
            }
            _ => Err(self.abort(Reason::OutOfOrder)),
        }
    }

    /// Fixes the challenge: the pre-drawn one for P3, a fresh coin otherwise.
    pub fn issue_challenge<R: Rng + ?Sized>(&mut self, policy: ChallengePolicy, rng: &mut R) -> Challenge {
        assert_eq!(self.stage, Stage::ChallengePending, "challenge issued out of order");
        let c = match self.secret.challenge {
            Some(c) => c,
            None => {
                let c = draw_challenge(policy, rng);
                self.secret.challenge = Some(c);
                c
            }
        };
        self.stage = Stage::AwaitResponse(c);
        c
    }

    /// Supplies `x0` obtained by preimage extraction.
    pub fn set_extracted(&mut self, x0: ZqVector) {
        self.x0 = Some(x0);
    }

    /// Checks the response and finishes the session.
    pub fn receive_response(&mut self, msg: Message) -> Verdict {
        let p = &self.setup.params;
        let y = match &self.y {
            Some(y) => y.clone(),
            None => return self.abort(Reason::OutOfOrder),
        };
        let verdict = match (self.stage, msg) {
            (Stage::AwaitResponse(Challenge::G), Message::GenResp { b, x }) => {
                if x.len() != p.n {
                    Verdict::reject(Reason::Malformed)
                } else {
                    check_generation(p, &self.instance, &y, b, &x)
                }
            }
            (Stage::AwaitResponse(Challenge::T), Message::EqResp { c, d }) => match self.claw_base(&y) {
                Ok(x0) => check_equation(p, &self.secret.s, &x0, c, &d),
                Err(reason) => Verdict::reject(reason),
            },
            _ => Verdict::reject(Reason::OutOfOrder),
        };
        self.stage = Stage::Done;
        verdict
    }

    /// The `b = 0` end of the claw through `y`.
    ///
    /// Inverting `y = A(x̂ + b̂ s) + (b̂ e + ê)` directly yields `x̂ + b̂ s`, which is
    /// the `b = 0` representative whichever branch the prover committed to.
    fn claw_base(&self, y: &ZqVector) -> Result<ZqVector, Reason> {
        match &self.secret.witness {
            Witness::Trapdoor(t) => invert(&self.instance.matrix, t, y, &self.setup.params)
                .map(|inv| inv.s)
                .map_err(|_| Reason::TrapdoorDecode),
            Witness::Lossy(_) => self.x0.clone().ok_or(Reason::ProverError),
        }
    }
}
