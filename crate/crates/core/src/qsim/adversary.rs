use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{honest_commit, measure_hadamard, measure_standard, CommitOptions, ProverEvent, ProverState, QsimError};
use crate::analysis::Packing;
use crate::protocol::{Instance, Prover};
use crate::samplers::{SessionRng, Setup};
use crate::zq::{BitString, ZqVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AdversaryKind {
    Honest,
    /// Measures its register in the standard basis right after committing.
    Collapsed,
    /// Sends `y = u` and keeps the single known preimage `(1, 0)`.
    ClassicalZero,
    /// Honest commitment with branch weights `α²` and `1 − α²`.
    Skew(f64),
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Honest => f.write_str("honest"),
            Self::Collapsed => f.write_str("collapsed"),
            Self::ClassicalZero => f.write_str("classical_zero"),
            Self::Skew(a) => write!(f, "skew:{a}"),
        }
    }
}

impl FromStr for AdversaryKind {
    type Err = QsimError;

    /// Accepts `honest`, `collapsed`, `classical_zero`, `skew:<α>` and `skew(<α>)`.
    fn from_str(s: &str) -> Result<Self, QsimError> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "honest" => return Ok(Self::Honest),
            "collapsed" => return Ok(Self::Collapsed),
            "classical_zero" | "classical-zero" => return Ok(Self::ClassicalZero),
            _ => {}
        }
        let arg = lower
            .strip_prefix("skew:")
            .or_else(|| lower.strip_prefix("skew(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| QsimError::UnknownAdversary(s.to_string()))?;
        let alpha: f64 = arg.trim().parse().map_err(|_| QsimError::UnknownAdversary(s.to_string()))?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(QsimError::BadSkew(alpha));
        }
        Ok(Self::Skew(alpha))
    }
}

impl Serialize for AdversaryKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AdversaryKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A prover whose register is simulated exactly.
#[derive(Debug)]
pub struct SimulatedProver {
    kind: AdversaryKind,
    setup: Arc<Setup>,
    opts: CommitOptions,
    hadamard_threshold: usize,
    state: Option<ProverState>,
    events: Vec<ProverEvent>,
}

pub fn make_adversary(
    kind: AdversaryKind,
    setup: Arc<Setup>,
    opts: CommitOptions,
    hadamard_threshold: usize,
) -> SimulatedProver {
    SimulatedProver { kind, setup, opts, hadamard_threshold, state: None, events: Vec::new() }
}

impl SimulatedProver {
    pub fn kind(&self) -> AdversaryKind {
        self.kind
    }

    /// The register as it stands after the last commitment, if not yet measured.
    pub fn state(&self) -> Option<&ProverState> {
        self.state.as_ref()
    }

    /// Events from every commitment so far.
    pub fn events(&self) -> &[ProverEvent] {
        &self.events
    }

    fn commit_inner(&mut self, instance: &Instance, rng: &mut SessionRng) -> Result<ZqVector, QsimError> {
        let p = &self.setup.params;
        if let AdversaryKind::ClassicalZero = self.kind {
            let packing = Packing::new(p.q, p.n).ok_or(QsimError::PackingOverflow { q: p.q.value(), n: p.n })?;
            self.state = Some(ProverState::point(packing, true, &ZqVector::zeros(p.n, p.q)));
            return Ok(instance.u.clone());
        }
        let c = honest_commit(&instance.matrix, &instance.u, &self.setup, &self.opts, rng)?;
        self.events.extend(c.events);
        let state = match self.kind {
            AdversaryKind::Honest => c.state,
            AdversaryKind::Collapsed => {
                let (b, x) = measure_standard(&c.state, rng);
                ProverState::point(c.state.packing(), b, &x)
            }
            AdversaryKind::Skew(alpha) => c.state.reweight_sectors(alpha)?,
            AdversaryKind::ClassicalZero => unreachable!(),
        };
        self.state = Some(state);
        Ok(c.y)
    }
}

impl Prover for SimulatedProver {
    fn commit(&mut self, instance: &Instance, rng: &mut SessionRng) -> Result<ZqVector, QsimError> {
        self.commit_inner(instance, rng)
    }

    fn answer_generation(&mut self, rng: &mut SessionRng) -> Result<(bool, ZqVector), QsimError> {
        let state = self.state.take().ok_or(QsimError::NotCommitted)?;
        Ok(measure_standard(&state, rng))
    }

    fn answer_test(&mut self, rng: &mut SessionRng) -> Result<(bool, BitString), QsimError> {
        let state = self.state.take().ok_or(QsimError::NotCommitted)?;
        measure_hadamard(&state, self.hadamard_threshold, rng)
    }

    fn register(&mut self) -> Option<&mut ProverState> {
        self.state.as_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_parsing_round_trips() {
        for s in ["honest", "collapsed", "classical_zero", "skew:0.3", "skew:0.7071067811865476"] {
            let k: AdversaryKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert_eq!("skew(0.5)".parse::<AdversaryKind>().unwrap(), AdversaryKind::Skew(0.5));
        assert!(matches!("sneaky".parse::<AdversaryKind>(), Err(QsimError::UnknownAdversary(_))));
        assert!(matches!("skew:1.5".parse::<AdversaryKind>(), Err(QsimError::BadSkew(_))));
        let json = serde_json::to_string(&AdversaryKind::Skew(0.6)).unwrap();
        assert_eq!(json, "\"skew:0.6\"");
        assert_eq!(serde_json::from_str::<AdversaryKind>(&json).unwrap(), AdversaryKind::Skew(0.6));
    }
}
