use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::samplers::{LossyWitness, Trapdoor};
use crate::zq::{BitString, ZqMatrix, ZqVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Trapdoor matrix, trapdoor-based equation check.
    P1,
    /// Lossy matrix, equation check through preimage extraction.
    P2,
    /// Challenge first: lossy matrix for `G`, trapdoor matrix for `T`.
    P3,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::P1, Variant::P2, Variant::P3];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::P1 => "p1",
            Self::P2 => "p2",
            Self::P3 => "p3",
        })
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(Self::P1),
            "p2" => Ok(Self::P2),
            "p3" => Ok(Self::P3),
            other => Err(format!("unknown variant `{other}` (expected p1, p2 or p3)")),
        }
    }
}

/// `G` asks for a preimage, `T` for an equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Challenge {
    G,
    T,
}

impl Challenge {
    pub fn wire_byte(self) -> u8 {
        match self {
            Self::G => 0,
            Self::T => 1,
        }
    }

    pub fn from_wire(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::G),
            1 => Some(Self::T),
            _ => None,
        }
    }
}

/// How the verifier picks its challenge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChallengePolicy {
    #[default]
    Uniform,
    Generation,
    Test,
}

impl ChallengePolicy {
    pub fn forced(self) -> Option<Challenge> {
        match self {
            Self::Uniform => None,
            Self::Generation => Some(Challenge::G),
            Self::Test => Some(Challenge::T),
        }
    }
}

impl FromStr for ChallengePolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" | "random" => Ok(Self::Uniform),
            "g" | "generation" => Ok(Self::Generation),
            "t" | "test" => Ok(Self::Test),
            other => Err(format!("unknown challenge policy `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub matrix: ZqMatrix,
    pub u: ZqVector,
}

impl Instance {
    /// SHA-256 over the wire encoding of the instance, hex encoded.
    pub fn digest(&self) -> String {
        let payload = super::wire::encode_payload(&super::Message::Instance(self.clone()));
        hex::encode(Sha256::digest(payload))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Trapdoor(Trapdoor),
    Lossy(LossyWitness),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifierSecret {
    pub s: BitString,
    pub e: ZqVector,
    pub witness: Witness,
    pub variant: Variant,
    /// Drawn up front for P3, at the challenge step otherwise.
    pub challenge: Option<Challenge>,
}

/// Abort and rejection reasons, with their VERDICT wire codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    None,
    BadMagic,
    BadVersion,
    BadTag,
    Truncated,
    Malformed,
    OutOfOrder,
    Timeout,
    PreimageCheck,
    Equation,
    ZeroD,
    TrapdoorDecode,
    ProverError,
}

impl Reason {
    pub fn code(self) -> u16 {
        match self {
            Self::None => 0x0000,
            Self::BadMagic => 0x0001,
            Self::BadVersion => 0x0002,
            Self::BadTag => 0x0003,
            Self::Truncated => 0x0004,
            Self::Malformed => 0x0005,
            Self::OutOfOrder => 0x0006,
            Self::Timeout => 0x0007,
            Self::PreimageCheck => 0x0010,
            Self::Equation => 0x0011,
            Self::ZeroD => 0x0012,
            Self::TrapdoorDecode => 0x0013,
            Self::ProverError => 0x0020,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        Some(match code {
            0x0000 => Self::None,
            0x0001 => Self::BadMagic,
            0x0002 => Self::BadVersion,
            0x0003 => Self::BadTag,
            0x0004 => Self::Truncated,
            0x0005 => Self::Malformed,
            0x0006 => Self::OutOfOrder,
            0x0007 => Self::Timeout,
            0x0010 => Self::PreimageCheck,
            0x0011 => Self::Equation,
            0x0012 => Self::ZeroD,
            0x0013 => Self::TrapdoorDecode,
            0x0020 => Self::ProverError,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub accept: bool,
    pub reason: Reason,
}

impl Verdict {
    pub const ACCEPT: Verdict = Verdict { accept: true, reason: Reason::None };

    pub fn reject(reason: Reason) -> Self {
        Self { accept: false, reason }
    }
}
