use serde::{Deserialize, Serialize};

use crate::zq::Modulus;

/// How strictly a parameter set is held to the asymptotic conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    Strict,
    #[default]
    Relaxed,
}

/// Explicit constants for the asymptotic conditions, used in strict mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrictConstants {
    /// `n ≥ a1_n · ℓ · log₂ q`
    pub a1_n: f64,
    /// `m ≥ a1_m · n · log₂ q`
    pub a1_m: f64,
    /// Relative tolerance on `B_P = q / (2 C_T √(m n log₂ q))`.
    pub a3_rel_tol: f64,
    /// Minimum for both `B_P/B_V` and `B_V/B_L`.
    pub a5_min_ratio: f64,
}

impl Default for StrictConstants {
    fn default() -> Self {
        Self { a1_n: 1.0, a1_m: 1.0, a3_rel_tol: 0.05, a5_min_ratio: 1000.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSet {
    /// Security parameter; symbolic at desk scale.
    pub lambda: u32,
    pub ell: usize,
    pub n: usize,
    pub m: usize,
    pub w: usize,
    pub q: Modulus,
    pub b_l: u64,
    pub b_v: u64,
    pub b_p: u64,
    /// Decode-margin constant of the trapdoor inversion.
    pub c_t: f64,
    #[serde(default)]
    pub mode: ValidationMode,
    #[serde(default)]
    pub strict: StrictConstants,
}

impl ParameterSet {
    pub fn log2_q(&self) -> f64 {
        (self.q.value() as f64).log2()
    }

    /// Bits per coordinate in the binary representation.
    pub fn bits_per_coord(&self) -> usize {
        self.q.bits() as usize
    }

    /// `(B_P √m)²`, the inclusive bound on squared preimage residuals.
    pub fn preimage_bound_sq(&self) -> u128 {
        self.b_p as u128 * self.b_p as u128 * self.m as u128
    }

    /// `(B_V √m)²`.
    pub fn verifier_bound_sq(&self) -> u128 {
        self.b_v as u128 * self.b_v as u128 * self.m as u128
    }

    /// The value `q / (2 C_T √(m n log₂ q))` that the prover bound should equal.
    pub fn a3_target(&self) -> f64 {
        self.q.value() as f64 / (2.0 * self.c_t * (self.m as f64 * self.n as f64 * self.log2_q()).sqrt())
    }

    /// `C_T` implied by the configured `B_P`.
    pub fn realized_c_t(&self) -> f64 {
        self.q.value() as f64 / (2.0 * self.b_p as f64 * (self.m as f64 * self.n as f64 * self.log2_q()).sqrt())
    }

    /// Size of `Z_qⁿ`, saturating.
    pub fn domain_size(&self) -> u128 {
        (self.q.value() as u128).checked_pow(self.n as u32).unwrap_or(u128::MAX)
    }
}
