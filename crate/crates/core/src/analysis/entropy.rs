use serde::Serialize;

use super::{AnalysisError, Rate};
use crate::qsim::ProverState;
use crate::samplers::ParameterSet;

/// `−log₂ max_{(b,x)} Pr(b, x)` for a standard-basis measurement of `state`.
pub fn min_entropy_exact(state: &ProverState) -> f64 {
    let terms = state.terms();
    let top = if terms.iter().all(|t| t.tag == terms[0].tag) {
        // distinct terms within one tag are distinct outcomes
        terms.iter().map(|t| t.weight()).fold(0.0, f64::max)
    } else {
        state.outcome_probabilities().into_values().fold(0.0, f64::max)
    };
    -top.log2()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothEntropyReport {
    pub transcripts: usize,
    pub threshold_bits: f64,
    pub below: usize,
    /// Fraction of transcripts below the threshold: the empirical smoothing
    /// parameter for `H^ε_∞ ≥ threshold`.
    pub epsilon: f64,
    pub mean_bits: f64,
    pub min_bits: f64,
}

pub fn smooth_min_entropy_report(entropies: &[f64], threshold_bits: f64) -> SmoothEntropyReport {
    let below = entropies.iter().filter(|&&h| h < threshold_bits).count();
    let n = entropies.len();
    SmoothEntropyReport {
        transcripts: n,
        threshold_bits,
        below,
        epsilon: if n == 0 { 0.0 } else { below as f64 / n as f64 },
        mean_bits: if n == 0 { f64::NAN } else { entropies.iter().sum::<f64>() / n as f64 },
        min_bits: entropies.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyCertificate {
    pub p_g: f64,
    /// Test pass probability in excess of ½.
    pub p_t_excess: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_g_rate: Option<Rate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_t_rate: Option<Rate>,
    /// `½ − p_T + √(1 − p_G)`.
    pub delta: f64,
    /// `δ ≤ ½`; otherwise nothing is certified.
    pub guarantee: bool,
    /// `5 δ^{1/4}` when `guarantee`.
    pub epsilon: Option<f64>,
    /// `2 (1 − 4 p_T²)^{1/4}`, the bound for generation pass rate 1.
    pub epsilon_prime: f64,
    pub c_offset: f64,
    /// `n − ℓ log₂ q − c_offset`.
    pub bound_bits: f64,
}

pub fn entropy_certificate(
    p_g: f64,
    p_t_excess: f64,
    params: &ParameterSet,
    c_offset: f64,
) -> Result<EntropyCertificate, AnalysisError> {
    if !(p_g > 0.0 && p_g <= 1.0) {
        return Err(AnalysisError::InvalidInput(format!("p_G = {p_g} outside (0, 1]")));
    }
    if !(0.0..=0.5).contains(&p_t_excess) {
        return Err(AnalysisError::InvalidInput(format!("p_T excess = {p_t_excess} outside [0, 1/2]")));
    }
    let delta = 0.5 - p_t_excess + (1.0 - p_g).sqrt();
    let guarantee = delta <= 0.5;
    let inner = (1.0 - 4.0 * p_t_excess * p_t_excess).max(0.0);
    Ok(EntropyCertificate {
        p_g,
        p_t_excess,
        p_g_rate: None,
        p_t_rate: None,
        delta,
        guarantee,
        epsilon: guarantee.then(|| 5.0 * delta.max(0.0).powf(0.25)),
        epsilon_prime: 2.0 * inner.powf(0.25),
        c_offset,
        bound_bits: params.n as f64 - params.ell as f64 * params.log2_q() - c_offset,
    })
}

/// The test pass probability in excess of ½ implied by a measured rate, after
/// undoing the `2^{−w}` loss to `d = 0`.
pub fn p_t_excess_from_rate(rate: f64, w: usize) -> f64 {
    let nonzero = 1.0 - (-(w as f64)).exp2();
    (rate / nonzero - 0.5).clamp(0.0, 0.5)
}

/// Total variation distance from `probs` to the nearest distribution whose
/// min-entropy is at least `h` bits, i.e. `Σ max(0, p − 2^{−h})`, valid when
/// the support has room for the displaced mass.
pub fn distance_to_min_entropy(probs: &[f64], h: f64) -> f64 {
    let cap = (-h).exp2();
    probs.iter().map(|&p| (p - cap).max(0.0)).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkewCheck {
    pub alpha: f64,
    /// `(1 − 2^{−w})(½ + α√(1 − α²))` from the amplitudes.
    pub predicted_pass: f64,
    pub measured: Rate,
    pub p_t_excess: f64,
    pub epsilon_prime: f64,
    /// Distance of the `(b, x)` output from min-entropy one bit.
    pub distance: f64,
    pub consistent: bool,
}

/// Compares the skewed claw's true output distance from one bit of min-entropy
/// with the `ε'` certified from its measured test pass rate.
pub fn skew_consistency(alpha: f64, state: &ProverState, measured: Rate) -> SkewCheck {
    let w = state.w() as i32;
    let nonzero = 1.0 - (-w as f64).exp2();
    let probs: Vec<f64> = state.outcome_probabilities().into_values().collect();
    let p_t_excess = p_t_excess_from_rate(measured.rate, state.w());
    let epsilon_prime = 2.0 * (1.0 - 4.0 * p_t_excess * p_t_excess).max(0.0).powf(0.25);
    let distance = distance_to_min_entropy(&probs, 1.0);
    SkewCheck {
        alpha,
        predicted_pass: nonzero * (0.5 + alpha * (1.0 - alpha * alpha).sqrt()),
        measured,
        p_t_excess,
        epsilon_prime,
        distance,
        consistent: distance <= epsilon_prime + 1e-12,
    }
}
