use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::samplers::{ParameterSet, ValidationMode};

/// The parameter conditions, plus primality of `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Condition {
    Prime,
    Dimensions,
    A1,
    A2,
    A3,
    A4,
    A5,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Prime => "prime modulus",
            Self::Dimensions => "dimensions",
            Self::A1 => "A.1",
            Self::A2 => "A.2",
            Self::A3 => "A.3",
            Self::A4 => "A.4",
            Self::A5 => "A.5",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    pub condition: Condition,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    pub warnings: Vec<Finding>,
    pub bp_over_bv: f64,
    pub bv_over_bl: f64,
    /// `B_P / (q / (2 C_T √(m n log₂ q))) − 1`.
    pub a3_residual: f64,
    pub realized_c_t: f64,
}

impl ValidationReport {
    pub fn warns(&self, c: Condition) -> bool {
        self.warnings.iter().any(|f| f.condition == c)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("parameter set rejected: {}", .failures.iter().map(|f| format!("{} ({})", f.condition, f.message)).collect::<Vec<_>>().join("; "))]
pub struct ValidationError {
    pub failures: Vec<Finding>,
}

impl ValidationError {
    pub fn names(&self, c: Condition) -> bool {
        self.failures.iter().any(|f| f.condition == c)
    }
}

/// Checks a parameter set. Primality, dimensions, A.2 and A.4 are enforced in
/// both modes; A.1, A.3 and A.5 are enforced in strict mode and reported as
/// warnings in relaxed mode.
pub fn validate_params(p: &ParameterSet) -> Result<ValidationReport, ValidationError> {
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    let strict = p.mode == ValidationMode::Strict;
    let mut soft = |c: Condition, msg: String, failures: &mut Vec<Finding>| {
        let f = Finding { condition: c, message: msg };
        if strict {
            failures.push(f);
        } else {
            warnings.push(f);
        }
    };

    if !p.q.is_prime() {
        failures.push(Finding { condition: Condition::Prime, message: format!("q = {} is not prime", p.q.value()) });
    }
    if p.n == 0 || p.m == 0 || p.ell == 0 || p.ell > p.n {
        failures.push(Finding {
            condition: Condition::Dimensions,
            message: format!("need n, m ≥ 1 and 1 ≤ ℓ ≤ n (n = {}, m = {}, ℓ = {})", p.n, p.m, p.ell),
        });
    }
    let w = p.n * p.bits_per_coord();
    if p.w != w {
        failures.push(Finding { condition: Condition::A2, message: format!("w = {} but n⌈log₂ q⌉ = {w}", p.w) });
    }
    let two_sqrt_n_ok = (p.b_l as u128).pow(2) >= 4 * p.n as u128;
    if !(two_sqrt_n_ok && p.b_l < p.b_v && p.b_v < p.b_p) {
        failures.push(Finding {
            condition: Condition::A4,
            message: format!(
                "need 2√n ≤ B_L < B_V < B_P, got n = {}, B_L = {}, B_V = {}, B_P = {}",
                p.n, p.b_l, p.b_v, p.b_p
            ),
        });
    }

    let log_q = p.log2_q();
    let need_n = p.strict.a1_n * p.ell as f64 * log_q;
    let need_m = p.strict.a1_m * p.n as f64 * log_q;
    if (p.n as f64) < need_n || (p.m as f64) < need_m {
        soft(
            Condition::A1,
            format!("n = {} vs {need_n:.1} required, m = {} vs {need_m:.1} required", p.n, p.m),
            &mut failures,
        );
    }

    let target = p.a3_target();
    let a3_residual = p.b_p as f64 / target - 1.0;
    if a3_residual.abs() > p.strict.a3_rel_tol || !strict {
        soft(
            Condition::A3,
            format!("B_P = {} vs q/(2 C_T √(m n log q)) = {target:.3} (relative residual {a3_residual:+.3})", p.b_p),
            &mut failures,
        );
    }

    let bp_over_bv = p.b_p as f64 / p.b_v as f64;
    let bv_over_bl = p.b_v as f64 / p.b_l as f64;
    let min = p.strict.a5_min_ratio;
    if bp_over_bv < min || bv_over_bl < min || !strict {
        soft(
            Condition::A5,
            format!("B_P/B_V = {bp_over_bv:.3}, B_V/B_L = {bv_over_bl:.3} (threshold {min})"),
            &mut failures,
        );
    }

    if failures.is_empty() {
        Ok(ValidationReport {
            mode: p.mode,
            warnings,
            bp_over_bv,
            bv_over_bl,
            a3_residual,
            realized_c_t: p.realized_c_t(),
        })
    } else {
        Err(ValidationError { failures })
    }
}
