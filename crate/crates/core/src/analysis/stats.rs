use serde::{Deserialize, Serialize};

/// Wilson score interval at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// An observed proportion with its 95% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Rate {
    pub const Z95: f64 = 1.959963984540054;

    pub fn new(successes: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, Self::Z95);
        let rate = if trials == 0 { f64::NAN } else { successes as f64 / trials as f64 };
        Self { successes, trials, rate, ci_low, ci_high }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }

    pub fn overlaps(&self, other: &Rate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }

    pub fn std_error(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }
}
