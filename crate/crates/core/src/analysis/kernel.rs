use rand::Rng;
use serde::Serialize;

use super::AnalysisError;
use crate::samplers::{sample_lossy, sample_uniform_vector, Setup};
use crate::zq::{ZqMatrix, ZqVector};

/// `#{x ∈ {0,1}ⁿ : C·x = t}`, by enumerating all `2ⁿ` binary vectors.
pub fn count_binary_solutions(c: &ZqMatrix, t: &ZqVector) -> Result<u64, AnalysisError> {
    let n = c.cols();
    if n > 30 {
        return Err(AnalysisError::InvalidInput(format!("2^{n} binary vectors is too many to enumerate")));
    }
    if t.len() != c.rows() {
        return Err(crate::zq::ZqError::DimensionMismatch { expected: c.rows(), got: t.len() }.into());
    }
    let q = c.modulus();
    let cols: Vec<Vec<u64>> = (0..n).map(|j| c.column(j)).collect();
    // Gray-code walk: one column added or removed per step
    let mut acc = vec![0u64; c.rows()];
    let mut count = (acc == t.entries()) as u64;
    let mut gray = 0u64;
    for i in 1u64..(1 << n) {
        let j = i.trailing_zeros() as usize;
        let bit = 1u64 << j;
        let adding = gray & bit == 0;
        gray ^= bit;
        for (a, &v) in acc.iter_mut().zip(&cols[j]) {
            *a = if adding { q.add(*a, v) } else { q.sub(*a, v) };
        }
        count += (acc == t.entries()) as u64;
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub trials: usize,
    pub n: usize,
    pub ell: usize,
    pub q: u64,
    /// The fixed nonzero target `t` shared by all trials.
    pub target: Vec<u64>,
    /// `(2ⁿ − 1)/q^ℓ`.
    pub expected_mean: f64,
    pub mean: f64,
    /// Standard deviation of the sample mean under pairwise independence.
    pub sigma_mean: f64,
    /// `(2ⁿ − 1)/(2 q^ℓ)`.
    pub low_threshold: f64,
    pub low_frequency: f64,
    /// `4 q^ℓ/(2ⁿ − 1)`.
    pub chebyshev_bound: f64,
    /// Mean number of binary `x` whose image `Ã·x` lies within `B_P √m` of
    /// `B·t`. Reported for comparison only.
    pub metric_mean: f64,
    pub counts: Vec<u64>,
}

impl KernelReport {
    pub fn mean_within_3_sigma(&self) -> bool {
        (self.mean - self.expected_mean).abs() <= 3.0 * self.sigma_mean
    }

    pub fn low_frequency_ok(&self, tolerance: f64) -> bool {
        self.low_frequency <= self.chebyshev_bound + tolerance
    }
}

/// Counts, over fresh lossy matrices `Ã = B·C + F`, the binary vectors in the
/// fiber `{x : C·x = t}` of one fixed nonzero `t ∈ Z_q^ℓ`.
pub fn binary_kernel_experiment<R: Rng + ?Sized>(
    setup: &Setup,
    trials: usize,
    rng: &mut R,
) -> Result<KernelReport, AnalysisError> {
    let p = &setup.params;
    let q = p.q;
    if trials == 0 {
        return Err(AnalysisError::InvalidInput("at least one trial is required".into()));
    }
    let target = loop {
        let t = sample_uniform_vector(p.ell, q, rng);
        if !t.is_zero() {
            break t;
        }
    };

    let mut counts = Vec::with_capacity(trials);
    let mut metric_total = 0u64;
    let bound_sq = p.preimage_bound_sq();
    for _ in 0..trials {
        let (a, w) = sample_lossy(setup, rng);
        counts.push(count_binary_solutions(&w.c, &target)?);
        let center = w.b.matvec(&target)?;
        for bits in 0u64..(1 << p.n) {
            let x = ZqVector::from_raw((0..p.n).map(|i| (bits >> i) & 1).collect(), q);
            if center.sub(&a.matvec(&x)?)?.norm_sq() <= bound_sq {
                metric_total += 1;
            }
        }
    }

    let qell = (q.value() as f64).powi(p.ell as i32);
    let nonzero = ((1u64 << p.n) - 1) as f64;
    let pr = 1.0 / qell;
    let low_threshold = nonzero / (2.0 * qell);
    let mean = counts.iter().sum::<u64>() as f64 / trials as f64;
    let low = counts.iter().filter(|&&c| c as f64 <= low_threshold).count();
    Ok(KernelReport {
        trials,
        n: p.n,
        ell: p.ell,
        q: q.value(),
        target: target.entries().to_vec(),
        expected_mean: nonzero * pr,
        mean,
        sigma_mean: (nonzero * pr * (1.0 - pr) / trials as f64).sqrt(),
        low_threshold,
        low_frequency: low as f64 / trials as f64,
        chebyshev_bound: 4.0 * qell / nonzero,
        metric_mean: metric_total as f64 / trials as f64,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{session_rng, ParameterSet, Stream, ValidationMode};
    use crate::zq::Modulus;

    fn t2l1() -> std::sync::Arc<Setup> {
        Setup::new(ParameterSet {
            lambda: 8,
            ell: 1,
            n: 8,
            m: 24,
            w: 24,
            q: Modulus::new(5).unwrap(),
            b_l: 6,
            b_v: 7,
            b_p: 8,
            c_t: 1.0,
            mode: ValidationMode::Relaxed,
            strict: Default::default(),
        })
    }

    #[test]
    fn gray_walk_matches_direct_count() {
        let q = Modulus::new(7).unwrap();
        let mut rng = session_rng(3, 0, Stream::Experiment);
        for _ in 0..20 {
            let c = crate::samplers::sample_uniform_matrix(2, 6, q, &mut rng);
            let t = sample_uniform_vector(2, q, &mut rng);
            let direct = (0u64..64)
                .filter(|bits| {
                    let x = ZqVector::from_raw((0..6).map(|i| (bits >> i) & 1).collect(), q);
                    c.matvec(&x).unwrap() == t
                })
                .count() as u64;
            assert_eq!(count_binary_solutions(&c, &t).unwrap(), direct);
        }
    }

    /// Exact oracle over every `C ∈ Z_5^{1×8}` for `t = 1`: the mean fiber size
    /// is exactly 51 and the low-count probability respects the bound.
    #[test]
    fn exhaustive_mean_is_51() {
        let q = Modulus::new(5).unwrap();
        let t = ZqVector::new(vec![1], q).unwrap();
        let mut total = 0u64;
        let mut low = 0u64;
        let size = 5u64.pow(8);
        for idx in 0..size {
            let row: Vec<u64> = (0..8).map(|i| (idx / 5u64.pow(i)) % 5).collect();
            let c = ZqMatrix::new(1, 8, row, q).unwrap();
            let k = count_binary_solutions(&c, &t).unwrap();
            total += k;
            low += (k as f64 <= 25.5) as u64;
        }
        assert_eq!(total, 51 * size);
        assert!((low as f64 / size as f64) <= 4.0 * 5.0 / 255.0);
    }

    #[test]
    fn experiment_statistics() {
        let s = t2l1();
        let mut rng = session_rng(4, 0, Stream::Experiment);
        let r = binary_kernel_experiment(&s, 200, &mut rng).unwrap();
        assert_eq!(r.expected_mean, 51.0);
        assert!(r.mean_within_3_sigma(), "{r:?}");
        assert!(r.low_frequency_ok(0.05));
        assert_ne!(r.target, vec![0]);
    }
}
