use rand::Rng;
use serde::Serialize;

use super::AnalysisError;
use crate::samplers::{sample_binary, sample_lossy, Setup, TruncatedGaussian};
use crate::zq::{ZqMatrix, ZqVector};

/// Posterior over binary secrets; index `i` encodes `s` with `s_j` = bit `j` of `i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorDistribution {
    pub probs: Vec<f64>,
}

impl PosteriorDistribution {
    pub fn max(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0
    }

    pub fn prob_of(&self, s: &[bool]) -> f64 {
        let idx = s.iter().enumerate().fold(0usize, |acc, (j, &b)| acc | (b as usize) << j);
        self.probs[idx]
    }
}

/// `Pr(s | matrix, u) ∝ D_{B_V}(u − matrix·s)` over all `s ∈ {0,1}ⁿ`, in log space.
pub fn posterior(
    matrix: &ZqMatrix,
    u: &ZqVector,
    noise_v: &TruncatedGaussian,
) -> Result<PosteriorDistribution, AnalysisError> {
    let n = matrix.cols();
    if n > 24 {
        return Err(AnalysisError::InvalidInput(format!("2^{n} candidate secrets is too many")));
    }
    let q = matrix.modulus();
    let logs: Vec<f64> = (0..1usize << n)
        .map(|i| {
            let s = ZqVector::from_raw((0..n).map(|j| ((i >> j) & 1) as u64).collect(), q);
            let r = u.sub(&matrix.matvec(&s)?)?;
            Ok(noise_v.log_density_vector(&r))
        })
        .collect::<Result<_, AnalysisError>>()?;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(AnalysisError::EmptyPosterior);
    }
    let weights: Vec<f64> = logs.iter().map(|&l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(PosteriorDistribution { probs: weights.into_iter().map(|w| w / total).collect() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorReport {
    pub trials: usize,
    /// `e^{8π m n B_L / B_V}`.
    pub slack: f64,
    /// `3 · slack · q^ℓ / (2ⁿ − 1)`.
    pub threshold: f64,
    /// The threshold is at least 1, so no posterior can exceed it.
    pub vacuous: bool,
    pub exceed_frequency: f64,
    pub mean_max: f64,
    pub median_max: f64,
    pub max_max: f64,
    /// Fraction of trials whose posterior mode is the true secret.
    pub mode_is_secret: f64,
    /// `q^ℓ/(2ⁿ − 1)`, the unslackened scale of the bound.
    pub base_scale: f64,
    pub max_posteriors: Vec<f64>,
}

/// Lossy instances `u = Ã·s + e` and their maximum posterior probability.
pub fn posterior_experiment<R: Rng + ?Sized>(
    setup: &Setup,
    trials: usize,
    rng: &mut R,
) -> Result<PosteriorReport, AnalysisError> {
    let p = &setup.params;
    if trials == 0 {
        return Err(AnalysisError::InvalidInput("at least one trial is required".into()));
    }
    let slack = (8.0 * std::f64::consts::PI * (p.m * p.n) as f64 * p.b_l as f64 / p.b_v as f64).exp();
    let base_scale = (p.q.value() as f64).powi(p.ell as i32) / ((1u64 << p.n) - 1) as f64;
    let threshold = 3.0 * slack * base_scale;

    let mut maxima = Vec::with_capacity(trials);
    let mut hits = 0usize;
    for _ in 0..trials {
        let (a, _) = sample_lossy(setup, rng);
        let s = sample_binary(p.n, rng);
        let e = setup.noise_v.sample_vector(p.m, rng);
        let u = a.matvec(&ZqVector::from_bits(&s, p.q))?.add(&e)?;
        let post = posterior(&a, &u, &setup.noise_v)?;
        let s_bits: Vec<bool> = s.iter().collect();
        if post.argmax() == s_bits.iter().enumerate().fold(0usize, |acc, (j, &b)| acc | (b as usize) << j) {
            hits += 1;
        }
        maxima.push(post.max());
    }
    let mut sorted = maxima.clone();
    sorted.sort_by(f64::total_cmp);
    let exceed = maxima.iter().filter(|&&m| m > threshold).count();
    Ok(PosteriorReport {
        trials,
        slack,
        threshold,
        vacuous: threshold >= 1.0,
        exceed_frequency: exceed as f64 / trials as f64,
        mean_max: maxima.iter().sum::<f64>() / trials as f64,
        median_max: sorted[trials / 2],
        max_max: *sorted.last().unwrap(),
        mode_is_secret: hits as f64 / trials as f64,
        base_scale,
        max_posteriors: maxima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{gen_trap, session_rng, ParameterSet, Stream, ValidationMode};
    use crate::zq::Modulus;

    fn t4() -> std::sync::Arc<Setup> {
        Setup::new(ParameterSet {
            lambda: 8,
            ell: 1,
            n: 4,
            m: 80,
            w: 68,
            q: Modulus::new(65537).unwrap(),
            b_l: 4,
            b_v: 512,
            b_p: 1024,
            c_t: 1.0,
            mode: ValidationMode::Relaxed,
            strict: Default::default(),
        })
    }

    #[test]
    fn exact_image_with_isolated_secret_is_a_point_mass() {
        let q = Modulus::new(101).unwrap();
        let a = ZqMatrix::from_rows(&[vec![50, 0], vec![0, 50], vec![50, 50]], q).unwrap();
        let s = ZqVector::new(vec![1, 0], q).unwrap();
        let u = a.matvec(&s).unwrap();
        let noise = TruncatedGaussian::new(q, 3);
        let post = posterior(&a, &u, &noise).unwrap();
        assert_eq!(post.probs, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(post.prob_of(&[true, false]), 1.0);
    }

    #[test]
    fn inconsistent_instance_is_an_error() {
        let q = Modulus::new(101).unwrap();
        let a = ZqMatrix::zeros(3, 2, q);
        let u = ZqVector::new(vec![50, 50, 50], q).unwrap();
        assert_eq!(posterior(&a, &u, &TruncatedGaussian::new(q, 3)), Err(AnalysisError::EmptyPosterior));
    }

    #[test]
    fn trapdoor_regime_concentrates_on_secret() {
        let setup = t4();
        let mut rng = session_rng(8, 0, Stream::Experiment);
        for _ in 0..20 {
            let (a, _) = gen_trap(&setup.params, &mut rng).unwrap();
            let s = sample_binary(4, &mut rng);
            let u = a
                .matvec(&ZqVector::from_bits(&s, a.modulus()))
                .unwrap()
                .add(&setup.noise_v.sample_vector(80, &mut rng))
                .unwrap();
            let post = posterior(&a, &u, &setup.noise_v).unwrap();
            assert!(post.prob_of(&s.iter().collect::<Vec<_>>()) >= 0.99);
            assert!((post.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    /// Relabelling the secret coordinates permutes the posterior accordingly.
    #[test]
    fn permutation_invariance() {
        let q = Modulus::new(17).unwrap();
        let mut rng = session_rng(9, 0, Stream::Experiment);
        let a = crate::samplers::sample_uniform_matrix(6, 3, q, &mut rng);
        let noise = TruncatedGaussian::new(q, 8);
        let u = a.matvec(&ZqVector::new(vec![1, 0, 1], q).unwrap()).unwrap();
        let post = posterior(&a, &u, &noise).unwrap();
        let perm = [2usize, 0, 1];
        let rows: Vec<Vec<i64>> = (0..6).map(|r| perm.iter().map(|&c| a.get(r, c) as i64).collect()).collect();
        let ap = ZqMatrix::from_rows(&rows, q).unwrap();
        let post_p = posterior(&ap, &u, &noise).unwrap();
        for i in 0..8usize {
            let mut j = 0;
            for (k, &src) in perm.iter().enumerate() {
                j |= ((i >> src) & 1) << k;
            }
            assert!((post.probs[i] - post_p.probs[j]).abs() < 1e-12);
        }
    }
}
