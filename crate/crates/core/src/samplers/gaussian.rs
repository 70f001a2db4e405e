use std::f64::consts::PI;

use rand::Rng;

use crate::zq::{Modulus, ZqScalar, ZqVector};

/// Truncated discrete Gaussian over `Z_q` with parameter `B`: density
/// proportional to `exp(−π c²/B²)` on centered values `|c| ≤ B`, zero elsewhere.
///
/// Sampling is by inverse CDF over the fully enumerated support, which is exact
/// up to `f64` rounding and cheap for desk-scale bounds. Not constant time.
#[derive(Clone, Debug)]
pub struct TruncatedGaussian {
    q: Modulus,
    bound: u64,
    /// Smallest centered value in the support.
    lo: i64,
    /// Cumulative probabilities for centered values `lo, lo+1, ...`.
    cdf: Vec<f64>,
    log_norm: f64,
}

impl TruncatedGaussian {
    pub fn new(q: Modulus, bound: u64) -> Self {
        assert!(bound >= 1, "Gaussian parameter must be at least 1");
        let qv = q.value();
        let neg = ((qv - 1) / 2).min(bound) as i64;
        let pos = (qv / 2).min(bound) as i64;
        let b2 = (bound as f64) * (bound as f64);
        let weights: Vec<f64> = (-neg..=pos).map(|c| (-PI * (c * c) as f64 / b2).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Self { q, bound, lo: -neg, cdf, log_norm: total.ln() }
    }

    pub fn modulus(&self) -> Modulus {
        self.q
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn support_len(&self) -> usize {
        self.cdf.len()
    }

    /// Centered values of the support, ascending.
    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.cdf.len() as i64).map(move |i| self.lo + i)
    }

    fn in_support(&self, c: i64) -> bool {
        c >= self.lo && c < self.lo + self.cdf.len() as i64
    }

    /// Natural log of the density at centered value `c`; `−∞` off support.
    #[inline]
    pub fn log_density_centered(&self, c: i64) -> f64 {
        if !self.in_support(c) {
            return f64::NEG_INFINITY;
        }
        let b = self.bound as f64;
        -PI * (c as f64) * (c as f64) / (b * b) - self.log_norm
    }

    pub fn density(&self, x: u64) -> f64 {
        self.log_density_centered(self.q.centered(x % self.q.value())).exp()
    }

    /// Log-density of the product distribution on `Z_q^m`.
    pub fn log_density_vector(&self, v: &ZqVector) -> f64 {
        v.entries().iter().map(|&e| self.log_density_centered(self.q.centered(e))).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&p| p <= u).min(self.cdf.len() - 1);
        self.q.reduce_i64(self.lo + idx as i64)
    }

    pub fn sample_vector<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> ZqVector {
        ZqVector::new((0..m).map(|_| self.sample(rng)).collect(), self.q).expect("m > 0")
    }
}

/// Density of the truncated discrete Gaussian at `x`. Builds the normalizer
/// on every call; use [`TruncatedGaussian`] in loops.
pub fn dgauss_density(x: ZqScalar, bound: u64) -> f64 {
    TruncatedGaussian::new(x.modulus(), bound).density(x.value())
}

/// `m` i.i.d. coordinates; the result always satisfies `‖v‖ ≤ B√m`.
pub fn sample_dgauss_vector<R: Rng + ?Sized>(m: usize, bound: u64, q: Modulus, rng: &mut R) -> ZqVector {
    TruncatedGaussian::new(q, bound).sample_vector(m, rng)
}
