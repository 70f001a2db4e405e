use rand::Rng;

use super::uniform::sample_uniform_matrix;
use super::Setup;
use crate::zq::{ZqError, ZqMatrix, ZqVector};

/// Witness for a lossy matrix `Ã = B·C + F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LossyWitness {
    /// `m × ℓ`, uniform.
    pub b: ZqMatrix,
    /// `ℓ × n`, uniform.
    pub c: ZqMatrix,
    /// `m × n`, entries drawn from `D_{Z_q,B_L}`.
    pub f: ZqMatrix,
}

impl LossyWitness {
    /// Checks `Ã = B·C + F` entry-exactly and `|F_ij| ≤ B_L`.
    pub fn verify(&self, a: &ZqMatrix, b_l: u64) -> Result<bool, ZqError> {
        let q = self.f.modulus();
        let small = self.f.data().iter().all(|&v| q.centered(v).unsigned_abs() <= b_l);
        Ok(small && self.b.matmul(&self.c)?.add(&self.f)? == *a)
    }

    /// `C·x`, the lossy component of `Ã·x`.
    pub fn project(&self, x: &ZqVector) -> Result<ZqVector, ZqError> {
        self.c.matvec(x)
    }
}

/// Samples a lossy matrix and its witness.
pub fn sample_lossy<R: Rng + ?Sized>(setup: &Setup, rng: &mut R) -> (ZqMatrix, LossyWitness) {
    let p = &setup.params;
    let q = p.q;
    let b = sample_uniform_matrix(p.m, p.ell, q, rng);
    let c = sample_uniform_matrix(p.ell, p.n, q, rng);
    let f_data = (0..p.m * p.n).map(|_| setup.noise_l.sample(rng)).collect();
    let f = ZqMatrix::new(p.m, p.n, f_data, q).expect("dimensions are positive");
    let a = b.matmul(&c).and_then(|bc| bc.add(&f)).expect("shapes agree");
    (a, LossyWitness { b, c, f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{session_rng, ParameterSet, Stream, ValidationMode};
    use crate::zq::Modulus;

    fn setup() -> std::sync::Arc<Setup> {
        Setup::new(ParameterSet {
            lambda: 8,
            ell: 1,
            n: 4,
            m: 12,
            w: 20,
            q: Modulus::new(17).unwrap(),
            b_l: 4,
            b_v: 5,
            b_p: 6,
            c_t: 1.0,
            mode: ValidationMode::Relaxed,
            strict: Default::default(),
        })
    }

    #[test]
    fn witness_identity_and_rank() {
        let s = setup();
        let mut rng = session_rng(2, 0, Stream::Experiment);
        for _ in 0..20 {
            let (a, w) = sample_lossy(&s, &mut rng);
            assert!(w.verify(&a, s.params.b_l).unwrap());
            assert!(a.sub(&w.f).unwrap().rank() <= s.params.ell);
        }
    }

    #[test]
    fn kernel_vectors_only_see_noise() {
        let s = setup();
        let mut rng = session_rng(4, 0, Stream::Experiment);
        let q = s.params.q;
        let mut hits = 0;
        for _ in 0..50 {
            let (a, w) = sample_lossy(&s, &mut rng);
            // brute-force a nonzero kernel vector of C
            for idx in 1..17u64.pow(4) {
                let x: Vec<u64> = (0..4).map(|i| (idx / 17u64.pow(i)) % 17).collect();
                let x = ZqVector::new(x, q).unwrap();
                if w.project(&x).unwrap().is_zero() {
                    let lhs = a.matvec(&x).unwrap().sub(&w.f.matvec(&x).unwrap()).unwrap();
                    assert!(lhs.is_zero());
                    hits += 1;
                    break;
                }
            }
        }
        assert_eq!(hits, 50);
    }
}
