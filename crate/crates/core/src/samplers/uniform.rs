use rand::Rng;

use crate::zq::{BitString, Modulus, ZqMatrix, ZqVector};

/// Exactly uniform entries in `Z_q`.
pub fn sample_uniform_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, q: Modulus, rng: &mut R) -> ZqMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(0..q.value())).collect();
    ZqMatrix::new(rows, cols, data, q).expect("dimensions are positive")
}

pub fn sample_uniform_vector<R: Rng + ?Sized>(len: usize, q: Modulus, rng: &mut R) -> ZqVector {
    ZqVector::new((0..len).map(|_| rng.random_range(0..q.value())).collect(), q).expect("len > 0")
}

/// Uniform element of `{0,1}ⁿ`.
pub fn sample_binary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitString {
    BitString::from_bits((0..n).map(|_| rng.random::<bool>()))
}
