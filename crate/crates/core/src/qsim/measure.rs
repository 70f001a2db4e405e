use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use super::{ProverState, QsimError, Term};
use crate::zq::{gf2_dot, BitString, ZqVector};

/// Largest `w + 1` for which the dense Hadamard transform is used.
pub const DEFAULT_HADAMARD_THRESHOLD: usize = 20;

fn sample_index<R: Rng + ?Sized>(weights: impl Iterator<Item = f64>, total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

/// Computational-basis measurement of `(b, x)`.
pub fn measure_standard<R: Rng + ?Sized>(state: &ProverState, rng: &mut R) -> (bool, ZqVector) {
    let i = sample_index(state.terms().iter().map(Term::weight), state.norm_sqr(), rng);
    let t = &state.terms()[i];
    (t.b == 1, state.x_of(t))
}

fn groups(state: &ProverState) -> BTreeMap<u16, Vec<&Term>> {
    let mut out: BTreeMap<u16, Vec<&Term>> = BTreeMap::new();
    for t in state.terms() {
        out.entry(t.tag).or_default().push(t);
    }
    out
}

/// Hadamard-basis measurement of the `(b, J(x))` register, returning `(c, d)`.
///
/// Each tag is an incoherent branch. Branches with at most two terms are
/// sampled in closed form; larger branches go through the dense transform,
/// which requires `w + 1 ≤ threshold`.
pub fn measure_hadamard<R: Rng + ?Sized>(
    state: &ProverState,
    threshold: usize,
    rng: &mut R,
) -> Result<(bool, BitString), QsimError> {
    let w = state.w();
    let groups = groups(state);
    if groups.values().any(|g| g.len() > 2) {
        return measure_hadamard_dense(state, threshold, rng);
    }

    let weights: Vec<f64> = groups.values().map(|g| g.iter().map(|t| t.weight()).sum()).collect();
    let pick = sample_index(weights.iter().copied(), weights.iter().sum(), rng);
    let group = groups.values().nth(pick).expect("index from the same map");
    let mut c: bool = rng.random();
    let mut d = BitString::from_bits((0..w).map(|_| rng.random::<bool>()));
    if let [t0, t1] = group.as_slice() {
        // P(c·Δb ⊕ d·Δz = 0) = (1 + 2 Re(a₀ ā₁) / W) / 2
        let total = t0.weight() + t1.weight();
        let p_even = 0.5 * (1.0 + 2.0 * (t0.amp * t1.amp.conj()).re / total);
        let want_odd = rng.random::<f64>() >= p_even;
        let dz = state.binary_x(t0).xor(&state.binary_x(t1))?;
        let delta_b = t0.b != t1.b;
        let parity = (c && delta_b) ^ gf2_dot(&d, &dz)?;
        if parity != want_odd {
            if delta_b {
                c = !c;
            } else {
                let i = dz.iter().position(|bit| bit).expect("distinct terms differ somewhere");
                d.set(i, !d.get(i));
            }
        }
    }
    Ok((c, d))
}

/// Hadamard-basis measurement sampled from the full dense distribution,
/// whatever the branch sizes.
pub fn measure_hadamard_dense<R: Rng + ?Sized>(
    state: &ProverState,
    threshold: usize,
    rng: &mut R,
) -> Result<(bool, BitString), QsimError> {
    let w = state.w();
    let dist = hadamard_distribution(state, threshold)?;
    let k = sample_index(dist.iter().copied(), dist.iter().sum(), rng) as u64;
    Ok((k >> w & 1 == 1, BitString::from_low_word(k, w)))
}

/// Exact outcome distribution over all `2^{w+1}` values of `(c, d)`, indexed
/// with `d` in bits `0..w` and `c` in bit `w`.
pub fn hadamard_distribution(state: &ProverState, threshold: usize) -> Result<Vec<f64>, QsimError> {
    let w = state.w();
    if w + 1 > threshold || w + 1 > 63 {
        return Err(QsimError::SupportTooLarge { needed: w + 1, threshold });
    }
    let size = 1usize << (w + 1);
    let scale = (size as f64).sqrt().recip();
    let mut probs = vec![0.0; size];
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for group in groups(state).values() {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for t in group {
            let z = state.binary_x(t).low_word() as usize | (t.b as usize) << w;
            buf[z] += t.amp;
        }
        walsh_hadamard(&mut buf);
        for (p, v) in probs.iter_mut().zip(&buf) {
            *p += (v * scale).norm_sqr();
        }
    }
    Ok(probs)
}

fn walsh_hadamard(v: &mut [Complex64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}
