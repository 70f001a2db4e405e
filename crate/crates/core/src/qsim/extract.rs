use rand::Rng;

use super::{ProverState, QsimError};
use crate::zq::{BitString, ZqVector};

#[derive(Clone, Debug)]
pub struct ExtractionResult {
    /// The `b = 0` representative of the claw the state collapsed onto.
    pub x0: ZqVector,
    /// Support contained in `{(0, x0), (1, x0 − s)}`, renormalized.
    pub collapsed: ProverState,
}

/// Preimage extraction with knowledge of `s`.
///
/// Writes `a = x + b·s` into an auxiliary register and measures it: `a` is
/// drawn with probability `p_{0,a} + p_{1,a−s}` and the state collapses onto the
/// terms consistent with it.
pub fn extract_preimage<R: Rng + ?Sized>(
    state: &ProverState,
    s: &BitString,
    rng: &mut R,
) -> Result<ExtractionResult, QsimError> {
    let packing = state.packing();
    let bits: Vec<bool> = s.iter().collect();
    let aux: Vec<u128> =
        state.terms().iter().map(|t| if t.b == 1 { packing.shift(t.x, &bits, false) } else { t.x }).collect();

    let target = rng.random::<f64>() * state.norm_sqr();
    let mut acc = 0.0;
    let mut chosen = *aux.last().ok_or(QsimError::EmptyState)?;
    for (t, &a) in state.terms().iter().zip(&aux) {
        acc += t.weight();
        if target < acc {
            chosen = a;
            break;
        }
    }

    let kept = state.terms().iter().zip(&aux).filter(|(_, &a)| a == chosen).map(|(t, _)| *t).collect();
    Ok(ExtractionResult { x0: packing.unpack(chosen), collapsed: ProverState::normalized(packing, kept)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Packing;
    use crate::qsim::Term;
    use crate::samplers::{session_rng, Stream};
    use crate::zq::Modulus;
    use num_complex::Complex64;
    use std::collections::HashMap;

    fn packing() -> Packing {
        Packing::new(Modulus::new(7).unwrap(), 2).unwrap()
    }

    fn amp(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn claw_is_left_intact() {
        let p = packing();
        let s = BitString::parse("10").unwrap();
        let x0 = ZqVector::new(vec![0, 3], p.modulus()).unwrap();
        let x1 = ZqVector::new(vec![6, 3], p.modulus()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let state = ProverState::new(
            p,
            vec![
                Term { b: 0, tag: 0, x: p.pack(&x0), amp: amp(h) },
                Term { b: 1, tag: 0, x: p.pack(&x1), amp: amp(h) },
            ],
        )
        .unwrap();
        let mut rng = session_rng(0, 0, Stream::Experiment);
        for _ in 0..20 {
            let r = extract_preimage(&state, &s, &mut rng).unwrap();
            assert_eq!(r.x0, x0);
            assert_eq!(r.collapsed, state);
        }
    }

    #[test]
    fn uniform_pairs_collapse_to_balanced_claws() {
        let p = packing();
        let s = BitString::parse("11").unwrap();
        let sv = ZqVector::new(vec![1, 1], p.modulus()).unwrap();
        let mut terms = Vec::new();
        for i in [0u128, 9, 20, 33] {
            let x = p.unpack(i);
            terms.push(Term { b: 0, tag: 0, x: i, amp: amp(1.0) });
            terms.push(Term { b: 1, tag: 0, x: p.pack(&x.sub(&sv).unwrap()), amp: amp(1.0) });
        }
        let state = ProverState::normalized(p, terms).unwrap();
        let mut rng = session_rng(1, 0, Stream::Experiment);
        let mut counts: HashMap<u128, usize> = HashMap::new();
        for _ in 0..10_000 {
            let r = extract_preimage(&state, &s, &mut rng).unwrap();
            assert_eq!(r.collapsed.len(), 2);
            for t in r.collapsed.terms() {
                assert!((t.amp.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
            }
            assert!((r.collapsed.norm_sqr() - 1.0).abs() < 1e-9);
            *counts.entry(p.pack(&r.x0)).or_default() += 1;
        }
        let tv: f64 = counts.values().map(|&c| (c as f64 / 1e4 - 0.25).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn single_sector_stays_single() {
        let p = packing();
        let s = BitString::parse("01").unwrap();
        let state = ProverState::normalized(
            p,
            vec![Term { b: 0, tag: 0, x: 4, amp: amp(1.0) }, Term { b: 0, tag: 0, x: 5, amp: amp(2.0) }],
        )
        .unwrap();
        let mut rng = session_rng(2, 0, Stream::Experiment);
        let mut hits = [0usize; 2];
        for _ in 0..10_000 {
            let r = extract_preimage(&state, &s, &mut rng).unwrap();
            assert_eq!(r.collapsed.len(), 1);
            assert_eq!(r.collapsed.terms()[0].b, 0);
            hits[(p.pack(&r.x0) - 4) as usize] += 1;
        }
        assert!((hits[1] as f64 / 1e4 - 0.8).abs() < 0.02);
    }
}
