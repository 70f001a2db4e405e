use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ProverState, QsimError, Term};
use crate::analysis::{branch_target, scan_preimages, Packing};
use crate::samplers::{sample_uniform_vector, Setup};
use crate::zq::{ZqMatrix, ZqVector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeModel {
    /// Equal amplitude on every valid preimage, each branch holding weight ½.
    #[default]
    Uniform,
    /// Amplitude proportional to the square root of the Gaussian weight of the
    /// residual, normalized over both branches together.
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommitOptions {
    /// Most candidate points the exhaustive preimage scan may examine.
    pub budget: u128,
    pub amplitude: AmplitudeModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProverEvent {
    /// Branch `b` had no valid preimage; all weight went to the other branch.
    EmptySector { b: bool },
}

#[derive(Clone, Debug)]
pub struct Commitment {
    pub y: ZqVector,
    pub state: ProverState,
    pub events: Vec<ProverEvent>,
}

/// The honest prover's first message and its post-measurement register.
///
/// Samples `(b̂, x̂)` uniformly and `ê ← D_{B_P}`, sends `y = A·x̂ + b̂·u + ê`,
/// and returns the superposition over every `(b, x)` with
/// `‖y − A·x − b·u‖ ≤ B_P √m`.
pub fn honest_commit<R: Rng + ?Sized>(
    a: &ZqMatrix,
    u: &ZqVector,
    setup: &Setup,
    opts: &CommitOptions,
    rng: &mut R,
) -> Result<Commitment, QsimError> {
    let p = &setup.params;
    let q = p.q;
    let packing = Packing::new(q, p.n).ok_or(QsimError::PackingOverflow { q: q.value(), n: p.n })?;

    let b_hat: bool = rng.random();
    let x_hat = sample_uniform_vector(p.n, q, rng);
    let e_hat = setup.noise_p.sample_vector(p.m, rng);
    let mut y = a.matvec(&x_hat)?.add(&e_hat)?;
    if b_hat {
        y = y.add(u)?;
    }

    let bound_sq = p.preimage_bound_sq();
    let mut sectors: [Vec<(u128, u128)>; 2] = [Vec::new(), Vec::new()];
    for (b, sector) in sectors.iter_mut().enumerate() {
        let target = branch_target(u, &y, b == 1)?;
        scan_preimages(a, &target, bound_sq, opts.budget, |idx, r2| sector.push((idx, r2)))?;
    }

    let mut events = Vec::new();
    for (b, sector) in sectors.iter().enumerate() {
        if sector.is_empty() {
            events.push(ProverEvent::EmptySector { b: b == 1 });
        }
    }
    let live = sectors.iter().filter(|s| !s.is_empty()).count();
    if live == 0 {
        return Err(QsimError::NoPreimage);
    }

    let bp2 = (p.b_p as f64).powi(2);
    let mut terms = Vec::with_capacity(sectors[0].len() + sectors[1].len());
    for (b, sector) in sectors.iter().enumerate() {
        for &(idx, r2) in sector {
            let amp = match opts.amplitude {
                AmplitudeModel::Uniform => (live as f64 * sector.len() as f64).sqrt().recip(),
                AmplitudeModel::Gaussian => (-PI * r2 as f64 / (2.0 * bp2)).exp(),
            };
            terms.push(Term { b: b as u8, tag: 0, x: idx, amp: Complex64::new(amp, 0.0) });
        }
    }
    let state = match opts.amplitude {
        AmplitudeModel::Uniform => ProverState::new(packing, terms)?,
        AmplitudeModel::Gaussian => ProverState::normalized(packing, terms)?,
    };
    Ok(Commitment { y, state, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::is_preimage;
    use crate::samplers::{gen_trap, sample_binary, session_rng, ParameterSet, Stream, ValidationMode};
    use crate::zq::Modulus;

    pub(crate) fn trapdoor_params() -> ParameterSet {
        let q = Modulus::new(191).unwrap();
        ParameterSet {
            lambda: 8,
            ell: 1,
            n: 2,
            m: 18,
            w: 16,
            q,
            b_l: 3,
            b_v: 4,
            b_p: 6,
            c_t: 1.0,
            mode: ValidationMode::Relaxed,
            strict: Default::default(),
        }
    }

    #[test]
    fn trapdoor_regime_gives_a_claw() {
        let setup = Setup::new(trapdoor_params());
        let p = &setup.params;
        let opts = CommitOptions { budget: 1 << 20, amplitude: AmplitudeModel::Uniform };
        let mut rng = session_rng(21, 0, Stream::Experiment);
        let mut claws = 0;
        for _ in 0..50 {
            let (a, _) = gen_trap(p, &mut rng).unwrap();
            let s = ZqVector::from_bits(&sample_binary(p.n, &mut rng), p.q);
            let e = setup.noise_v.sample_vector(p.m, &mut rng);
            let u = a.matvec(&s).unwrap().add(&e).unwrap();
            let c = honest_commit(&a, &u, &setup, &opts, &mut rng).unwrap();
            for t in c.state.terms() {
                assert!(is_preimage(&a, &u, &c.y, t.b == 1, &c.state.x_of(t), p).unwrap());
            }
            if c.state.len() == 2 {
                let x0 = c.state.terms().iter().find(|t| t.b == 0).unwrap();
                let x1 = c.state.terms().iter().find(|t| t.b == 1).unwrap();
                assert_eq!(c.state.x_of(x0).sub(&s).unwrap(), c.state.x_of(x1));
                for t in c.state.terms() {
                    assert!((t.amp.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
                }
                claws += 1;
            }
        }
        assert!(claws >= 48, "only {claws}/50 claws");
    }

    #[test]
    fn gaussian_amplitudes_are_normalized() {
        let setup = Setup::new(trapdoor_params());
        let p = &setup.params;
        let opts = CommitOptions { budget: 1 << 20, amplitude: AmplitudeModel::Gaussian };
        let mut rng = session_rng(22, 0, Stream::Experiment);
        let (a, _) = gen_trap(p, &mut rng).unwrap();
        let u = setup.noise_v.sample_vector(p.m, &mut rng);
        let c = honest_commit(&a, &u, &setup, &opts, &mut rng).unwrap();
        assert!((c.state.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn a_u_off_the_lattice_empties_one_sector() {
        let setup = Setup::new(trapdoor_params());
        let p = &setup.params;
        let opts = CommitOptions { budget: 1 << 20, amplitude: AmplitudeModel::Uniform };
        let mut rng = session_rng(24, 0, Stream::Experiment);
        let (a, _) = gen_trap(p, &mut rng).unwrap();
        let u = crate::samplers::sample_uniform_vector(p.m, p.q, &mut rng);
        let c = honest_commit(&a, &u, &setup, &opts, &mut rng).unwrap();
        let [ProverEvent::EmptySector { b }] = c.events[..] else { panic!("{:?}", c.events) };
        assert_eq!(c.state.sector_weight(b), 0.0);
        assert!((c.state.sector_weight(!b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_failure_propagates() {
        let setup = Setup::new(trapdoor_params());
        let opts = CommitOptions { budget: 100, amplitude: AmplitudeModel::Uniform };
        let mut rng = session_rng(23, 0, Stream::Experiment);
        let (a, _) = gen_trap(&setup.params, &mut rng).unwrap();
        let u = ZqVector::zeros(18, setup.params.q);
        assert!(matches!(
            honest_commit(&a, &u, &setup, &opts, &mut rng),
            Err(QsimError::Analysis(crate::analysis::AnalysisError::BudgetExceeded { .. }))
        ));
    }
}
