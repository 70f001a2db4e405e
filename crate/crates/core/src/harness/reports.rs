use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::runner::{check_supported, RunConfig, RunError};
use super::Profile;
use crate::analysis::{
    binary_kernel_experiment, min_entropy_exact, posterior_experiment, smooth_min_entropy_report, AnalysisError,
    KernelReport, PosteriorReport, Rate, SmoothEntropyReport,
};
use crate::protocol::{
    run_session, ChallengePolicy, InProcessLink, Instance, Prover, Response, SessionOptions, Variant,
};
use crate::qsim::{make_adversary, AdversaryKind, QsimError, SimulatedProver};
use crate::samplers::{session_rng, SessionRng, Setup, Stream};
use crate::zq::{binary_rep, BitString, ZqVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimsConfig {
    pub kernel_trials: usize,
    pub posterior_trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelClaim {
    pub profile: String,
    pub report: KernelReport,
    pub mean_within_3_sigma: bool,
    /// Low-count frequency at most the Chebyshev bound plus 0.05.
    pub low_frequency_ok: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PosteriorClaim {
    pub profile: String,
    pub report: PosteriorReport,
    /// Exceedance frequency at most 0.05.
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClaimsReport {
    pub kernel: KernelClaim,
    pub posterior: PosteriorClaim,
    pub pass: bool,
}

pub const LOW_FREQUENCY_TOLERANCE: f64 = 0.05;
pub const EXCEED_LIMIT: f64 = 0.05;

/// The binary-kernel count on `kernel` and the posterior maximum on `posterior`.
pub fn claims_report(kernel: &Profile, posterior: &Profile, cfg: &ClaimsConfig) -> Result<ClaimsReport, AnalysisError> {
    let setup = Setup::new(kernel.params.clone());
    let mut rng = session_rng(cfg.seed, 0, Stream::Experiment);
    let k = binary_kernel_experiment(&setup, cfg.kernel_trials, &mut rng)?;
    let mean_ok = k.mean_within_3_sigma();
    let low_ok = k.low_frequency_ok(LOW_FREQUENCY_TOLERANCE);

    let setup = Setup::new(posterior.params.clone());
    let mut rng = session_rng(cfg.seed, 1, Stream::Experiment);
    let p = posterior_experiment(&setup, cfg.posterior_trials, &mut rng)?;
    let p_ok = p.exceed_frequency <= EXCEED_LIMIT;

    Ok(ClaimsReport {
        kernel: KernelClaim {
            profile: kernel.name.clone(),
            report: k,
            mean_within_3_sigma: mean_ok,
            low_frequency_ok: low_ok,
            pass: mean_ok && low_ok,
        },
        posterior: PosteriorClaim { profile: posterior.name.clone(), report: p, pass: p_ok },
        pass: mean_ok && low_ok && p_ok,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    pub adversary: AdversaryKind,
    pub transcripts: u64,
    pub seed: u64,
    #[serde(default)]
    pub workers: usize,
}

/// One generation round with the exact entropy of the prover's register just
/// before it was measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRecord {
    pub session: u64,
    pub accepted: bool,
    pub min_entropy_bits: f64,
    /// Number of terms with `b = 0` and `b = 1`.
    pub sector_sizes: [u64; 2],
    pub b: Option<bool>,
    pub x: Option<Vec<u64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    pub profile: String,
    pub adversary: String,
    pub generation: Rate,
    pub smooth: SmoothEntropyReport,
    pub max_fraction_below: f64,
    pub mean_set_size: f64,
    /// `1 + log₂(mean set size)`.
    pub predicted_mean_bits: f64,
    pub mean_gap_bits: f64,
    pub bits_per_output: usize,
    pub bits_len: u64,
    pub pass: bool,
}

pub const MAX_FRACTION_BELOW: f64 = 0.01;
pub const MEAN_GAP_TOLERANCE: f64 = 0.1;

struct Recording {
    inner: SimulatedProver,
    entropy: f64,
    sizes: [u64; 2],
}

impl Prover for Recording {
    fn commit(&mut self, instance: &Instance, rng: &mut SessionRng) -> Result<ZqVector, QsimError> {
        let y = self.inner.commit(instance, rng)?;
        if let Some(state) = self.inner.state() {
            self.entropy = min_entropy_exact(state);
            for t in state.terms() {
                self.sizes[t.b as usize] += 1;
            }
        }
        Ok(y)
    }

    fn answer_generation(&mut self, rng: &mut SessionRng) -> Result<(bool, ZqVector), QsimError> {
        self.inner.answer_generation(rng)
    }

    fn answer_test(&mut self, rng: &mut SessionRng) -> Result<(bool, BitString), QsimError> {
        self.inner.answer_test(rng)
    }
}

/// Runs P3 generation rounds in process, recording each register's exact
/// min-entropy, and writes the `(b, x)` outputs as a packed bit stream: per
/// transcript the bit `b` then `x` in binary, MSB first per coordinate, packed
/// LSB-first into bytes with zero padding at the end.
pub fn entropy_run(
    profile: &Profile,
    cfg: &EntropyConfig,
    records_out: &mut dyn Write,
    bits_out: &mut dyn Write,
) -> Result<EntropyReport, RunError> {
    let run_cfg = RunConfig {
        policy: ChallengePolicy::Generation,
        ..RunConfig::new(Variant::P3, cfg.adversary, cfg.transcripts, cfg.seed)
    };
    check_supported(profile, &run_cfg)?;
    let p = &profile.params;
    let setup: Arc<Setup> = Setup::new(p.clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| RunError::Prover(e.to_string()))?;
    let records: Vec<EntropyRecord> = pool.install(|| {
        (0..cfg.transcripts)
            .into_par_iter()
            .map(|session| -> Result<EntropyRecord, RunError> {
                let inner =
                    make_adversary(cfg.adversary, setup.clone(), profile.commit_options(), profile.hadamard_threshold);
                let mut prover = Recording { inner, entropy: f64::NAN, sizes: [0, 0] };
                let mut link = InProcessLink::new(&mut prover, cfg.seed, session);
                let opts = SessionOptions {
                    seed: cfg.seed,
                    session,
                    policy: ChallengePolicy::Generation,
                    profile: profile.name.clone(),
                    adversary: cfg.adversary.to_string(),
                    timing: false,
                };
                let t = run_session(Variant::P3, &mut link, &setup, &opts)?;
                let (b, x) = match t.response {
                    Some(Response::Generation { b, x }) => (Some(b), Some(x)),
                    _ => (None, None),
                };
                Ok(EntropyRecord {
                    session,
                    accepted: t.verdict.accept,
                    min_entropy_bits: prover.entropy,
                    sector_sizes: prover.sizes,
                    b,
                    x,
                })
            })
            .collect::<Result<_, _>>()
    })?;

    let k = p.bits_per_coord();
    let per = 1 + p.n * k;
    let mut bits = BitString::zeros(0);
    for r in &records {
        bits.push(r.b.unwrap_or(false));
        let x = match &r.x {
            Some(x) => ZqVector::new(x.clone(), p.q).map_err(|e| RunError::Prover(e.to_string()))?,
            None => ZqVector::zeros(p.n, p.q),
        };
        for bit in binary_rep(&x).iter() {
            bits.push(bit);
        }
    }
    bits_out.write_all(&bits.to_bytes_lsb_first())?;
    bits_out.flush()?;
    for r in &records {
        serde_json::to_writer(&mut *records_out, r)?;
        records_out.write_all(b"\n")?;
    }
    records_out.flush()?;

    let entropies: Vec<f64> = records.iter().map(|r| r.min_entropy_bits).collect();
    let threshold = p.n as f64 - p.ell as f64 * p.log2_q() - profile.c_offset;
    let smooth = smooth_min_entropy_report(&entropies, threshold);
    let mean_set_size = records.iter().map(|r| (r.sector_sizes[0] + r.sector_sizes[1]) as f64 / 2.0).sum::<f64>()
        / records.len().max(1) as f64;
    let predicted = 1.0 + mean_set_size.log2();
    let gap = smooth.mean_bits - predicted;
    let accepted = records.iter().filter(|r| r.accepted).count() as u64;
    Ok(EntropyReport {
        profile: profile.name.clone(),
        adversary: cfg.adversary.to_string(),
        generation: Rate::new(accepted, records.len() as u64),
        pass: smooth.epsilon <= MAX_FRACTION_BELOW && gap.abs() <= MEAN_GAP_TOLERANCE,
        smooth,
        max_fraction_below: MAX_FRACTION_BELOW,
        mean_set_size,
        predicted_mean_bits: predicted,
        mean_gap_bits: gap,
        bits_per_output: per,
        bits_len: bits.len() as u64,
    })
}
