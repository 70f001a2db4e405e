use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::net::{TcpListener, TcpStream};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::transport::{configure, serve_prover, StreamLink, DEFAULT_TIMEOUT};
use super::{ConfigError, Profile};
use crate::analysis::{entropy_certificate, p_t_excess_from_rate, scan_cost, EntropyCertificate, Rate};
use crate::protocol::{
    run_session, Challenge, ChallengePolicy, InProcessLink, Reason, Response, SessionOptions, TranscriptRecord,
    Variant, VerifierError,
};
use crate::qsim::{make_adversary, AdversaryKind, ProverEvent, SimulatedProver};
use crate::samplers::Setup;
use crate::zq::ZqMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    #[default]
    Inproc,
    Stream,
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Inproc => "inproc",
            Self::Stream => "stream",
        })
    }
}

impl FromStr for Transport {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "inproc" | "in-process" => Ok(Self::Inproc),
            "stream" | "tcp" => Ok(Self::Stream),
            other => Err(format!("unknown transport `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub variant: Variant,
    pub adversary: AdversaryKind,
    pub sessions: u64,
    pub seed: u64,
    #[serde(default)]
    pub first_session: u64,
    #[serde(default)]
    pub policy: ChallengePolicy,
    #[serde(default)]
    pub transport: Transport,
    /// Worker threads for in-process runs; 0 lets the pool decide.
    #[serde(default)]
    pub workers: usize,
    /// Adds wall-clock timings to the records, which makes logs differ run to run.
    #[serde(default)]
    pub timing: bool,
}

impl RunConfig {
    pub fn new(variant: Variant, adversary: AdversaryKind, sessions: u64, seed: u64) -> Self {
        Self {
            variant,
            adversary,
            sessions,
            seed,
            first_session: 0,
            policy: ChallengePolicy::Uniform,
            transport: Transport::Inproc,
            workers: 0,
            timing: false,
        }
    }

    fn session_options(&self, profile: &Profile, session: u64) -> SessionOptions {
        SessionOptions {
            seed: self.seed,
            session,
            policy: self.policy,
            profile: profile.name.clone(),
            adversary: self.adversary.to_string(),
            timing: self.timing,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("prover thread: {0}")]
    Prover(String),
}

/// Refuses combinations the simulator cannot run faithfully at this profile.
pub fn check_supported(profile: &Profile, cfg: &RunConfig) -> Result<(), ConfigError> {
    let p = &profile.params;
    if cfg.transport == Transport::Stream && cfg.variant == Variant::P2 {
        return Err(ConfigError::Unsupported(
            "P2 test rounds act on the prover register and run in process only".into(),
        ));
    }
    let needs_trapdoor = match cfg.variant {
        Variant::P1 => true,
        Variant::P2 => false,
        Variant::P3 => cfg.policy != ChallengePolicy::Generation,
    };
    if needs_trapdoor && p.m < p.w + p.n {
        return Err(ConfigError::Unsupported(format!(
            "{} needs a trapdoor matrix, which requires m ≥ w + n ({} < {}); try --policy generation with p3 or p2",
            cfg.variant,
            p.m,
            p.w + p.n
        )));
    }
    if cfg.adversary != AdversaryKind::ClassicalZero {
        let cost = estimated_scan_cost(profile);
        if cost > profile.budget as u128 {
            return Err(ConfigError::Unsupported(format!(
                "the simulated prover must scan about {cost} candidates per branch, over the profile budget {}",
                profile.budget
            )));
        }
    }
    Ok(())
}

/// Scan cost for a matrix whose last column has an invertible entry, the
/// overwhelmingly common case for both matrix kinds.
fn estimated_scan_cost(profile: &Profile) -> u128 {
    let p = &profile.params;
    let mut probe = ZqMatrix::zeros(1, p.n, p.q);
    if p.n > 0 {
        probe.set(0, p.n - 1, 1);
    }
    scan_cost(&probe, p.preimage_bound_sq()).unwrap_or(u128::MAX)
}

fn write_record(log: &mut dyn Write, record: &TranscriptRecord) -> Result<(), RunError> {
    serde_json::to_writer(&mut *log, record)?;
    log.write_all(b"\n")?;
    Ok(())
}

pub struct RunOutcome {
    pub summary: Summary,
    /// Set when a wire-level failure ended a stream run early.
    pub aborted: Option<String>,
    /// What the simulated provers reported, by session. Empty when the prover
    /// ran in another process.
    pub prover_events: Vec<SessionEvent>,
}

/// A prover-side event, kept apart from the verifier's transcript.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub session: u64,
    pub event: ProverEvent,
}

fn collect_events(session: u64, prover: &SimulatedProver, into: &mut Vec<SessionEvent>) {
    into.extend(prover.events().iter().map(|&event| SessionEvent { session, event }));
}

const CHUNK: u64 = 512;

/// Runs `cfg.sessions` sessions and appends one JSON line per session to
/// `log`, in session order, whatever the transport or worker count.
pub fn run_batch(profile: &Profile, cfg: &RunConfig, log: &mut dyn Write) -> Result<RunOutcome, RunError> {
    profile.validate().map_err(|source| ConfigError::Invalid { name: profile.name.clone(), source })?;
    check_supported(profile, cfg)?;
    let setup = Setup::new(profile.params.clone());
    match cfg.transport {
        Transport::Inproc => run_inproc(profile, cfg, &setup, log),
        Transport::Stream => run_loopback(profile, cfg, &setup, log),
    }
}

fn run_inproc(
    profile: &Profile,
    cfg: &RunConfig,
    setup: &Arc<Setup>,
    log: &mut dyn Write,
) -> Result<RunOutcome, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| RunError::Prover(e.to_string()))?;
    let mut acc = SummaryBuilder::default();
    let mut prover_events = Vec::new();
    let end = cfg.first_session + cfg.sessions;
    let mut start = cfg.first_session;
    while start < end {
        let stop = (start + CHUNK).min(end);
        let chunk: Vec<(TranscriptRecord, SimulatedProver)> = pool.install(|| {
            (start..stop)
                .into_par_iter()
                .map(|session| {
                    let mut prover = make_adversary(
                        cfg.adversary,
                        setup.clone(),
                        profile.commit_options(),
                        profile.hadamard_threshold,
                    );
                    let mut link = InProcessLink::new(&mut prover, cfg.seed, session);
                    let record = run_session(cfg.variant, &mut link, setup, &cfg.session_options(profile, session))?;
                    Ok::<_, VerifierError>((record, prover))
                })
                .collect::<Result<_, _>>()
        })?;
        for (record, prover) in &chunk {
            write_record(log, record)?;
            acc.add(record);
            collect_events(record.session, prover, &mut prover_events);
        }
        start = stop;
    }
    log.flush()?;
    Ok(RunOutcome { summary: acc.finish(profile), aborted: None, prover_events })
}

/// Stream run against a prover thread over TCP loopback.
fn run_loopback(
    profile: &Profile,
    cfg: &RunConfig,
    setup: &Arc<Setup>,
    log: &mut dyn Write,
) -> Result<RunOutcome, RunError> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let prover_setup = setup.clone();
    let (kind, opts, threshold, seed, first) =
        (cfg.adversary, profile.commit_options(), profile.hadamard_threshold, cfg.seed, cfg.first_session);
    let handle = std::thread::spawn(move || -> (Result<u64, String>, Vec<SessionEvent>) {
        let mut events = Vec::new();
        let served = TcpStream::connect(addr).map_err(|e| e.to_string()).and_then(|mut stream| {
            configure(&stream, DEFAULT_TIMEOUT).map_err(|e| e.to_string())?;
            let q = prover_setup.params.q;
            serve_prover(
                &mut stream,
                q,
                seed,
                first,
                || make_adversary(kind, prover_setup.clone(), opts, threshold),
                |session, prover| collect_events(session, prover, &mut events),
            )
            .map_err(|e| e.to_string())
        });
        (served, events)
    });
    let (stream, _) = listener.accept()?;
    let mut outcome = verify_over_stream(profile, cfg, setup, stream, DEFAULT_TIMEOUT, log)?;
    let (served, events) = handle.join().map_err(|_| RunError::Prover("prover thread panicked".into()))?;
    outcome.prover_events = events;
    match served {
        Ok(_) => Ok(outcome),
        Err(_) if outcome.aborted.is_some() => Ok(outcome),
        Err(e) => Err(RunError::Prover(e)),
    }
}

/// The verifier side of a stream run: sessions go one after another over the
/// single connection, which is closed when the batch ends. A framing or
/// timeout failure leaves the stream unusable, so the batch stops there.
pub fn verify_over_stream(
    profile: &Profile,
    cfg: &RunConfig,
    setup: &Arc<Setup>,
    stream: TcpStream,
    timeout: Duration,
    log: &mut dyn Write,
) -> Result<RunOutcome, RunError> {
    configure(&stream, timeout)?;
    let mut link = StreamLink::new(stream, profile.params.q);
    let mut acc = SummaryBuilder::default();
    let mut aborted = None;
    for session in cfg.first_session..cfg.first_session + cfg.sessions {
        let record = run_session(cfg.variant, &mut link, setup, &cfg.session_options(profile, session))?;
        write_record(log, &record)?;
        acc.add(&record);
        if is_wire_failure(record.verdict.reason) {
            aborted = Some(format!("session {session}: {:?}", record.verdict.reason));
            break;
        }
    }
    log.flush()?;
    let _ = link.into_inner().shutdown(std::net::Shutdown::Both);
    Ok(RunOutcome { summary: acc.finish(profile), aborted, prover_events: Vec::new() })
}

fn is_wire_failure(r: Reason) -> bool {
    matches!(
        r,
        Reason::BadMagic
            | Reason::BadVersion
            | Reason::BadTag
            | Reason::Truncated
            | Reason::Malformed
            | Reason::Timeout
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputStats {
    /// Accepted generation-round outputs `(b, x)`.
    pub count: u64,
    pub distinct: u64,
    /// `−log₂` of the most frequent output's relative frequency.
    pub empirical_min_entropy_bits: Option<f64>,
}

/// Aggregate statistics of a run, computable from its transcript log alone.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub profile: String,
    pub variant: Option<Variant>,
    pub adversary: Option<String>,
    pub seed: Option<u64>,
    pub sessions: u64,
    pub generation: Rate,
    pub test: Rate,
    pub overall: Rate,
    /// Sessions that ended before a challenge was issued.
    pub unchallenged: u64,
    pub rejections: BTreeMap<String, u64>,
    pub s_zero: u64,
    pub outputs: OutputStats,
    /// Present when both round types were observed and some generation round passed.
    pub certificate: Option<EntropyCertificate>,
}

impl Summary {
    pub fn from_records<'a, I>(records: I, profile: &Profile) -> Self
    where
        I: IntoIterator<Item = &'a TranscriptRecord>,
    {
        let mut acc = SummaryBuilder::default();
        for r in records {
            acc.add(r);
        }
        acc.finish(profile)
    }

    /// Parses a JSON-lines transcript log and summarizes it.
    pub fn from_log(text: &str, profile: &Profile) -> Result<Self, serde_json::Error> {
        let mut acc = SummaryBuilder::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            acc.add(&serde_json::from_str(line)?);
        }
        Ok(acc.finish(profile))
    }
}

#[derive(Default)]
struct SummaryBuilder {
    first: Option<(Variant, String, u64)>,
    sessions: u64,
    gen: (u64, u64),
    test: (u64, u64),
    accepted: u64,
    unchallenged: u64,
    rejections: BTreeMap<String, u64>,
    s_zero: u64,
    outputs: HashMap<(bool, Vec<u64>), u64>,
}

impl SummaryBuilder {
    fn add(&mut self, r: &TranscriptRecord) {
        self.first.get_or_insert_with(|| (r.variant, r.adversary.clone(), r.seed));
        self.sessions += 1;
        let ok = r.verdict.accept as u64;
        self.accepted += ok;
        match r.challenge {
            Some(Challenge::G) => {
                self.gen.0 += ok;
                self.gen.1 += 1;
            }
            Some(Challenge::T) => {
                self.test.0 += ok;
                self.test.1 += 1;
            }
            None => self.unchallenged += 1,
        }
        if !r.verdict.accept {
            let key = serde_json::to_value(r.verdict.reason).ok().and_then(|v| v.as_str().map(str::to_string));
            *self.rejections.entry(key.unwrap_or_default()).or_default() += 1;
        }
        self.s_zero += r.s_zero as u64;
        if let (true, Some(Response::Generation { b, x })) = (r.verdict.accept, &r.response) {
            *self.outputs.entry((*b, x.clone())).or_default() += 1;
        }
    }

    fn finish(self, profile: &Profile) -> Summary {
        let generation = Rate::new(self.gen.0, self.gen.1);
        let test = Rate::new(self.test.0, self.test.1);
        let count: u64 = self.outputs.values().sum();
        let top = self.outputs.values().copied().max().unwrap_or(0);
        let certificate = (generation.trials > 0 && test.trials > 0 && generation.successes > 0)
            .then(|| {
                let excess = p_t_excess_from_rate(test.rate, profile.params.w);
                entropy_certificate(generation.rate, excess, &profile.params, profile.c_offset).ok()
            })
            .flatten()
            .map(|mut c| {
                c.p_g_rate = Some(generation);
                c.p_t_rate = Some(test);
                c
            });
        Summary {
            profile: profile.name.clone(),
            variant: self.first.as_ref().map(|f| f.0),
            adversary: self.first.as_ref().map(|f| f.1.clone()),
            seed: self.first.as_ref().map(|f| f.2),
            sessions: self.sessions,
            generation,
            test,
            overall: Rate::new(self.accepted, self.sessions),
            unchallenged: self.unchallenged,
            rejections: self.rejections,
            s_zero: self.s_zero,
            outputs: OutputStats {
                count,
                distinct: self.outputs.len() as u64,
                empirical_min_entropy_bits: (count > 0).then(|| -(top as f64 / count as f64).log2()),
            },
            certificate,
        }
    }
}
