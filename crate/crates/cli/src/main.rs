use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use lossyrand_core::harness::{
    configure, execute, replay, serve_prover, verify_over_stream, ClaimsConfig, ConfigError, EntropyConfig, Job,
    Profile, ProfileSet, RunConfig, Transport,
};
use lossyrand_core::protocol::{validate_params, ChallengePolicy, Variant};
use lossyrand_core::qsim::{make_adversary, AdversaryKind};
use lossyrand_core::samplers::Setup;

#[derive(Parser)]
#[command(name = "lossyrand", version, about = "Certified randomness from lossy LWE, simulated at desk scale")]
struct Cli {
    /// profiles.toml, or a directory containing one (default: $LOSSYRAND_PROFILES, then the built-in set)
    #[arg(long, global = true)]
    profiles: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run protocol sessions and write transcripts, a summary and a manifest.
    Run(RunArgs),
    /// Binary-kernel count and posterior-concentration experiments.
    Claims(ClaimsArgs),
    /// Honest P3 generation rounds with exact per-transcript min-entropy.
    Entropy(EntropyArgs),
    /// Act as the verifier: listen for one prover and run sessions over the stream.
    Serve(ServeArgs),
    /// Act as a simulated prover: connect to a verifier and answer its sessions.
    Connect(ConnectArgs),
    /// Check profiles against the parameter conditions.
    Validate {
        /// Profile to check; all of them when omitted.
        #[arg(long)]
        profile: Option<String>,
    },
    /// Re-run a manifest and compare every output byte for byte.
    Replay {
        /// manifest.json or the directory holding it
        manifest: PathBuf,
        /// where to write the fresh outputs (default: a temporary directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SessionArgs {
    #[arg(long, default_value = "p1")]
    variant: Variant,
    /// honest | collapsed | classical_zero | skew:<alpha>
    #[arg(long, default_value = "honest")]
    adversary: AdversaryKind,
    #[arg(long, default_value = "t1")]
    profile: String,
    #[arg(short = 'n', long, default_value_t = 1000)]
    sessions: u64,
    /// master seed (default: the profile's)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    first_session: u64,
    /// uniform | generation | test
    #[arg(long, default_value = "uniform")]
    policy: ChallengePolicy,
    /// record wall-clock time per session (logs then differ between runs)
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// inproc | stream
    #[arg(long, default_value = "inproc")]
    transport: Transport,
    /// worker threads (0: one per core)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value = "out/run")]
    out: PathBuf,
}

#[derive(Args)]
struct ClaimsArgs {
    #[arg(long, default_value = "t2l1")]
    kernel_profile: String,
    #[arg(long, default_value = "t3")]
    posterior_profile: String,
    #[arg(long, default_value_t = 500)]
    kernel_trials: usize,
    #[arg(long, default_value_t = 200)]
    posterior_trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out/claims")]
    out: PathBuf,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long, default_value = "t2")]
    profile: String,
    #[arg(short = 'n', long, default_value_t = 200)]
    transcripts: u64,
    #[arg(long, default_value = "honest")]
    adversary: AdversaryKind,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value = "out/entropy")]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: String,
    /// per-message timeout in seconds
    #[arg(long, default_value_t = 30)]
    timeout: u64,
    #[arg(long, default_value = "out/serve")]
    out: PathBuf,
}

#[derive(Args)]
struct ConnectArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    addr: String,
    #[arg(long, default_value = "t1")]
    profile: String,
    #[arg(long, default_value = "honest")]
    adversary: AdversaryKind,
    /// must match the verifier's seed for the transcripts to match an in-process run
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    first_session: u64,
    #[arg(long, default_value_t = 30)]
    timeout: u64,
}

/// Exit status: 0 success, 1 a threshold check failed, 2 bad configuration or
/// any other error.
enum Failure {
    Threshold(String),
    Error(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Error(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Threshold(why)) => {
            eprintln!("FAIL: {why}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn profile(set: &ProfileSet, name: &str) -> Result<Profile, ConfigError> {
    set.get(name).cloned()
}

fn run_config(s: &SessionArgs, p: &Profile) -> RunConfig {
    RunConfig {
        first_session: s.first_session,
        policy: s.policy,
        timing: s.timing,
        ..RunConfig::new(s.variant, s.adversary, s.sessions, s.seed.unwrap_or(p.seed))
    }
}

fn print_json(value: &serde_json::Value) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn finish_job(job: &Job, out: &Path) -> Result<(), Failure> {
    let done = execute(job, out)?;
    print_json(&done.report)?;
    eprintln!("outputs and manifest in {}", out.display());
    if done.pass {
        Ok(())
    } else {
        Err(Failure::Threshold(format!("{} did not meet its thresholds", done.manifest.command)))
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let set = ProfileSet::load(cli.profiles.as_deref())?;
    match cli.command {
        Command::Run(args) => {
            let p = profile(&set, &args.session.profile)?;
            let config =
                RunConfig { transport: args.transport, workers: args.workers, ..run_config(&args.session, &p) };
            finish_job(&Job::Run { profile: p, config }, &args.out)
        }
        Command::Claims(args) => {
            let job = Job::Claims {
                kernel: profile(&set, &args.kernel_profile)?,
                posterior: profile(&set, &args.posterior_profile)?,
                config: ClaimsConfig {
                    kernel_trials: args.kernel_trials,
                    posterior_trials: args.posterior_trials,
                    seed: args.seed,
                },
            };
            finish_job(&job, &args.out)
        }
        Command::Entropy(args) => {
            let p = profile(&set, &args.profile)?;
            let config = EntropyConfig {
                adversary: args.adversary,
                transcripts: args.transcripts,
                seed: args.seed.unwrap_or(p.seed),
                workers: args.workers,
            };
            finish_job(&Job::Entropy { profile: p, config }, &args.out)
        }
        Command::Serve(args) => serve(&set, args),
        Command::Connect(args) => connect(&set, args),
        Command::Validate { profile: name } => validate(&set, name.as_deref()),
        Command::Replay { manifest, out } => {
            let tmp;
            let dir = match out {
                Some(d) => d,
                None => {
                    tmp = tempfile::tempdir()?;
                    tmp.path().to_path_buf()
                }
            };
            let report = replay(&manifest, &dir)?;
            print_json(&serde_json::to_value(&report)?)?;
            if report.identical() {
                Ok(())
            } else {
                Err(Failure::Threshold("replay differs from the manifest".into()))
            }
        }
    }
}

fn serve(set: &ProfileSet, args: ServeArgs) -> Result<(), Failure> {
    let p = profile(set, &args.session.profile)?;
    let cfg = RunConfig { transport: Transport::Stream, ..run_config(&args.session, &p) };
    lossyrand_core::harness::check_supported(&p, &cfg)?;
    let listener = TcpListener::bind(&args.listen).with_context(|| format!("binding {}", args.listen))?;
    eprintln!("verifier listening on {}", listener.local_addr()?);
    let (stream, peer) = listener.accept()?;
    eprintln!("prover connected from {peer}");
    std::fs::create_dir_all(&args.out)?;
    let mut log = std::io::BufWriter::new(std::fs::File::create(args.out.join("transcripts.jsonl"))?);
    let setup = Setup::new(p.params.clone());
    let outcome = verify_over_stream(&p, &cfg, &setup, stream, Duration::from_secs(args.timeout), &mut log)?;
    let mut report = serde_json::to_value(&outcome.summary)?;
    if let Some(why) = &outcome.aborted {
        report["aborted"] = serde_json::Value::String(why.clone());
    }
    std::fs::write(args.out.join("summary.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    print_json(&report)?;
    match outcome.aborted {
        Some(why) => Err(Failure::Threshold(format!("stream aborted at {why}"))),
        None => Ok(()),
    }
}

fn connect(set: &ProfileSet, args: ConnectArgs) -> Result<(), Failure> {
    let p = profile(set, &args.profile)?;
    let mut stream = TcpStream::connect(&args.addr).with_context(|| format!("connecting to {}", args.addr))?;
    configure(&stream, Duration::from_secs(args.timeout))?;
    let setup = Setup::new(p.params.clone());
    let seed = args.seed.unwrap_or(p.seed);
    let served = serve_prover(
        &mut stream,
        p.params.q,
        seed,
        args.first_session,
        || make_adversary(args.adversary, setup.clone(), p.commit_options(), p.hadamard_threshold),
        |session, prover| {
            for event in prover.events() {
                eprintln!("session {session}: {}", serde_json::to_string(event).unwrap_or_default());
            }
        },
    )?;
    eprintln!("answered {served} sessions");
    Ok(())
}

fn validate(set: &ProfileSet, name: Option<&str>) -> Result<(), Failure> {
    let chosen: Vec<&Profile> = match name {
        Some(n) => vec![set.get(n)?],
        None => set.profiles.values().collect(),
    };
    println!("profiles from {}", set.origin);
    for p in chosen {
        // loading already rejected hard failures; this reports the warnings
        let report = validate_params(&p.params).map_err(|e| anyhow!("{}: {e}", p.name))?;
        let q = &p.params;
        println!(
            "{:6} n={} ell={} m={} w={} q={} B=({}, {}, {}) C_T={:.3} mode={:?}: ok",
            p.name,
            q.n,
            q.ell,
            q.m,
            q.w,
            q.q.value(),
            q.b_l,
            q.b_v,
            q.b_p,
            report.realized_c_t,
            report.mode
        );
        for w in &report.warnings {
            println!("         warning {}: {}", w.condition, w.message);
        }
    }
    Ok(())
}
