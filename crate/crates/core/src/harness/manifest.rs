use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::reports::{claims_report, entropy_run, ClaimsConfig, EntropyConfig};
use super::runner::{check_supported, run_batch, RunConfig, RunError};
use super::Profile;
use crate::protocol::{ChallengePolicy, Variant};

pub const MANIFEST_FILE: &str = "manifest.json";

/// One reproducible unit of work.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase", deny_unknown_fields)]
pub enum Job {
    Run { profile: Profile, config: RunConfig },
    Entropy { profile: Profile, config: EntropyConfig },
    Claims { kernel: Profile, posterior: Profile, config: ClaimsConfig },
}

impl Job {
    pub fn command(&self) -> &'static str {
        match self {
            Self::Run { .. } => "run",
            Self::Entropy { .. } => "entropy",
            Self::Claims { .. } => "claims",
        }
    }

    pub fn profile_name(&self) -> String {
        match self {
            Self::Run { profile, .. } | Self::Entropy { profile, .. } => profile.name.clone(),
            Self::Claims { kernel, posterior, .. } => format!("{}+{}", kernel.name, posterior.name),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::Run { config, .. } => config.seed,
            Self::Entropy { config, .. } => config.seed,
            Self::Claims { config, .. } => config.seed,
        }
    }
}

/// SHA-256 over `blob <len>\0<bytes>`, the way git hashes file contents.
pub fn content_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub profile: String,
    pub seed: u64,
    /// Digest of the canonical JSON encoding of `job`.
    pub config_digest: String,
    pub job: Job,
    /// Output file name (relative to the manifest) to content digest.
    pub outputs: BTreeMap<String, String>,
}

/// What a job produced, with its pass/fail verdict when the job has one.
pub struct Execution {
    pub manifest: RunManifest,
    /// `false` when a threshold check failed or a stream run was cut short.
    pub pass: bool,
    /// The main human-readable report, as written to disk.
    pub report: serde_json::Value,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, RunError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// Runs `job`, writing its outputs and `manifest.json` into `dir`.
pub fn execute(job: &Job, dir: &Path) -> Result<Execution, RunError> {
    match job {
        Job::Run { profile, config } => check_supported(profile, config)?,
        Job::Entropy { profile, config } => check_supported(
            profile,
            &RunConfig {
                policy: ChallengePolicy::Generation,
                ..RunConfig::new(Variant::P3, config.adversary, config.transcripts, config.seed)
            },
        )?,
        Job::Claims { .. } => {}
    }
    fs::create_dir_all(dir)?;
    let (names, pass, report): (Vec<&str>, bool, serde_json::Value) = match job {
        Job::Run { profile, config } => {
            let mut log = create(dir, "transcripts.jsonl")?;
            let outcome = run_batch(profile, config, &mut log)?;
            drop(log);
            let mut events = create(dir, "prover_events.jsonl")?;
            for e in &outcome.prover_events {
                serde_json::to_writer(&mut events, e)?;
                events.write_all(b"\n")?;
            }
            events.flush()?;
            drop(events);
            let mut report = serde_json::to_value(&outcome.summary)?;
            if let Some(why) = &outcome.aborted {
                report["aborted"] = serde_json::Value::String(why.clone());
            }
            write_json(dir, "summary.json", &report)?;
            (vec!["transcripts.jsonl", "prover_events.jsonl", "summary.json"], outcome.aborted.is_none(), report)
        }
        Job::Entropy { profile, config } => {
            let mut records = create(dir, "entropy.jsonl")?;
            let mut bits = create(dir, "bits.bin")?;
            let r = entropy_run(profile, config, &mut records, &mut bits)?;
            drop((records, bits));
            let report = serde_json::to_value(&r)?;
            write_json(dir, "entropy.json", &report)?;
            (vec!["entropy.jsonl", "bits.bin", "entropy.json"], r.pass, report)
        }
        Job::Claims { kernel, posterior, config } => {
            let r = claims_report(kernel, posterior, config)?;
            let report = serde_json::to_value(&r)?;
            write_json(dir, "claims.json", &report)?;
            (vec!["claims.json"], r.pass, report)
        }
    };
    let mut outputs = BTreeMap::new();
    for name in names {
        outputs.insert(name.to_string(), content_digest(&fs::read(dir.join(name))?));
    }
    let manifest = RunManifest {
        command: job.command().to_string(),
        profile: job.profile_name(),
        seed: job.seed(),
        config_digest: content_digest(&serde_json::to_vec(job)?),
        job: job.clone(),
        outputs,
    };
    write_json(dir, MANIFEST_FILE, &serde_json::to_value(&manifest)?)?;
    Ok(Execution { manifest, pass, report })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mismatch {
    pub output: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplayReport {
    pub manifest: PathBuf,
    pub replay_dir: PathBuf,
    pub config_digest_ok: bool,
    pub mismatches: Vec<Mismatch>,
}

impl ReplayReport {
    pub fn identical(&self) -> bool {
        self.config_digest_ok && self.mismatches.is_empty()
    }
}

pub fn load_manifest(path: &Path) -> Result<RunManifest, RunError> {
    let path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Re-executes the manifest's job into `replay_dir` and compares every output
/// digest with the recorded one.
pub fn replay(manifest_path: &Path, replay_dir: &Path) -> Result<ReplayReport, RunError> {
    let recorded = load_manifest(manifest_path)?;
    let config_digest_ok = content_digest(&serde_json::to_vec(&recorded.job)?) == recorded.config_digest;
    let fresh = execute(&recorded.job, replay_dir)?.manifest;
    let mut mismatches = Vec::new();
    for (name, expected) in &recorded.outputs {
        let actual = fresh.outputs.get(name).cloned().unwrap_or_default();
        if &actual != expected {
            mismatches.push(Mismatch { output: name.clone(), expected: expected.clone(), actual });
        }
    }
    Ok(ReplayReport {
        manifest: manifest_path.to_path_buf(),
        replay_dir: replay_dir.to_path_buf(),
        config_digest_ok,
        mismatches,
    })
}
