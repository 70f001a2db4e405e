use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::time::Duration;

use lossyrand_core::harness::*;
use lossyrand_core::protocol::wire::{encode_frame, read_frame, HEADER_LEN};
use lossyrand_core::protocol::{ChallengePolicy, Message, Reason, TranscriptRecord, Variant};
use lossyrand_core::qsim::AdversaryKind;
use lossyrand_core::samplers::Setup;

fn t1() -> Profile {
    ProfileSet::builtin().get("t1").unwrap().clone()
}

fn run_to_string(profile: &Profile, cfg: &RunConfig) -> (String, RunOutcome) {
    let mut log = Vec::new();
    let out = run_batch(profile, cfg, &mut log).unwrap();
    (String::from_utf8(log).unwrap(), out)
}

#[test]
fn stream_and_inproc_logs_are_identical() {
    let profile = t1();
    for variant in [Variant::P1, Variant::P3] {
        for kind in [AdversaryKind::Honest, AdversaryKind::Collapsed] {
            let mut cfg = RunConfig::new(variant, kind, 40, 77);
            let (inproc, _) = run_to_string(&profile, &cfg);
            cfg.transport = Transport::Stream;
            let (stream, out) = run_to_string(&profile, &cfg);
            assert!(out.aborted.is_none());
            assert_eq!(inproc.lines().count(), 40);
            assert_eq!(inproc, stream, "{variant} {kind}");
        }
    }
}

#[test]
fn worker_count_does_not_change_the_log() {
    let profile = t1();
    let mut cfg = RunConfig::new(Variant::P2, AdversaryKind::Honest, 600, 5);
    cfg.workers = 1;
    let (one, _) = run_to_string(&profile, &cfg);
    cfg.workers = 3;
    let (three, _) = run_to_string(&profile, &cfg);
    assert_eq!(one, three);
}

#[test]
fn summary_is_recomputable_from_the_log() {
    let profile = t1();
    for variant in Variant::ALL {
        let cfg = RunConfig::new(variant, AdversaryKind::Honest, 120, 11);
        let (log, out) = run_to_string(&profile, &cfg);
        let again = Summary::from_log(&log, &profile).unwrap();
        assert_eq!(serde_json::to_string(&again).unwrap(), serde_json::to_string(&out.summary).unwrap());
        let s = &out.summary;
        assert_eq!(s.sessions, 120);
        assert_eq!(s.generation.trials + s.test.trials + s.unchallenged, 120);
        assert_eq!(s.generation.rate, 1.0);
        let cert = s.certificate.as_ref().unwrap();
        assert!(cert.guarantee);
    }
}

#[test]
fn unsupported_combinations_are_refused() {
    let set = ProfileSet::builtin();
    let t2 = set.get("t2").unwrap();
    let err = check_supported(t2, &RunConfig::new(Variant::P1, AdversaryKind::Honest, 1, 1)).unwrap_err();
    assert!(matches!(err, ConfigError::Unsupported(_)));
    let mut cfg = RunConfig::new(Variant::P3, AdversaryKind::Honest, 1, 1);
    cfg.policy = ChallengePolicy::Generation;
    assert!(check_supported(t2, &cfg).is_ok());
    assert!(check_supported(t2, &RunConfig::new(Variant::P2, AdversaryKind::Honest, 1, 1)).is_ok());

    let t3 = set.get("t3").unwrap();
    assert!(check_supported(t3, &RunConfig::new(Variant::P2, AdversaryKind::Honest, 1, 1)).is_err());
    let t4 = set.get("t4").unwrap();
    assert!(check_supported(t4, &RunConfig::new(Variant::P1, AdversaryKind::Honest, 1, 1)).is_err());
    assert!(check_supported(t4, &RunConfig::new(Variant::P1, AdversaryKind::ClassicalZero, 1, 1)).is_ok());

    let mut cfg = RunConfig::new(Variant::P2, AdversaryKind::Honest, 1, 1);
    cfg.transport = Transport::Stream;
    assert!(matches!(run_batch(&t1(), &cfg, &mut Vec::new()), Err(RunError::Config(ConfigError::Unsupported(_)))));
}

/// A misbehaving prover: reads the INSTANCE frame, then writes `reply` raw.
fn verify_against(reply: Vec<u8>, hold_open: bool, timeout: Duration) -> (Vec<TranscriptRecord>, RunOutcome) {
    let profile = t1();
    let setup = Setup::new(profile.params.clone());
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let q = profile.params.q;
    let prover = std::thread::spawn(move || {
        let mut s = TcpStream::connect(addr).unwrap();
        let first = read_frame(&mut s, q).unwrap();
        assert!(matches!(first, Message::Instance(_)));
        s.write_all(&reply).unwrap();
        s.flush().unwrap();
        if hold_open {
            let mut sink = Vec::new();
            let _ = s.read_to_end(&mut sink);
        }
    });
    let (stream, _) = listener.accept().unwrap();
    let cfg = RunConfig::new(Variant::P1, AdversaryKind::Honest, 5, 3);
    let mut log = Vec::new();
    let out = verify_over_stream(&profile, &cfg, &setup, stream, timeout, &mut log).unwrap();
    prover.join().unwrap();
    let records = String::from_utf8(log).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    (records, out)
}

fn image_frame() -> Vec<u8> {
    let profile = t1();
    let y = lossyrand_core::zq::ZqVector::zeros(profile.params.m, profile.params.q);
    encode_frame(&Message::Image(y))
}

#[test]
fn bad_version_aborts_with_reason_0002() {
    let mut frame = image_frame();
    frame[4] = 0x02;
    let (records, out) = verify_against(frame, false, Duration::from_secs(5));
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].verdict.reason, Reason::BadVersion);
    assert_eq!(records[0].verdict.reason.code(), 0x0002);
    assert!(records[0].y.is_none());
    assert!(out.aborted.is_some());
}

#[test]
fn truncated_frame_aborts_without_partial_state() {
    let frame = image_frame();
    let cut = frame[..HEADER_LEN + 11].to_vec();
    let (records, out) = verify_against(cut, false, Duration::from_secs(5));
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].verdict.reason, Reason::Truncated);
    assert!(records[0].y.is_none() && records[0].challenge.is_none());
    assert_eq!(out.summary.unchallenged, 1);
}

#[test]
fn silent_prover_times_out() {
    let (records, _) = verify_against(Vec::new(), true, Duration::from_millis(200));
    assert_eq!(records[0].verdict.reason, Reason::Timeout);
    assert_eq!(records[0].verdict.reason.code(), 0x0007);
}

#[test]
fn manifest_replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let job = Job::Run { profile: t1(), config: RunConfig::new(Variant::P3, AdversaryKind::Honest, 50, 21) };
    let first = execute(&job, dir.path()).unwrap();
    assert!(first.pass);
    assert_eq!(first.manifest.outputs.len(), 3);
    let loaded = load_manifest(dir.path()).unwrap();
    assert_eq!(loaded, first.manifest);

    let again = tempfile::tempdir().unwrap();
    let report = replay(dir.path(), again.path()).unwrap();
    assert!(report.identical(), "{report:?}");
    assert_eq!(
        std::fs::read(dir.path().join("transcripts.jsonl")).unwrap(),
        std::fs::read(again.path().join("transcripts.jsonl")).unwrap()
    );

    // A manifest whose job was edited no longer matches its digest or outputs.
    let mut edited = loaded.clone();
    if let Job::Run { config, .. } = &mut edited.job {
        config.seed += 1;
    }
    let path = dir.path().join("edited.json");
    std::fs::write(&path, serde_json::to_vec(&edited).unwrap()).unwrap();
    let third = tempfile::tempdir().unwrap();
    let report = replay(&path, third.path()).unwrap();
    assert!(!report.config_digest_ok);
    assert!(report.mismatches.iter().any(|m| m.output == "transcripts.jsonl"));
}

#[test]
fn entropy_outputs_have_the_documented_layout() {
    let set = ProfileSet::builtin();
    let t2 = set.get("t2").unwrap();
    let cfg = EntropyConfig { adversary: AdversaryKind::Honest, transcripts: 6, seed: 9, workers: 0 };
    let mut records = Vec::new();
    let mut bits = Vec::new();
    let r = entropy_run(t2, &cfg, &mut records, &mut bits).unwrap();
    let per = 1 + t2.params.n * t2.params.q.bits() as usize;
    assert_eq!(r.bits_per_output, per);
    assert_eq!(r.bits_len, 6 * per as u64);
    assert_eq!(bits.len(), (6 * per).div_ceil(8));
    let lines: Vec<EntropyRecord> =
        String::from_utf8(records).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    // at q = 5 every x is a preimage of every y
    let full = 5f64.powi(8);
    for l in &lines {
        assert!(l.accepted);
        assert_eq!(l.sector_sizes, [full as u64, full as u64]);
        assert!((l.min_entropy_bits - (2.0 * full).log2()).abs() < 1e-9);
    }
    assert!(r.mean_gap_bits.abs() < 1e-9);

    // the first output decodes back from the packed stream
    let first = &lines[0];
    let k = t2.params.q.bits() as usize;
    let bit = |i: usize| (bits[i / 8] >> (i % 8)) & 1 == 1;
    assert_eq!(bit(0), first.b.unwrap());
    for (j, &xj) in first.x.as_ref().unwrap().iter().enumerate() {
        let v = (0..k).fold(0u64, |acc, t| acc << 1 | bit(1 + j * k + t) as u64);
        assert_eq!(v, xj);
    }

    let cfg = EntropyConfig { adversary: AdversaryKind::Collapsed, ..cfg };
    let r = entropy_run(t2, &cfg, &mut Vec::new(), &mut Vec::new()).unwrap();
    assert_eq!(r.smooth.epsilon, 1.0);
    assert!(!r.pass);
}

#[test]
fn serve_prover_rejects_a_challenge_before_any_instance() {
    let profile = t1();
    let mut input = encode_frame(&Message::Challenge(lossyrand_core::protocol::Challenge::G));
    struct Duplex<'a>(&'a [u8], Vec<u8>);
    impl Read for Duplex<'_> {
        fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
            self.0.read(buf)
        }
    }
    impl Write for Duplex<'_> {
        fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
            self.1.write(b)
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }
    let setup = Setup::new(profile.params.clone());
    let mut io = Duplex(&input, Vec::new());
    let err = serve_prover(
        &mut io,
        profile.params.q,
        1,
        0,
        || lossyrand_core::qsim::make_adversary(AdversaryKind::Honest, setup.clone(), profile.commit_options(), 20),
        |_, _| {},
    )
    .unwrap_err();
    assert_eq!(err.reason(), Reason::OutOfOrder);
    input.clear();
    let mut io = Duplex(&input, Vec::new());
    let served = serve_prover(
        &mut io,
        profile.params.q,
        1,
        0,
        || lossyrand_core::qsim::make_adversary(AdversaryKind::Honest, setup.clone(), profile.commit_options(), 20),
        |_, _| {},
    )
    .unwrap();
    assert_eq!(served, 0);
}

#[test]
fn serve_prover_reports_each_finished_session() {
    use lossyrand_core::protocol::{Challenge, Instance, Verdict};
    use lossyrand_core::qsim::ProverEvent;
    use lossyrand_core::samplers::{gen_trap, sample_uniform_vector, session_rng, Stream};

    let profile = t1();
    let p = &profile.params;
    let mut rng = session_rng(3, 0, Stream::Experiment);
    let (a, _) = gen_trap(p, &mut rng).unwrap();
    // u is not close to the lattice, so one branch has no preimage
    let off = Instance { matrix: a, u: sample_uniform_vector(p.m, p.q, &mut rng) };
    let mut input = Vec::new();
    for _ in 0..2 {
        input.extend(encode_frame(&Message::Instance(off.clone())));
        input.extend(encode_frame(&Message::Challenge(Challenge::G)));
        input.extend(encode_frame(&Message::Verdict(Verdict::ACCEPT)));
    }
    // a third session cut off after its image
    input.extend(encode_frame(&Message::Instance(off)));

    struct Duplex(std::io::Cursor<Vec<u8>>, Vec<u8>);
    impl Read for Duplex {
        fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
            self.0.read(buf)
        }
    }
    impl Write for Duplex {
        fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
            self.1.write(b)
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }
    let setup = Setup::new(p.clone());
    let mut io = Duplex(std::io::Cursor::new(input), Vec::new());
    let mut seen = Vec::new();
    let served = serve_prover(
        &mut io,
        p.q,
        1,
        10,
        || lossyrand_core::qsim::make_adversary(AdversaryKind::Honest, setup.clone(), profile.commit_options(), 20),
        |session, prover| seen.push((session, prover.events().to_vec())),
    )
    .unwrap();
    assert_eq!(served, 3);
    assert_eq!(seen.iter().map(|(s, _)| *s).collect::<Vec<_>>(), vec![10, 11, 12]);
    for (_, events) in &seen {
        assert!(matches!(events[..], [ProverEvent::EmptySector { .. }]), "{events:?}");
    }
}
