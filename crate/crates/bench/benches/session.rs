use criterion::{criterion_group, criterion_main, Criterion};
use lossyrand_bench::{builtin, setup};
use lossyrand_core::protocol::{run_session, ChallengePolicy, InProcessLink, SessionOptions, Variant};
use lossyrand_core::qsim::{make_adversary, AdversaryKind};

fn sessions(c: &mut Criterion) {
    let profile = builtin("t1");
    let s = setup("t1");
    let mut group = c.benchmark_group("session/t1");
    for variant in Variant::ALL {
        for policy in [ChallengePolicy::Generation, ChallengePolicy::Test] {
            let mut session = 0u64;
            group.bench_function(format!("{variant}/{policy:?}"), |b| {
                b.iter(|| {
                    session += 1;
                    let mut prover = make_adversary(
                        AdversaryKind::Honest,
                        s.clone(),
                        profile.commit_options(),
                        profile.hadamard_threshold,
                    );
                    let mut link = InProcessLink::new(&mut prover, 1, session);
                    let opts = SessionOptions { seed: 1, session, policy, ..Default::default() };
                    run_session(variant, &mut link, &s, &opts).unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sessions);
criterion_main!(benches);
