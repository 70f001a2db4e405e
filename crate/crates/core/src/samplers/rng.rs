use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// The RNG used throughout: ChaCha20, counter based and seekable.
pub type SessionRng = ChaCha20Rng;

/// Independent consumers of randomness within one session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    Verifier = 0,
    Prover = 1,
    Experiment = 2,
    Harness = 3,
}

/// Derives the stream for `(master_seed, session)` and the given role.
///
/// Streams are disjoint ChaCha20 nonces under one key, so the verifier and the
/// prover never share randomness and sessions can run in any order.
pub fn session_rng(master_seed: u64, session: u64, stream: Stream) -> SessionRng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream((session << 2) | stream as u64);
    rng
}
