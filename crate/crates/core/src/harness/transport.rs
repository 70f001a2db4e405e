use std::io::{self, Read, Write};
use std::net::TcpStream;
use std::time::Duration;

use crate::protocol::wire::{read_frame, write_frame, WireError};
use crate::protocol::{respond, LinkError, Message, Prover, ProverLink};
use crate::samplers::{session_rng, Stream};
use crate::zq::Modulus;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Sets both socket timeouts; a read that times out surfaces as
/// [`WireError::Timeout`].
pub fn configure(stream: &TcpStream, timeout: Duration) -> io::Result<()> {
    stream.set_read_timeout(Some(timeout))?;
    stream.set_write_timeout(Some(timeout))?;
    stream.set_nodelay(true)
}

/// The verifier's end of a byte stream to a remote prover.
pub struct StreamLink<S: Read + Write> {
    stream: S,
    q: Modulus,
}

impl<S: Read + Write> StreamLink<S> {
    pub fn new(stream: S, q: Modulus) -> Self {
        Self { stream, q }
    }

    pub fn into_inner(self) -> S {
        self.stream
    }
}

impl<S: Read + Write> ProverLink for StreamLink<S> {
    fn exchange(&mut self, msg: &Message) -> Result<Option<Message>, LinkError> {
        write_frame(&mut self.stream, msg)?;
        if matches!(msg, Message::Verdict(_)) {
            return Ok(None);
        }
        Ok(Some(read_frame(&mut self.stream, self.q)?))
    }
}

/// Prover side of a stream: answers sessions one after another until the
/// verifier hangs up, building a fresh prover for each INSTANCE.
///
/// The `k`-th instance on the connection is session `first_session + k`, and
/// the prover draws from that session's prover stream, so a run over a stream
/// reproduces the in-process run with the same seed. `done` sees each prover
/// once its session is over.
pub fn serve_prover<S, P, F, D>(
    stream: &mut S,
    q: Modulus,
    seed: u64,
    first_session: u64,
    mut make: F,
    mut done: D,
) -> Result<u64, LinkError>
where
    S: Read + Write,
    P: Prover,
    F: FnMut() -> P,
    D: FnMut(u64, &P),
{
    let mut served = 0u64;
    let mut current: Option<(u64, P, crate::samplers::SessionRng)> = None;
    let result = loop {
        let msg = match read_frame(stream, q) {
            Ok(m) => m,
            Err(WireError::Closed) => break Ok(served),
            Err(e) => break Err(e.into()),
        };
        if let Message::Instance(_) = msg {
            if let Some((session, prover, _)) = current.take() {
                done(session, &prover);
            }
            let session = first_session + served;
            current = Some((session, make(), session_rng(seed, session, Stream::Prover)));
            served += 1;
        }
        let Some((_, prover, rng)) = current.as_mut() else {
            break Err(LinkError::Unexpected(msg.tag()));
        };
        match respond(prover, &msg, rng) {
            Ok(Some(reply)) => {
                if let Err(e) = write_frame(stream, &reply) {
                    break Err(e.into());
                }
            }
            Ok(None) => {
                if let Some((session, prover, _)) = current.take() {
                    done(session, &prover);
                }
            }
            Err(e) => break Err(e),
        }
    };
    if let Some((session, prover, _)) = current.take() {
        done(session, &prover);
    }
    result
}
