//! Binary framing.
//!
//! ```text
//! frame   = "CRND" version:u8 tag:u8 len:u32be payload[len]
//! scalar  = u64le
//! vector  = len:u32be scalar*
//! matrix  = rows:u32be cols:u32be scalar* (row-major)
//! bits    = bitlen:u32be byte* (bit i in byte i/8 at position i%8, zero padded)
//! ```
//!
//! Payloads: INSTANCE = matrix vector, IMAGE = vector, CHALLENGE = u8 (G = 0,
//! T = 1), GEN_RESP = b:u8 vector, EQ_RESP = c:u8 bits, VERDICT = accept:u8
//! reason:u16be.

use std::io::{self, Read, Write};

use thiserror::Error;

use super::types::{Challenge, Instance, Reason, Verdict};
use crate::zq::{BitString, Modulus, ZqMatrix, ZqVector};

pub const MAGIC: [u8; 4] = *b"CRND";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 10;
/// Frames claiming a longer payload are rejected before any allocation.
pub const MAX_PAYLOAD: u32 = 1 << 26;

pub mod tag {
    pub const INSTANCE: u8 = 0x01;
    pub const IMAGE: u8 = 0x02;
    pub const CHALLENGE: u8 = 0x03;
    pub const GEN_RESP: u8 = 0x04;
    pub const EQ_RESP: u8 = 0x05;
    pub const VERDICT: u8 = 0x06;
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    Instance(Instance),
    Image(ZqVector),
    Challenge(Challenge),
    GenResp { b: bool, x: ZqVector },
    EqResp { c: bool, d: BitString },
    Verdict(Verdict),
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Self::Instance(_) => tag::INSTANCE,
            Self::Image(_) => tag::IMAGE,
            Self::Challenge(_) => tag::CHALLENGE,
            Self::GenResp { .. } => tag::GEN_RESP,
            Self::EqResp { .. } => tag::EQ_RESP,
            Self::Verdict(_) => tag::VERDICT,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0:#04x}")]
    BadVersion(u8),
    #[error("unknown tag {0:#04x}")]
    BadTag(u8),
    #[error("truncated frame")]
    Truncated,
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("timed out waiting for a frame")]
    Timeout,
    #[error("connection closed")]
    Closed,
    #[error("i/o error: {0}")]
    Io(String),
}

impl WireError {
    pub fn reason(&self) -> Reason {
        match self {
            Self::BadMagic => Reason::BadMagic,
            Self::BadVersion(_) => Reason::BadVersion,
            Self::BadTag(_) => Reason::BadTag,
            Self::Truncated | Self::Closed => Reason::Truncated,
            Self::Malformed(_) | Self::Io(_) => Reason::Malformed,
            Self::Timeout => Reason::Timeout,
        }
    }
}

impl From<io::Error> for WireError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => Self::Timeout,
            io::ErrorKind::UnexpectedEof => Self::Truncated,
            _ => Self::Io(e.to_string()),
        }
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("dimension fits u32").to_be_bytes());
}

fn put_scalars(out: &mut Vec<u8>, xs: &[u64]) {
    for &x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_vector(out: &mut Vec<u8>, v: &ZqVector) {
    put_u32(out, v.len());
    put_scalars(out, v.entries());
}

pub fn encode_payload(msg: &Message) -> Vec<u8> {
    let mut out = Vec::new();
    match msg {
        Message::Instance(inst) => {
            put_u32(&mut out, inst.matrix.rows());
            put_u32(&mut out, inst.matrix.cols());
            put_scalars(&mut out, inst.matrix.data());
            put_vector(&mut out, &inst.u);
        }
        Message::Image(y) => put_vector(&mut out, y),
        Message::Challenge(c) => out.push(c.wire_byte()),
        Message::GenResp { b, x } => {
            out.push(*b as u8);
            put_vector(&mut out, x);
        }
        Message::EqResp { c, d } => {
            out.push(*c as u8);
            put_u32(&mut out, d.len());
            out.extend_from_slice(&d.to_bytes_lsb_first());
        }
        Message::Verdict(v) => {
            out.push(v.accept as u8);
            out.extend_from_slice(&v.reason.code().to_be_bytes());
        }
    }
    out
}

pub fn encode_frame(msg: &Message) -> Vec<u8> {
    let payload = encode_payload(msg);
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg.tag());
    put_u32(&mut out, payload.len());
    out.extend_from_slice(&payload);
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    q: Modulus,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.buf.len() < n {
            return Err(WireError::Truncated);
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn flag(&mut self) -> Result<bool, WireError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(WireError::Malformed(format!("boolean byte {v}"))),
        }
    }

    fn u32(&mut self) -> Result<usize, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn scalars(&mut self, count: usize) -> Result<Vec<u64>, WireError> {
        let bytes = count.checked_mul(8).ok_or(WireError::Truncated)?;
        let raw = self.take(bytes)?;
        let q = self.q.value();
        raw.chunks_exact(8)
            .map(|c| {
                let v = u64::from_le_bytes(c.try_into().unwrap());
                if v < q {
                    Ok(v)
                } else {
                    Err(WireError::Malformed(format!("scalar {v} not reduced mod {q}")))
                }
            })
            .collect()
    }

    fn vector(&mut self) -> Result<ZqVector, WireError> {
        let len = self.u32()?;
        if len == 0 {
            return Err(WireError::Malformed("empty vector".into()));
        }
        Ok(ZqVector::from_raw(self.scalars(len)?, self.q))
    }

    fn finish(self) -> Result<(), WireError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(WireError::Malformed(format!("{} trailing bytes", self.buf.len())))
        }
    }
}

/// Decodes a payload. Scalars must already be reduced modulo `q`.
pub fn decode_payload(tag: u8, payload: &[u8], q: Modulus) -> Result<Message, WireError> {
    let mut cur = Cursor { buf: payload, q };
    let msg = match tag {
        tag::INSTANCE => {
            let rows = cur.u32()?;
            let cols = cur.u32()?;
            if rows == 0 || cols == 0 {
                return Err(WireError::Malformed("empty matrix".into()));
            }
            let data = cur.scalars(rows.checked_mul(cols).ok_or(WireError::Truncated)?)?;
            let matrix = ZqMatrix::new(rows, cols, data, q).map_err(|e| WireError::Malformed(e.to_string()))?;
            let u = cur.vector()?;
            if u.len() != rows {
                return Err(WireError::Malformed(format!("u has length {} for {rows} rows", u.len())));
            }
            Message::Instance(Instance { matrix, u })
        }
        tag::IMAGE => Message::Image(cur.vector()?),
        tag::CHALLENGE => {
            let b = cur.u8()?;
            Message::Challenge(
                Challenge::from_wire(b).ok_or_else(|| WireError::Malformed(format!("challenge byte {b}")))?,
            )
        }
        tag::GEN_RESP => {
            let b = cur.flag()?;
            Message::GenResp { b, x: cur.vector()? }
        }
        tag::EQ_RESP => {
            let c = cur.flag()?;
            let len = cur.u32()?;
            let bytes = cur.take(len.div_ceil(8))?;
            let d = BitString::from_bytes_lsb_first(bytes, len)
                .ok_or_else(|| WireError::Malformed("nonzero padding bits".into()))?;
            Message::EqResp { c, d }
        }
        tag::VERDICT => {
            let accept = cur.flag()?;
            let code = u16::from_be_bytes(cur.take(2)?.try_into().unwrap());
            let reason =
                Reason::from_code(code).ok_or_else(|| WireError::Malformed(format!("reason code {code:#06x}")))?;
            Message::Verdict(Verdict { accept, reason })
        }
        other => return Err(WireError::BadTag(other)),
    };
    cur.finish()?;
    Ok(msg)
}

fn check_header(header: &[u8; HEADER_LEN]) -> Result<(u8, u32), WireError> {
    if header[..4] != MAGIC {
        return Err(WireError::BadMagic);
    }
    if header[4] != VERSION {
        return Err(WireError::BadVersion(header[4]));
    }
    let tag = header[5];
    if !(tag::INSTANCE..=tag::VERDICT).contains(&tag) {
        return Err(WireError::BadTag(tag));
    }
    let len = u32::from_be_bytes(header[6..10].try_into().unwrap());
    if len > MAX_PAYLOAD {
        return Err(WireError::Malformed(format!("payload length {len} exceeds limit")));
    }
    Ok((tag, len))
}

/// Decodes exactly one frame occupying the whole buffer.
pub fn decode_frame(bytes: &[u8], q: Modulus) -> Result<Message, WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::Truncated);
    }
    let header: [u8; HEADER_LEN] = bytes[..HEADER_LEN].try_into().unwrap();
    let (tag, len) = check_header(&header)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() < len as usize {
        return Err(WireError::Truncated);
    }
    if body.len() > len as usize {
        return Err(WireError::Malformed("bytes after frame".into()));
    }
    decode_payload(tag, body, q)
}

/// Reads one frame. A clean end of stream before the first header byte is
/// reported as [`WireError::Closed`].
pub fn read_frame<R: Read + ?Sized>(r: &mut R, q: Modulus) -> Result<Message, WireError> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Err(WireError::Closed),
            Ok(0) => return Err(WireError::Truncated),
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let (tag, len) = check_header(&header)?;
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)?;
    decode_payload(tag, &payload, q)
}

pub fn write_frame<W: Write + ?Sized>(w: &mut W, msg: &Message) -> Result<(), WireError> {
    w.write_all(&encode_frame(msg))?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{sample_uniform_matrix, sample_uniform_vector, session_rng, Stream};
    use rand::Rng;

    fn q() -> Modulus {
        Modulus::new(191).unwrap()
    }

    fn random_message(kind: u8, rng: &mut impl Rng) -> Message {
        let q = q();
        match kind {
            tag::INSTANCE => {
                let rows = rng.random_range(1..20);
                let cols = rng.random_range(1..6);
                Message::Instance(Instance {
                    matrix: sample_uniform_matrix(rows, cols, q, rng),
                    u: sample_uniform_vector(rows, q, rng),
                })
            }
            tag::IMAGE => Message::Image(sample_uniform_vector(rng.random_range(1..30), q, rng)),
            tag::CHALLENGE => Message::Challenge(if rng.random() { Challenge::G } else { Challenge::T }),
            tag::GEN_RESP => {
                Message::GenResp { b: rng.random(), x: sample_uniform_vector(rng.random_range(1..8), q, rng) }
            }
            tag::EQ_RESP => {
                let len = rng.random_range(0..100);
                Message::EqResp { c: rng.random(), d: BitString::from_bits((0..len).map(|_| rng.random::<bool>())) }
            }
            _ => {
                let reasons =
                    [Reason::None, Reason::Equation, Reason::ZeroD, Reason::BadVersion, Reason::TrapdoorDecode];
                Message::Verdict(Verdict { accept: rng.random(), reason: reasons[rng.random_range(0..reasons.len())] })
            }
        }
    }

    #[test]
    fn round_trip_every_tag() {
        let mut rng = session_rng(77, 0, Stream::Experiment);
        for kind in tag::INSTANCE..=tag::VERDICT {
            for _ in 0..1000 {
                let msg = random_message(kind, &mut rng);
                let bytes = encode_frame(&msg);
                assert_eq!(decode_frame(&bytes, q()).unwrap(), msg);
                assert_eq!(read_frame(&mut bytes.as_slice(), q()).unwrap(), msg);
            }
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode_frame(&Message::Verdict(Verdict::reject(Reason::ZeroD)));
        assert_eq!(bytes, [0x43, 0x52, 0x4E, 0x44, 0x01, 0x06, 0, 0, 0, 3, 0, 0x00, 0x12]);
        let bytes = encode_frame(&Message::Challenge(Challenge::T));
        assert_eq!(&bytes[4..], &[0x01, 0x03, 0, 0, 0, 1, 1]);
    }

    #[test]
    fn rejects_corrupted_frames() {
        let good = encode_frame(&Message::Image(ZqVector::new(vec![1, 2, 3], q()).unwrap()));
        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(decode_frame(&bad, q()), Err(WireError::BadMagic));
        let mut bad = good.clone();
        bad[4] = 0x02;
        let err = decode_frame(&bad, q()).unwrap_err();
        assert_eq!(err, WireError::BadVersion(2));
        assert_eq!(err.reason().code(), 0x0002);
        let mut bad = good.clone();
        bad[5] = 0x09;
        assert_eq!(decode_frame(&bad, q()), Err(WireError::BadTag(9)));
        for cut in 0..good.len() {
            let err = decode_frame(&good[..cut], q()).unwrap_err();
            assert_eq!(err, WireError::Truncated, "cut at {cut}");
            if cut > 0 {
                assert_eq!(read_frame(&mut &good[..cut], q()).unwrap_err(), WireError::Truncated);
            }
        }
        assert_eq!(read_frame(&mut &good[..0], q()).unwrap_err(), WireError::Closed);
        // unreduced scalar
        let mut bad = good.clone();
        bad[HEADER_LEN + 4..HEADER_LEN + 12].copy_from_slice(&191u64.to_le_bytes());
        assert!(matches!(decode_frame(&bad, q()), Err(WireError::Malformed(_))));
        // dirty padding in d
        let mut eq = encode_frame(&Message::EqResp { c: true, d: BitString::parse("101").unwrap() });
        *eq.last_mut().unwrap() |= 0x80;
        assert!(matches!(decode_frame(&eq, q()), Err(WireError::Malformed(_))));
    }
}
