//! Exact arithmetic over `Z_q`: scalars, vectors, matrices, centered norms and
//! the big-endian binary representation used by the equation test.
//!
//! Moduli are runtime values. Every vector and matrix carries its modulus and
//! operations between objects over different moduli are rejected.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZqError {
    #[error("modulus must be at least 2 and below 2^63, got {0}")]
    InvalidModulus(u64),
    #[error("moduli differ: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bit-string length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("entry {value} is not reduced modulo {q}")]
    EntryOutOfRange { value: u64, q: u64 },
    #[error("dimensions must be positive")]
    EmptyDimension,
}

/// A modulus `q` with the derived bit width `⌈log₂ q⌉`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Modulus {
    q: u64,
    bits: u32,
}

impl TryFrom<u64> for Modulus {
    type Error = ZqError;
    fn try_from(q: u64) -> Result<Self, ZqError> {
        Modulus::new(q)
    }
}

impl From<Modulus> for u64 {
    fn from(m: Modulus) -> u64 {
        m.q
    }
}

impl Modulus {
    pub fn new(q: u64) -> Result<Self, ZqError> {
        if !(2..1 << 63).contains(&q) {
            return Err(ZqError::InvalidModulus(q));
        }
        let bits = 64 - (q - 1).leading_zeros();
        Ok(Self { q, bits: bits.max(1) })
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.q
    }

    /// `⌈log₂ q⌉`, the per-coordinate width of [`binary_rep`].
    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Trial division. Desk-scale moduli only.
    pub fn is_prime(self) -> bool {
        let q = self.q;
        if q < 4 {
            return q >= 2;
        }
        if q.is_multiple_of(2) {
            return false;
        }
        let mut d = 3u64;
        while d.saturating_mul(d) <= q {
            if q.is_multiple_of(d) {
                return false;
            }
            d += 2;
        }
        true
    }

    #[inline]
    pub fn reduce_i64(self, v: i64) -> u64 {
        v.rem_euclid(self.q as i64) as u64
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    /// Multiplicative inverse by Fermat; `None` for zero. Assumes `q` prime.
    pub fn inv(self, a: u64) -> Option<u64> {
        if a.is_multiple_of(self.q) {
            return None;
        }
        let (mut base, mut exp, mut acc) = (a % self.q, self.q - 2, 1u64);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        Some(acc)
    }

    /// The representative of `v` in `[−(q−1)/2, (q−1)/2]`. For even `q` the
    /// value `q/2` maps to `+q/2`.
    #[inline]
    pub fn centered(self, v: u64) -> i64 {
        let half = (self.q - 1) / 2;
        if v <= half || (self.q.is_multiple_of(2) && v == self.q / 2) {
            v as i64
        } else {
            v as i64 - self.q as i64
        }
    }

    fn check(self, v: u64) -> Result<u64, ZqError> {
        if v < self.q {
            Ok(v)
        } else {
            Err(ZqError::EntryOutOfRange { value: v, q: self.q })
        }
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ZqScalar {
    value: u64,
    q: Modulus,
}

impl ZqScalar {
    pub fn new(value: u64, q: Modulus) -> Result<Self, ZqError> {
        Ok(Self { value: q.check(value)?, q })
    }

    pub fn from_i64(v: i64, q: Modulus) -> Self {
        Self { value: q.reduce_i64(v), q }
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> Modulus {
        self.q
    }

    pub fn centered(self) -> i64 {
        centered(self)
    }
}

/// Unique `r ≡ v (mod q)` with `|r| ≤ (q−1)/2`.
pub fn centered(v: ZqScalar) -> i64 {
    v.q.centered(v.value)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZqVector {
    q: Modulus,
    entries: Vec<u64>,
}

impl ZqVector {
    pub fn new(entries: Vec<u64>, q: Modulus) -> Result<Self, ZqError> {
        if entries.is_empty() {
            return Err(ZqError::EmptyDimension);
        }
        for &e in &entries {
            q.check(e)?;
        }
        Ok(Self { q, entries })
    }

    pub fn zeros(len: usize, q: Modulus) -> Self {
        assert!(len > 0, "vector dimension must be positive");
        Self { q, entries: vec![0; len] }
    }

    pub fn from_i64s(values: &[i64], q: Modulus) -> Result<Self, ZqError> {
        Self::new(values.iter().map(|&v| q.reduce_i64(v)).collect(), q)
    }

    /// Lifts a bit string into `Z_q` coordinate-wise (bits become 0/1 entries).
    pub fn from_bits(bits: &BitString, q: Modulus) -> Self {
        assert!(!bits.is_empty(), "vector dimension must be positive");
        Self { q, entries: (0..bits.len()).map(|i| bits.get(i) as u64).collect() }
    }

    pub(crate) fn from_raw(entries: Vec<u64>, q: Modulus) -> Self {
        debug_assert!(!entries.is_empty() && entries.iter().all(|&e| e < q.value()));
        Self { q, entries }
    }

    pub fn modulus(&self) -> Modulus {
        self.q
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<u64> {
        self.entries
    }

    pub fn get(&self, i: usize) -> ZqScalar {
        ZqScalar { value: self.entries[i], q: self.q }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    pub fn centered(&self) -> Vec<i64> {
        self.entries.iter().map(|&e| self.q.centered(e)).collect()
    }

    /// Exact integer sum of squared centered entries.
    pub fn norm_sq(&self) -> u128 {
        self.entries
            .iter()
            .map(|&e| {
                let c = self.q.centered(e).unsigned_abs() as u128;
                c * c
            })
            .sum()
    }

    pub fn norm(&self) -> f64 {
        norm(self)
    }

    /// Largest centered magnitude.
    pub fn norm_inf(&self) -> u64 {
        self.entries.iter().map(|&e| self.q.centered(e).unsigned_abs()).max().unwrap_or(0)
    }

    fn same_shape(&self, other: &Self) -> Result<(), ZqError> {
        if self.q != other.q {
            return Err(ZqError::ModulusMismatch(self.q.value(), other.q.value()));
        }
        if self.len() != other.len() {
            return Err(ZqError::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, ZqError> {
        self.same_shape(other)?;
        let q = self.q;
        Ok(Self::from_raw(self.entries.iter().zip(&other.entries).map(|(&a, &b)| q.add(a, b)).collect(), q))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ZqError> {
        self.same_shape(other)?;
        let q = self.q;
        Ok(Self::from_raw(self.entries.iter().zip(&other.entries).map(|(&a, &b)| q.sub(a, b)).collect(), q))
    }

    pub fn scale(&self, k: u64) -> Self {
        let q = self.q;
        let k = k % q.value();
        Self::from_raw(self.entries.iter().map(|&a| q.mul(a, k)).collect(), q)
    }
}

/// Euclidean norm of the centered representatives. The sum of squares is
/// accumulated exactly; only the final square root is floating point.
pub fn norm(v: &ZqVector) -> f64 {
    (v.norm_sq() as f64).sqrt()
}

/// Row-major matrix over `Z_q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZqMatrix {
    q: Modulus,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl ZqMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u64>, q: Modulus) -> Result<Self, ZqError> {
        if rows == 0 || cols == 0 {
            return Err(ZqError::EmptyDimension);
        }
        if data.len() != rows * cols {
            return Err(ZqError::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        for &e in &data {
            q.check(e)?;
        }
        Ok(Self { q, rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize, q: Modulus) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { q, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(size: usize, q: Modulus) -> Self {
        let mut m = Self::zeros(size, size, q);
        for i in 0..size {
            m.data[i * size + i] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>], q: Modulus) -> Result<Self, ZqError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(ZqError::DimensionMismatch { expected: c, got: 0 });
        }
        Self::new(r, c, rows.iter().flatten().map(|&v| q.reduce_i64(v)).collect(), q)
    }

    pub fn modulus(&self) -> Modulus {
        self.q
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        assert!(v < self.q.value());
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn matvec(&self, x: &ZqVector) -> Result<ZqVector, ZqError> {
        matvec(self, x)
    }

    pub fn matmul(&self, other: &ZqMatrix) -> Result<ZqMatrix, ZqError> {
        if self.q != other.q {
            return Err(ZqError::ModulusMismatch(self.q.value(), other.q.value()));
        }
        if self.cols != other.rows {
            return Err(ZqError::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let q = self.q.value() as u128;
        let mut data = vec![0u64; self.rows * other.cols];
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u128;
                for k in 0..self.cols {
                    acc += self.get(i, k) as u128 * other.get(k, j) as u128;
                    if acc >= 1 << 120 {
                        acc %= q;
                    }
                }
                data[i * other.cols + j] = (acc % q) as u64;
            }
        }
        Ok(ZqMatrix { q: self.q, rows: self.rows, cols: other.cols, data })
    }

    pub fn add(&self, other: &ZqMatrix) -> Result<ZqMatrix, ZqError> {
        if self.q != other.q {
            return Err(ZqError::ModulusMismatch(self.q.value(), other.q.value()));
        }
        if self.rows != other.rows || self.cols != other.cols {
            return Err(ZqError::DimensionMismatch { expected: self.rows * self.cols, got: other.rows * other.cols });
        }
        let q = self.q;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| q.add(a, b)).collect();
        Ok(ZqMatrix { q, rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &ZqMatrix) -> Result<ZqMatrix, ZqError> {
        let neg = ZqMatrix {
            q: other.q,
            rows: other.rows,
            cols: other.cols,
            data: other.data.iter().map(|&b| other.q.sub(0, b)).collect(),
        };
        self.add(&neg)
    }

    /// Places `self` on top of `bottom`.
    pub fn stack(&self, bottom: &ZqMatrix) -> Result<ZqMatrix, ZqError> {
        if self.q != bottom.q {
            return Err(ZqError::ModulusMismatch(self.q.value(), bottom.q.value()));
        }
        if self.cols != bottom.cols {
            return Err(ZqError::DimensionMismatch { expected: self.cols, got: bottom.cols });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&bottom.data);
        Ok(ZqMatrix { q: self.q, rows: self.rows + bottom.rows, cols: self.cols, data })
    }

    /// Rank over `Z_q` by Gaussian elimination. Requires prime `q`.
    pub fn rank(&self) -> usize {
        let q = self.q;
        let mut m: Vec<Vec<u64>> = (0..self.rows).map(|r| self.row(r).to_vec()).collect();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..self.rows).find(|&r| m[r][col] != 0) else { continue };
            m.swap(rank, p);
            let inv = mod_inverse(m[rank][col], q.value());
            for c in 0..self.cols {
                m[rank][c] = q.mul(m[rank][c], inv);
            }
            for r in 0..self.rows {
                if r != rank && m[r][col] != 0 {
                    let f = m[r][col];
                    for c in 0..self.cols {
                        let t = q.mul(f, m[rank][c]);
                        m[r][c] = q.sub(m[r][c], t);
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

fn mod_inverse(a: u64, q: u64) -> u64 {
    // Fermat: q prime.
    let mut result = 1u128;
    let mut base = a as u128 % q as u128;
    let mut e = q - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % q as u128;
        }
        base = base * base % q as u128;
        e >>= 1;
    }
    result as u64
}

/// `A·x mod q`, exact.
pub fn matvec(a: &ZqMatrix, x: &ZqVector) -> Result<ZqVector, ZqError> {
    if a.q != x.q {
        return Err(ZqError::ModulusMismatch(a.q.value(), x.q.value()));
    }
    if a.cols != x.len() {
        return Err(ZqError::DimensionMismatch { expected: a.cols, got: x.len() });
    }
    let q = a.q.value() as u128;
    let out = (0..a.rows)
        .map(|r| {
            let mut acc = 0u128;
            for (&aij, &xj) in a.row(r).iter().zip(&x.entries) {
                acc += aij as u128 * xj as u128;
                if acc >= 1 << 120 {
                    acc %= q;
                }
            }
            (acc % q) as u64
        })
        .collect();
    Ok(ZqVector::from_raw(out, a.q))
}

/// Fixed-length string over `{0,1}`, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = Self::default();
        for b in bits {
            out.push(b);
        }
        out
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self::from_bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, ZqError> {
        if self.len != other.len {
            return Err(ZqError::LengthMismatch(self.len, other.len));
        }
        Ok(BitString { len: self.len, words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect() })
    }

    /// Packed little-endian-by-index bytes: bit `i` lives in byte `i / 8` at
    /// position `i % 8`.
    pub fn to_bytes_lsb_first(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.get(i) {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    pub fn from_bytes_lsb_first(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        // padding bits must be zero
        if !len.is_multiple_of(8) && bytes[len / 8] >> (len % 8) != 0 {
            return None;
        }
        Some(Self::from_bits((0..len).map(|i| (bytes[i / 8] >> (i % 8)) & 1 == 1)))
    }

    /// Interprets the first `min(len, 64)` bits as an integer with bit 0 as
    /// the least significant bit.
    pub fn low_word(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn from_low_word(word: u64, len: usize) -> Self {
        assert!(len <= 64);
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        Self { len, words: if len == 0 { vec![] } else { vec![word & mask] } }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// `⌈log₂ q⌉`-bit big-endian encoding of a scalar.
pub fn binary_rep_scalar(v: ZqScalar) -> BitString {
    let k = v.q.bits() as usize;
    BitString::from_bits((0..k).rev().map(|j| (v.value >> j) & 1 == 1))
}

/// Coordinate-wise concatenation of [`binary_rep_scalar`]; length `n⌈log₂ q⌉`.
pub fn binary_rep(x: &ZqVector) -> BitString {
    let k = x.q.bits() as usize;
    let mut out = BitString::zeros(x.len() * k);
    for (i, &v) in x.entries.iter().enumerate() {
        for j in 0..k {
            if (v >> (k - 1 - j)) & 1 == 1 {
                out.set(i * k + j, true);
            }
        }
    }
    out
}

/// Inner product over GF(2).
pub fn gf2_dot(d: &BitString, z: &BitString) -> Result<bool, ZqError> {
    if d.len != z.len {
        return Err(ZqError::LengthMismatch(d.len, z.len));
    }
    let ones: u32 = d.words.iter().zip(&z.words).map(|(a, b)| (a & b).count_ones()).sum();
    Ok(ones % 2 == 1)
}
