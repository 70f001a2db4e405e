//! Gadget trapdoors: `A = [Ā ; G + R·Ā]` with uniform `Ā`, ternary `R` and the
//! power-of-two gadget `G`, so that `T·A = G` for `T = [−R | I_w]`.

use rand::Rng;
use thiserror::Error;

use super::params::ParameterSet;
use super::uniform::sample_uniform_matrix;
use crate::zq::{Modulus, ZqError, ZqMatrix, ZqVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrapdoorError {
    #[error("gadget trapdoor needs m ≥ w + n = {needed}, got m = {m}")]
    MatrixTooSmall { m: usize, needed: usize },
    #[error("w = {w} does not equal n·⌈log₂ q⌉ = {expected}")]
    GadgetWidth { w: usize, expected: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvertError {
    /// The decoded secret does not explain `u` within `B_P √m`.
    #[error("decode margin exceeded: residual norm² {residual_sq} > bound {bound_sq}")]
    DecodeFailure { residual_sq: u128, bound_sq: u128 },
    #[error("modulus {0} too large for the floating-point gadget decoder")]
    ModulusTooLarge(u64),
    #[error(transparent)]
    Shape(#[from] ZqError),
}

/// The secret half of a gadget pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trapdoor {
    /// `w × (m − w)` entries in `{−1, 0, 1}`, row-major.
    r: Vec<i8>,
    n: usize,
    /// Bits per coordinate, `⌈log₂ q⌉`.
    k: usize,
    top_rows: usize,
}

/// Guaranteed decoding radius of a particular trapdoor.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeMargin {
    /// Decoding succeeds whenever every coordinate of `T·e` is below this.
    pub linf_threshold: f64,
    /// `1 + max_j ‖R_j‖₁`: worst-case amplification of an `ℓ∞` bound on `e`.
    pub max_row_l1: u64,
    /// `max_j ‖T_j‖₂`.
    pub max_row_l2: f64,
    /// Any `e` with `‖e‖∞` at most this is decoded.
    pub linf_radius: f64,
    /// Any `e` with `‖e‖₂` at most this is decoded.
    pub l2_radius: f64,
    /// `C_T` such that `l2_radius = q / (C_T √(n log₂ q))`.
    pub realized_c_t: f64,
}

/// Result of a successful inversion: `u = A·s + e` with `‖e‖ ≤ B_P √m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inversion {
    pub s: ZqVector,
    pub e: ZqVector,
}

impl Trapdoor {
    pub fn gadget_width(&self) -> usize {
        self.n * self.k
    }

    pub fn r_entry(&self, row: usize, col: usize) -> i8 {
        self.r[row * self.top_rows + col]
    }

    /// `T = [−R | I_w]` as a matrix over `Z_q`.
    pub fn t_matrix(&self, q: Modulus) -> ZqMatrix {
        let w = self.gadget_width();
        let m = self.top_rows + w;
        let mut t = ZqMatrix::zeros(w, m, q);
        for j in 0..w {
            for i in 0..self.top_rows {
                t.set(j, i, q.reduce_i64(-(self.r_entry(j, i) as i64)));
            }
            t.set(j, self.top_rows + j, 1);
        }
        t
    }

    /// The `w × n` gadget matrix: row `i·k + j` holds `2^j` in column `i`.
    pub fn gadget(&self, q: Modulus) -> ZqMatrix {
        gadget_matrix(self.n, self.k, q)
    }

    /// Computes `T·u` without materializing `T`.
    pub fn apply(&self, u: &ZqVector) -> Result<ZqVector, ZqError> {
        let w = self.gadget_width();
        let expected = self.top_rows + w;
        if u.len() != expected {
            return Err(ZqError::DimensionMismatch { expected, got: u.len() });
        }
        let q = u.modulus();
        let ue = u.entries();
        let out = (0..w)
            .map(|j| {
                let mut acc = ue[self.top_rows + j];
                for i in 0..self.top_rows {
                    match self.r_entry(j, i) {
                        1 => acc = q.sub(acc, ue[i]),
                        -1 => acc = q.add(acc, ue[i]),
                        _ => {}
                    }
                }
                acc
            })
            .collect();
        ZqVector::new(out, q)
    }

    pub fn decode_margin(&self, q: Modulus) -> DecodeMargin {
        let w = self.gadget_width();
        let nnz: Vec<u64> =
            (0..w).map(|j| (0..self.top_rows).filter(|&i| self.r_entry(j, i) != 0).count() as u64).collect();
        let max_nnz = nnz.iter().copied().max().unwrap_or(0);
        let linf_threshold = q.value() as f64 / 6.0;
        let max_row_l2 = ((1 + max_nnz) as f64).sqrt();
        let l2_radius = linf_threshold / max_row_l2;
        let log_q = (q.value() as f64).log2();
        DecodeMargin {
            linf_threshold,
            max_row_l1: 1 + max_nnz,
            max_row_l2,
            linf_radius: linf_threshold / (1 + max_nnz) as f64,
            l2_radius,
            realized_c_t: q.value() as f64 / (l2_radius * (self.n as f64 * log_q).sqrt()),
        }
    }
}

fn gadget_matrix(n: usize, k: usize, q: Modulus) -> ZqMatrix {
    let mut g = ZqMatrix::zeros(n * k, n, q);
    for i in 0..n {
        let mut p = 1u64 % q.value();
        for j in 0..k {
            g.set(i * k + j, i, p);
            p = q.mul(p, 2);
        }
    }
    g
}

/// Samples `(A, t)` with `A ∈ Z_q^{m×n}` and `T·A = G` exactly.
pub fn gen_trap<R: Rng + ?Sized>(params: &ParameterSet, rng: &mut R) -> Result<(ZqMatrix, Trapdoor), TrapdoorError> {
    let q = params.q;
    let (n, m) = (params.n, params.m);
    let k = q.bits() as usize;
    let w = n * k;
    if params.w != w {
        return Err(TrapdoorError::GadgetWidth { w: params.w, expected: w });
    }
    if m < w + n {
        return Err(TrapdoorError::MatrixTooSmall { m, needed: w + n });
    }
    let top_rows = m - w;
    let a_bar = sample_uniform_matrix(top_rows, n, q, rng);
    let r: Vec<i8> = (0..w * top_rows).map(|_| rng.random_range(-1i8..=1)).collect();
    let trapdoor = Trapdoor { r, n, k, top_rows };

    let mut bottom = gadget_matrix(n, k, q);
    for j in 0..w {
        for c in 0..n {
            let mut acc = bottom.get(j, c);
            for i in 0..top_rows {
                match trapdoor.r_entry(j, i) {
                    1 => acc = q.add(acc, a_bar.get(i, c)),
                    -1 => acc = q.sub(acc, a_bar.get(i, c)),
                    _ => {}
                }
            }
            bottom.set(j, c, acc);
        }
    }
    let a = a_bar.stack(&bottom).expect("same modulus and width");
    Ok((a, trapdoor))
}

/// Circular distance on `[0, 1)`.
fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Recovers one secret coordinate from `v_j ≈ 2^j·s (mod q)`, `j = 0..k`.
///
/// Works on the phases `v_j / q`: starting from the top row, each step halves
/// the current estimate and picks the half closest to the next row down. Exact
/// whenever every row's noise is below `q/6`.
fn decode_coordinate(rows: &[u64], q: u64) -> u64 {
    let qf = q as f64;
    let k = rows.len();
    let mut est = rows[k - 1] as f64 / qf;
    for j in (0..k - 1).rev() {
        let phase = rows[j] as f64 / qf;
        let lo = est / 2.0;
        let hi = lo + 0.5;
        est = if circ_dist(lo, phase) <= circ_dist(hi, phase) { lo } else { hi };
    }
    ((est * qf).round() as u64) % q
}

/// Inverts `u = A·s + e` using the trapdoor.
///
/// Computes `T·u = G·s + T·e`, decodes `s` from the gadget rows, then re-checks
/// that `e = u − A·s` satisfies `‖e‖ ≤ B_P √m`. A decode that does not pass the
/// re-check is reported as [`InvertError::DecodeFailure`], never returned.
pub fn invert(
    a: &ZqMatrix,
    trapdoor: &Trapdoor,
    u: &ZqVector,
    params: &ParameterSet,
) -> Result<Inversion, InvertError> {
    let q = a.modulus();
    if q.value() >= 1 << 50 {
        return Err(InvertError::ModulusTooLarge(q.value()));
    }
    if a.cols() != trapdoor.n {
        return Err(ZqError::DimensionMismatch { expected: trapdoor.n, got: a.cols() }.into());
    }
    let v = trapdoor.apply(u)?;
    let k = trapdoor.k;
    let s: Vec<u64> = (0..trapdoor.n).map(|i| decode_coordinate(&v.entries()[i * k..(i + 1) * k], q.value())).collect();
    let s = ZqVector::new(s, q)?;
    let e = u.sub(&a.matvec(&s)?)?;
    let residual_sq = e.norm_sq();
    let bound_sq = params.preimage_bound_sq();
    if residual_sq > bound_sq {
        return Err(InvertError::DecodeFailure { residual_sq, bound_sq });
    }
    Ok(Inversion { s, e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{sample_uniform_vector, session_rng, Stream, TruncatedGaussian, ValidationMode};

    fn small_params(q: u64, n: usize, m: usize) -> ParameterSet {
        let q = Modulus::new(q).unwrap();
        ParameterSet {
            lambda: 8,
            ell: 1,
            n,
            m,
            w: n * q.bits() as usize,
            q,
            b_l: 3,
            b_v: 4,
            b_p: 5,
            c_t: 1.0,
            mode: ValidationMode::Relaxed,
            strict: Default::default(),
        }
    }

    #[test]
    fn stacking_identity_holds() {
        let mut rng = session_rng(3, 0, Stream::Experiment);
        for (q, n, m) in [(17, 2, 12), (191, 2, 18), (65537, 4, 80)] {
            let p = small_params(q, n, m);
            for _ in 0..5 {
                let (a, t) = gen_trap(&p, &mut rng).unwrap();
                assert_eq!((a.rows(), a.cols()), (m, n));
                let ta = t.t_matrix(p.q).matmul(&a).unwrap();
                assert_eq!(ta, t.gadget(p.q));
                assert!(t.r.iter().all(|&r| (-1..=1).contains(&r)));
                let x = sample_uniform_vector(m, p.q, &mut rng);
                assert_eq!(t.apply(&x).unwrap(), t.t_matrix(p.q).matvec(&x).unwrap());
            }
        }
    }

    #[test]
    fn rejects_small_m() {
        let p = small_params(17, 2, 11);
        let err = gen_trap(&p, &mut session_rng(0, 0, Stream::Experiment)).unwrap_err();
        assert_eq!(err, TrapdoorError::MatrixTooSmall { m: 11, needed: 12 });
    }

    /// Exhaustive oracle: every secret in Z_17², including all binary ones,
    /// comes back exactly from a noiseless image.
    #[test]
    fn exhaustive_noiseless_inversion_q17() {
        let p = small_params(17, 2, 12);
        let mut rng = session_rng(9, 0, Stream::Experiment);
        for _ in 0..4 {
            let (a, t) = gen_trap(&p, &mut rng).unwrap();
            for s0 in 0..17 {
                for s1 in 0..17 {
                    let s = ZqVector::new(vec![s0, s1], p.q).unwrap();
                    let inv = invert(&a, &t, &a.matvec(&s).unwrap(), &p).unwrap();
                    assert_eq!(inv.s, s);
                    assert!(inv.e.is_zero());
                }
            }
        }
    }

    #[test]
    fn decodes_noise_within_margin() {
        let p = small_params(65537, 4, 80);
        let mut rng = session_rng(10, 0, Stream::Experiment);
        let (a, t) = gen_trap(&p, &mut rng).unwrap();
        let margin = t.decode_margin(p.q);
        let bound = margin.linf_radius.floor() as u64;
        let g = TruncatedGaussian::new(p.q, bound);
        let mut params = p.clone();
        params.b_p = 10 * bound;
        for _ in 0..200 {
            let s = sample_uniform_vector(4, p.q, &mut rng);
            let e = g.sample_vector(80, &mut rng);
            let u = a.matvec(&s).unwrap().add(&e).unwrap();
            let inv = invert(&a, &t, &u, &params).unwrap();
            assert_eq!(inv.s, s);
            assert_eq!(inv.e, e);
        }
    }

    /// Noise placed on a single gadget row past q/6 breaks the decode; the
    /// re-check turns that into a failure rather than a wrong secret.
    #[test]
    fn noise_past_margin_fails_loudly() {
        let p = small_params(65537, 4, 80);
        let mut rng = session_rng(12, 0, Stream::Experiment);
        let (a, t) = gen_trap(&p, &mut rng).unwrap();
        let top = 80 - p.w;
        let mut params = p.clone();
        params.b_p = 1024;
        for trial in 0..50u64 {
            let s = sample_uniform_vector(4, p.q, &mut rng);
            let mut e = vec![0i64; 80];
            // push the top gadget row of coordinate 0 half a period away
            e[top + 16] = 65537 / 2 - trial as i64;
            let e = ZqVector::from_i64s(&e, p.q).unwrap();
            let u = a.matvec(&s).unwrap().add(&e).unwrap();
            match invert(&a, &t, &u, &params) {
                Err(InvertError::DecodeFailure { .. }) => {}
                Ok(inv) => panic!("silent answer {:?} for true secret {:?}", inv.s, s),
                Err(other) => panic!("unexpected {other}"),
            }
        }
    }

    #[test]
    fn margin_report_is_consistent() {
        let p = small_params(65537, 4, 80);
        let (_, t) = gen_trap(&p, &mut session_rng(1, 1, Stream::Experiment)).unwrap();
        let m = t.decode_margin(p.q);
        assert!(m.max_row_l1 >= 1 && m.max_row_l1 <= 13);
        assert!(m.l2_radius >= m.linf_radius);
        let back = 65537f64 / (m.realized_c_t * (4.0 * 65537f64.log2()).sqrt());
        assert!((back - m.l2_radius).abs() < 1e-6);
    }
}
