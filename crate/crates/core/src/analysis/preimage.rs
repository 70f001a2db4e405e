use super::AnalysisError;
use crate::samplers::ParameterSet;
use crate::zq::{Modulus, ZqMatrix, ZqVector};

/// Base-`q` packing of `Z_qⁿ` into `u128`, coordinate 0 least significant.
///
/// The packed order is the order in which [`scan_preimages`] visits vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Packing {
    q: Modulus,
    n: usize,
    size: u128,
}

impl Packing {
    pub fn new(q: Modulus, n: usize) -> Option<Self> {
        let size = (q.value() as u128).checked_pow(n as u32)?;
        Some(Self { q, n, size })
    }

    pub fn modulus(&self) -> Modulus {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `qⁿ`.
    pub fn size(&self) -> u128 {
        self.size
    }

    pub fn pack(&self, x: &ZqVector) -> u128 {
        debug_assert_eq!(x.len(), self.n);
        let q = self.q.value() as u128;
        x.entries().iter().rev().fold(0u128, |acc, &v| acc * q + v as u128)
    }

    pub fn unpack(&self, mut idx: u128) -> ZqVector {
        let q = self.q.value() as u128;
        let entries = (0..self.n)
            .map(|_| {
                let d = (idx % q) as u64;
                idx /= q;
                d
            })
            .collect();
        ZqVector::from_raw(entries, self.q)
    }

    /// Packed `x + b·s` with `s` embedded as 0/1 entries.
    pub fn shift(&self, idx: u128, s: &[bool], subtract: bool) -> u128 {
        let q = self.q.value() as u128;
        let mut out = 0u128;
        let mut place = 1u128;
        let mut rest = idx;
        for &bit in s.iter().take(self.n) {
            let mut d = rest % q;
            rest /= q;
            if bit {
                d = if subtract { (d + q - 1) % q } else { (d + 1) % q };
            }
            out += d * place;
            place = place.saturating_mul(q);
        }
        out
    }
}

/// The valid preimages of `y` under one branch `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreimageSet {
    pub b: bool,
    pub elements: Vec<ZqVector>,
}

impl PreimageSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: &ZqVector) -> bool {
        self.elements.contains(x)
    }
}

/// Number of candidate points [`scan_preimages`] examines for this shape.
pub fn scan_cost(a: &ZqMatrix, bound_sq: u128) -> Option<u128> {
    let q = a.modulus().value() as u128;
    let n = a.cols();
    let prefix = q.checked_pow(n.saturating_sub(1) as u32)?;
    match pivot(a, bound_sq) {
        Some((_, radius)) => prefix.checked_mul(2 * radius as u128 + 1),
        None => q.checked_pow(n as u32),
    }
}

/// A row whose last-column entry is invertible, usable when the per-row
/// window `[−R, R]` with `R = ⌊√bound_sq⌋` is narrower than `Z_q`.
fn pivot(a: &ZqMatrix, bound_sq: u128) -> Option<(usize, u64)> {
    let q = a.modulus();
    let n = a.cols();
    if n == 0 || !q.is_prime() {
        return None;
    }
    let radius = isqrt(bound_sq);
    if 2 * radius + 1 >= q.value() as u128 {
        return None;
    }
    (0..a.rows()).find(|&i| a.get(i, n - 1) != 0).map(|i| (i, radius as u64))
}

fn isqrt(v: u128) -> u128 {
    let mut r = (v as f64).sqrt() as u128;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Visits every `x ∈ Z_qⁿ` with `‖target − A·x‖² ≤ bound_sq`, in packed order,
/// passing the packed index and the squared residual norm. Returns the number
/// of candidates examined.
///
/// The first `n−1` coordinates run through an odometer whose residual is
/// updated incrementally: advancing coordinate `j` (a wrap from `q−1` to `0`
/// is also `+1` mod `q`) subtracts column `j` once. When some row `p` has an
/// invertible entry in the last column and `2R+1 < q`, every solution must
/// put residual row `p` in `[−R, R]`, which fixes the last coordinate to one
/// of `2R+1` values; otherwise the last coordinate is scanned like the rest.
pub fn scan_preimages<F>(
    a: &ZqMatrix,
    target: &ZqVector,
    bound_sq: u128,
    budget: u128,
    mut visit: F,
) -> Result<u128, AnalysisError>
where
    F: FnMut(u128, u128),
{
    let q = a.modulus();
    let n = a.cols();
    let m = a.rows();
    if target.len() != m {
        return Err(crate::zq::ZqError::DimensionMismatch { expected: m, got: target.len() }.into());
    }
    let packing = Packing::new(q, n).ok_or(AnalysisError::BudgetExceeded { needed: u128::MAX, budget })?;
    let cost = scan_cost(a, bound_sq).ok_or(AnalysisError::BudgetExceeded { needed: u128::MAX, budget })?;
    if cost > budget {
        return Err(AnalysisError::BudgetExceeded { needed: cost, budget });
    }
    let qv = q.value();
    let cols: Vec<Vec<u64>> = (0..n).map(|j| a.column(j)).collect();
    let table: Option<Vec<u128>> = (qv <= 1 << 22).then(|| {
        (0..qv)
            .map(|v| {
                let c = q.centered(v) as i128;
                (c * c) as u128
            })
            .collect()
    });
    let sq = |v: u64| -> u128 {
        match &table {
            Some(t) => t[v as usize],
            None => {
                let c = q.centered(v) as i128;
                (c * c) as u128
            }
        }
    };
    let within = |r: &[u64]| -> Option<u128> {
        let mut acc = 0u128;
        for &v in r {
            acc += sq(v);
            if acc > bound_sq {
                return None;
            }
        }
        Some(acc)
    };
    let step = |r: &mut [u64], col: &[u64]| {
        for (ri, &c) in r.iter_mut().zip(col) {
            *ri = if *ri >= c { *ri - c } else { *ri + qv - c };
        }
    };

    let mut r = target.entries().to_vec();
    let Some((p, radius)) = pivot(a, bound_sq) else {
        let mut digits = vec![0u64; n];
        for idx in 0..packing.size() {
            if let Some(acc) = within(&r) {
                visit(idx, acc);
            }
            for j in 0..n {
                step(&mut r, &cols[j]);
                digits[j] += 1;
                if digits[j] < qv {
                    break;
                }
                digits[j] = 0;
            }
        }
        return Ok(cost);
    };

    let last = &cols[n - 1];
    let inv = q.inv(last[p]).expect("pivot entry is nonzero");
    let prefix_size = packing.size() / qv as u128;
    let mut digits = vec![0u64; n - 1];
    // Walking c upward moves the last coordinate by −inv each time, so a
    // second screening row changes by a fixed step and needs no multiply.
    let p2 = (p + 1) % m;
    let dz = q.sub(0, inv);
    let dv = q.mul(last[p2], inv);
    let mut hits = Vec::new();
    for prefix in 0..prefix_size {
        let mut z = q.mul(inv, q.add(r[p], radius));
        let mut v2 = q.sub(r[p2], q.mul(last[p2], z));
        'cand: for _ in 0..=2 * radius {
            let (zc, v2c) = (z, v2);
            z = q.add(z, dz);
            v2 = q.add(v2, dv);
            if q.add(v2c, radius) > 2 * radius {
                continue;
            }
            let mut acc = 0u128;
            for (&ri, &ci) in r.iter().zip(last) {
                acc += sq(q.sub(ri, q.mul(ci, zc)));
                if acc > bound_sq {
                    continue 'cand;
                }
            }
            hits.push((prefix + zc as u128 * prefix_size, acc));
        }
        for j in 0..n - 1 {
            step(&mut r, &cols[j]);
            digits[j] += 1;
            if digits[j] < qv {
                break;
            }
            digits[j] = 0;
        }
    }
    hits.sort_unstable_by_key(|h| h.0);
    for (idx, acc) in hits {
        visit(idx, acc);
    }
    Ok(cost)
}

/// `y − b·u`, the target whose near-images are the branch-`b` preimages.
pub fn branch_target(u: &ZqVector, y: &ZqVector, b: bool) -> Result<ZqVector, AnalysisError> {
    Ok(if b { y.sub(u)? } else { y.clone() })
}

/// Exhaustive preimage set `{x : ‖y − A·x − b·u‖ ≤ B_P √m}`.
pub fn enumerate_preimages(
    a: &ZqMatrix,
    u: &ZqVector,
    y: &ZqVector,
    b: bool,
    params: &ParameterSet,
    budget: u128,
) -> Result<PreimageSet, AnalysisError> {
    let target = branch_target(u, y, b)?;
    let packing =
        Packing::new(a.modulus(), a.cols()).ok_or(AnalysisError::BudgetExceeded { needed: u128::MAX, budget })?;
    let mut elements = Vec::new();
    scan_preimages(a, &target, params.preimage_bound_sq(), budget, |idx, _| elements.push(packing.unpack(idx)))?;
    Ok(PreimageSet { b, elements })
}

/// The membership predicate on its own; used as an independent oracle.
pub fn is_preimage(
    a: &ZqMatrix,
    u: &ZqVector,
    y: &ZqVector,
    b: bool,
    x: &ZqVector,
    params: &ParameterSet,
) -> Result<bool, AnalysisError> {
    let r = branch_target(u, y, b)?.sub(&a.matvec(x)?)?;
    Ok(r.norm_sq() <= params.preimage_bound_sq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{
        gen_trap, sample_uniform_matrix, sample_uniform_vector, session_rng, Setup, Stream, ValidationMode,
    };
    use rand::Rng;

    fn params(q: u64, n: usize, m: usize, b_p: u64) -> ParameterSet {
        let q = Modulus::new(q).unwrap();
        ParameterSet {
            lambda: 8,
            ell: 1,
            n,
            m,
            w: n * q.bits() as usize,
            q,
            b_l: 2,
            b_v: 3,
            b_p,
            c_t: 1.0,
            mode: ValidationMode::Relaxed,
            strict: Default::default(),
        }
    }

    #[test]
    fn packing_round_trip_and_shift() {
        let p = Packing::new(Modulus::new(7).unwrap(), 3).unwrap();
        assert_eq!(p.size(), 343);
        for idx in 0..343 {
            assert_eq!(p.pack(&p.unpack(idx)), idx);
        }
        let q = p.modulus();
        let x = ZqVector::new(vec![6, 0, 3], q).unwrap();
        let s = [true, true, false];
        let sv = ZqVector::new(vec![1, 1, 0], q).unwrap();
        assert_eq!(p.unpack(p.shift(p.pack(&x), &s, false)), x.add(&sv).unwrap());
        assert_eq!(p.unpack(p.shift(p.pack(&x), &s, true)), x.sub(&sv).unwrap());
    }

    /// The incremental scan agrees with filtering every point through the
    /// membership predicate.
    #[test]
    fn scan_matches_predicate() {
        let mut rng = session_rng(5, 0, Stream::Experiment);
        for (q, n, m, b_p) in
            [(5, 3, 6, 1), (7, 3, 5, 2), (11, 2, 4, 3), (191, 2, 3, 20), (101, 3, 4, 3), (97, 1, 3, 2), (1021, 2, 5, 3)]
        {
            let p = params(q, n, m, b_p);
            let a = sample_uniform_matrix(m, n, p.q, &mut rng);
            let u = sample_uniform_vector(m, p.q, &mut rng);
            let x_true = sample_uniform_vector(n, p.q, &mut rng);
            let y = a.matvec(&x_true).unwrap();
            let packing = Packing::new(p.q, n).unwrap();
            for b in [false, true] {
                let set = enumerate_preimages(&a, &u, &y, b, &p, 1 << 26).unwrap();
                let brute: Vec<ZqVector> = (0..packing.size())
                    .map(|i| packing.unpack(i))
                    .filter(|x| is_preimage(&a, &u, &y, b, x, &p).unwrap())
                    .collect();
                assert_eq!(set.elements, brute);
                if !b {
                    assert!(set.contains(&x_true));
                }
            }
        }
    }

    #[test]
    fn y_equal_u_contains_zero_on_branch_one() {
        let mut rng = session_rng(6, 0, Stream::Experiment);
        let p = params(17, 2, 12, 4);
        let setup = Setup::new(p.clone());
        let (a, _) = gen_trap(&p, &mut rng).unwrap();
        let s = ZqVector::new(vec![rng.random_range(0..2), 1], p.q).unwrap();
        let e = setup.noise_v.sample_vector(12, &mut rng);
        let u = a.matvec(&s).unwrap().add(&e).unwrap();
        let set = enumerate_preimages(&a, &u, &u, true, &p, 1000).unwrap();
        assert!(set.contains(&ZqVector::zeros(2, p.q)));
    }

    #[test]
    fn budget_is_enforced() {
        let p = params(17, 3, 4, 2);
        let a = ZqMatrix::zeros(4, 3, p.q);
        let y = ZqVector::zeros(4, p.q);
        let err = enumerate_preimages(&a, &y, &y, false, &p, 4912).unwrap_err();
        assert!(matches!(err, AnalysisError::BudgetExceeded { needed: 4913, .. }));

        // With an invertible pivot the last coordinate costs 2R+1 = 9, not 17.
        let mut a = a;
        a.set(0, 2, 1);
        assert_eq!(scan_cost(&a, p.preimage_bound_sq()), Some(17 * 17 * 9));
        assert!(enumerate_preimages(&a, &y, &y, false, &p, 17 * 17 * 9).is_ok());
    }
}
