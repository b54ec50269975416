//! Error vectors of squarefree counts in arithmetic progressions and their
//! second-moment statistics.
//!
//! `E(X, q, a)` is the count of squarefree n <= X with n = a mod q minus the
//! main term C(q) X / q. This module keeps the closed interval n <= X
//! throughout so the decomposition of the full correlation sum into
//! S[gamma] - 2 C(q) (X/q) Q(X) + C(q)^2 X^2 / q stays exact.

use rayon::prelude::*;

use crate::arith::{gcd_u64, is_prime_u64, mod_inverse};
use crate::error::{Error, Result};
use crate::localdensity::cq_constant;
use crate::numeric::KahanSum;
use crate::sieve::SegmentStore;

/// Ceiling for one statistics pass.
pub const ERROR_VECTOR_MAX_X: u64 = 1_000_000_000;

/// The affine map a -> r a + s on residues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineMap {
    pub r: i64,
    pub s: i64,
}

impl AffineMap {
    pub fn new(r: i64, s: i64) -> AffineMap {
        AffineMap { r, s }
    }

    /// gamma(a) mod q.
    #[inline]
    pub fn apply(&self, a: u64, q: u64) -> u64 {
        let qi = q as i128;
        ((self.r as i128 * a as i128 + self.s as i128).rem_euclid(qi)) as u64
    }

    /// gamma^{-1}(0) = -s * r^{-1} mod q; requires gcd(r, q) = 1.
    pub fn preimage_of_zero(&self, q: u64) -> Result<u64> {
        let r_inv = mod_inverse(self.r, q)?;
        Ok(((-self.s as i128 * r_inv as i128).rem_euclid(q as i128)) as u64)
    }

    fn check_permutes(&self, q: u64) -> Result<()> {
        if self.r.rem_euclid(q as i64) == 0 {
            return Err(Error::DegenerateMap(format!(
                "q = {q} divides r = {}; a -> ra + s does not permute residues",
                self.r
            )));
        }
        Ok(())
    }
}

/// Residue counts and error terms for one (X, q).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorVector {
    pub x: u64,
    pub q: u64,
    /// counts[a] = #{n <= X squarefree, n = a mod q}.
    pub counts: Vec<u64>,
    /// C(q) X / q.
    pub main_term: f64,
    /// e[a] = counts[a] - main_term.
    pub e: Vec<f64>,
    /// Set when q > X: outside the regime the statistics are meant for.
    pub degenerate: bool,
}

impl ErrorVector {
    /// Q(X), recovered exactly from the residue partition.
    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// One sieve pass over [1, X] accumulating residue counts.
pub fn error_vector(store: &SegmentStore, x: u64, q: u64) -> Result<ErrorVector> {
    if q < 2 {
        return Err(Error::Domain(format!("modulus {q} must be at least 2")));
    }
    if x < 1 || x > ERROR_VECTOR_MAX_X {
        return Err(Error::Domain(format!(
            "X = {x} outside [1, {ERROR_VECTOR_MAX_X}]"
        )));
    }
    let counts = store
        .block_ids(1, x + 1)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| -> Result<Vec<u64>> {
            let seg = store.block_segment(k)?;
            let mut local = vec![0u64; q as usize];
            let lo = seg.lo().max(1);
            let hi = seg.hi().min(x + 1);
            if lo < hi {
                for n in seg.ones() {
                    if n >= lo && n < hi {
                        local[(n % q) as usize] += 1;
                    }
                }
            }
            Ok(local)
        })
        .try_reduce(
            || vec![0u64; q as usize],
            |mut acc, local| {
                for (a, v) in acc.iter_mut().zip(local) {
                    *a += v;
                }
                Ok(acc)
            },
        )?;
    let main_term = cq_constant(q)? * x as f64 / q as f64;
    let e = counts.iter().map(|&c| c as f64 - main_term).collect();
    Ok(ErrorVector {
        x,
        q,
        counts,
        main_term,
        e,
        degenerate: q > x,
    })
}

/// sum over residues coprime to q of E(X, q, a)^2.
pub fn variance(ev: &ErrorVector) -> f64 {
    let mut acc = KahanSum::new();
    for a in 0..ev.q {
        if gcd_u64(a, ev.q) == 1 {
            let e = ev.e[a as usize];
            acc.add(e * e);
        }
    }
    acc.value()
}

/// S[gamma]: the double count of squarefree pairs (n1, n2) with n1, n2 <= X
/// and n2 = gamma(n1) mod q, evaluated as sum_a counts[a] counts[gamma(a)].
pub fn s_gamma(ev: &ErrorVector, map: AffineMap) -> Result<u128> {
    map.check_permutes(ev.q)?;
    let mut total = 0u128;
    for a in 0..ev.q {
        let b = map.apply(a, ev.q);
        total += ev.counts[a as usize] as u128 * ev.counts[b as usize] as u128;
    }
    Ok(total)
}

/// sum over all residues a mod q of E(a) E(gamma(a)).
pub fn full_correlation(ev: &ErrorVector, map: AffineMap) -> Result<f64> {
    map.check_permutes(ev.q)?;
    let mut acc = KahanSum::new();
    for a in 0..ev.q {
        let b = map.apply(a, ev.q);
        acc.add(ev.e[a as usize] * ev.e[b as usize]);
    }
    Ok(acc.value())
}

/// The correlation sum with the residues a = 0 and a = gamma^{-1}(0)
/// omitted. No hypothesis on s: this is the raw statistic, also defined at
/// s = 0 where the omitted residues coincide.
pub fn correlation_sum(ev: &ErrorVector, map: AffineMap) -> Result<f64> {
    map.check_permutes(ev.q)?;
    let skip_a = 0u64;
    let skip_b = map.preimage_of_zero(ev.q)?;
    let mut acc = KahanSum::new();
    for a in 0..ev.q {
        if a == skip_a || a == skip_b {
            continue;
        }
        let b = map.apply(a, ev.q);
        acc.add(ev.e[a as usize] * ev.e[b as usize]);
    }
    Ok(acc.value())
}

/// The correlation sum under the stated hypothesis: q prime, q dividing
/// neither r nor s.
pub fn correlation(ev: &ErrorVector, map: AffineMap) -> Result<f64> {
    if !is_prime_u64(ev.q) {
        return Err(Error::Hypothesis(format!("q = {} must be prime", ev.q)));
    }
    if map.r.rem_euclid(ev.q as i64) == 0 || map.s.rem_euclid(ev.q as i64) == 0 {
        return Err(Error::Hypothesis(format!(
            "q = {} must divide neither r = {} nor s = {}",
            ev.q, map.r, map.s
        )));
    }
    correlation_sum(ev, map)
}

/// Right-hand side of the exact decomposition:
/// S[gamma] - 2 C(q) (X/q) Q(X) + C(q)^2 X^2 / q.
pub fn decomposition_rhs(ev: &ErrorVector, map: AffineMap) -> Result<f64> {
    let s = s_gamma(ev, map)? as f64;
    let cq = cq_constant(ev.q)?;
    let x = ev.x as f64;
    let q = ev.q as f64;
    Ok(s - 2.0 * cq * (x / q) * ev.total_count() as f64 + cq * cq * x * x / q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(x: u64, q: u64) -> ErrorVector {
        error_vector(&SegmentStore::new(), x, q).unwrap()
    }

    #[test]
    fn error_vector_small_example() {
        let ev = ev(10, 3);
        assert_eq!(ev.counts, vec![2, 3, 2]);
        assert_eq!(ev.total_count(), 7);
        assert!((ev.e[1] - 0.7203).abs() < 1e-4);
        assert!(!ev.degenerate);
    }

    #[test]
    fn counts_partition_squarefree_total() {
        for (x, q) in [(10_000u64, 997u64), (50_000, 11), (12_345, 64)] {
            let ev = ev(x, q);
            assert_eq!(ev.total_count(), crate::sieve::count_squarefree(x).unwrap());
        }
    }

    #[test]
    fn degenerate_regime_flagged() {
        let ev = ev(10, 23);
        assert!(ev.degenerate);
        assert_eq!(ev.total_count(), 7);
    }

    #[test]
    fn trivial_bound_holds() {
        for (x, q) in [(1000u64, 3u64), (1000, 7), (5000, 101), (5000, 4999)] {
            let ev = ev(x, q);
            let bound = x as f64 / q as f64 + 1.0;
            for a in 0..q as usize {
                assert!(ev.e[a].abs() <= bound, "x = {x}, q = {q}, a = {a}");
            }
        }
    }

    #[test]
    fn s_gamma_small_examples() {
        let ev = ev(10, 3);
        assert_eq!(s_gamma(&ev, AffineMap::new(1, 0)).unwrap(), 17);
        assert_eq!(s_gamma(&ev, AffineMap::new(1, 1)).unwrap(), 16);
        assert!(s_gamma(&ev, AffineMap::new(3, 1)).is_err());
        assert!(s_gamma(&ev, AffineMap::new(-6, 1)).is_err());
    }

    #[test]
    fn cauchy_schwarz_floor() {
        let ev = ev(100_000, 997);
        let s = s_gamma(&ev, AffineMap::new(1, 0)).unwrap() as f64;
        let q = ev.total_count() as f64;
        assert!(s >= q * q / 997.0 - 997.0);
    }

    #[test]
    fn decomposition_identity_small_grid() {
        for (x, q, r, s) in [
            (10u64, 3u64, 1i64, 1i64),
            (10_000, 101, -1, 7),
            (10_000, 97, 2, 5),
            (3163, 31, 3, 1),
        ] {
            let ev = ev(x, q);
            let map = AffineMap::new(r, s);
            let lhs = full_correlation(&ev, map).unwrap();
            let rhs = decomposition_rhs(&ev, map).unwrap();
            let s_abs = s_gamma(&ev, map).unwrap() as f64;
            assert!(
                (lhs - rhs).abs() <= 1e-6 * s_abs.max(1.0),
                "x = {x}, q = {q}: lhs = {lhs}, rhs = {rhs}"
            );
        }
    }

    #[test]
    fn correlation_recomposition() {
        let evec = ev(10_000, 101);
        let map = AffineMap::new(-1, 7);
        let full = full_correlation(&evec, map).unwrap();
        let cut = correlation(&evec, map).unwrap();
        let b = map.preimage_of_zero(101).unwrap();
        let dropped = evec.e[0] * evec.e[map.apply(0, 101) as usize]
            + evec.e[b as usize] * evec.e[0];
        assert!((full - cut - dropped).abs() <= 1e-9 * full.abs().max(1.0));
    }

    #[test]
    fn correlation_hypothesis_checks() {
        let evec = ev(1000, 13);
        assert!(correlation(&evec, AffineMap::new(1, 0)).is_err());
        assert!(correlation(&evec, AffineMap::new(13, 1)).is_err());
        assert!(correlation(&evec, AffineMap::new(1, 26)).is_err());
        // The raw sum accepts s = 0.
        assert!(correlation_sum(&evec, AffineMap::new(1, 0)).is_ok());
        let evc = ev(1000, 16);
        assert!(correlation(&evc, AffineMap::new(1, 1)).is_err());
    }

    #[test]
    fn correlation_periodic_in_s() {
        let evec = ev(20_000, 211);
        let a = correlation(&evec, AffineMap::new(-1, 5)).unwrap();
        let b = correlation(&evec, AffineMap::new(-1, 5 + 211 * 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bijection_preserves_error_multiset() {
        let evec = ev(20_000, 211);
        let map = AffineMap::new(5, 17);
        let mut original: Vec<f64> = evec.e.clone();
        let mut permuted: Vec<f64> = (0..211u64)
            .map(|a| evec.e[map.apply(a, 211) as usize])
            .collect();
        original.sort_by(f64::total_cmp);
        permuted.sort_by(f64::total_cmp);
        assert_eq!(original, permuted);
    }

    #[test]
    fn variance_matches_naive_two_pass() {
        let evec = ev(10_000, 101);
        let naive: f64 = (1..101u64)
            .map(|a| evec.e[a as usize] * evec.e[a as usize])
            .sum();
        let v = variance(&evec);
        assert!(v >= 0.0);
        assert!((v - naive).abs() <= 1e-9 * naive.max(1.0));
    }
}
