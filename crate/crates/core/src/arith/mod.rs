//! Exact integer arithmetic: factorization, multiplicative functions,
//! modular inverses and the periodic Bernoulli functions.

mod rational;

pub use rational::Rational;

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest accepted factorization input, 2^63.
const FACTORIZE_LIMIT: u64 = 1 << 63;

/// Trial division covers primes below this bound before falling back to
/// Miller–Rabin plus rho splitting.
const TRIAL_PRIME_LIMIT: u64 = 1_000_000;

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn gcd_i64(a: i64, b: i64) -> u64 {
    gcd_u64(a.unsigned_abs(), b.unsigned_abs())
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin, valid for every `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    // Classical deterministic base sets by input size.
    let bases: &[u64] = if n < 2_047 {
        &[2]
    } else if n < 1_373_653 {
        &[2, 3]
    } else if n < 25_326_001 {
        &[2, 3, 5]
    } else if n < 3_215_031_751 {
        &[2, 3, 5, 7]
    } else if n < 3_474_749_660_383 {
        &[2, 3, 5, 7, 11, 13]
    } else {
        &[2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
    };
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for &a in bases {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Simple Eratosthenes sieve; fine for limits up to ~10^8.
pub fn primes_upto(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            primes.push(p as u64);
            let mut m = p * p;
            while m <= n {
                composite[m] = true;
                m += p;
            }
        }
    }
    primes
}

/// Shared prime table for trial division, built on first use.
pub fn small_primes() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| primes_upto(TRIAL_PRIME_LIMIT))
}

/// Prime decomposition with exponents in strictly increasing prime order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// All divisors, ascending.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let prev = divs.clone();
            let mut pe = 1u64;
            for _ in 0..e {
                pe *= p;
                divs.extend(prev.iter().map(|d| d * pe));
            }
        }
        divs.sort_unstable();
        divs
    }
}

fn pollard_rho(n: u64) -> u64 {
    // Brent's cycle variant with deterministic parameters.
    debug_assert!(n > 1 && !is_prime_u64(n) && n % 2 == 1);
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut ys, mut q, mut g) = (2u64, 2u64, 1u64, 1u64);
        let (mut y, mut r) = (2u64, 1u64);
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let m = 128.min(r - k);
                for _ in 0..m {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd_u64(q, n);
                k += m;
            }
            r *= 2;
        }
        if g == n {
            g = 1;
            while g == 1 {
                ys = f(ys);
                g = gcd_u64(x.abs_diff(ys), n);
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

/// Factor `n` into primes. Trial division by sieved primes below 10^6,
/// then Miller–Rabin plus rho splitting for what remains.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Domain("factorize(0) is undefined".into()));
    }
    if n > FACTORIZE_LIMIT {
        return Err(Error::Capacity(format!("factorize input {n} exceeds 2^63")));
    }
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut m = n;
    for &p in small_primes() {
        if p * p > m {
            break;
        }
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if m > 1 {
        if m < TRIAL_PRIME_LIMIT * TRIAL_PRIME_LIMIT || is_prime_u64(m) {
            // Either prime by construction (no divisor below its root) or
            // certified prime.
            push_factor(&mut factors, m, 1);
        } else {
            let mut stack = vec![m];
            while let Some(v) = stack.pop() {
                if is_prime_u64(v) {
                    push_factor(&mut factors, v, 1);
                } else {
                    let d = pollard_rho(v);
                    stack.push(d);
                    stack.push(v / d);
                }
            }
        }
    }
    factors.sort_unstable_by_key(|&(p, _)| p);
    // Merge any repeated primes produced by the splitting path.
    let mut merged: Vec<(u64, u32)> = Vec::with_capacity(factors.len());
    for (p, e) in factors {
        match merged.last_mut() {
            Some((lp, le)) if *lp == p => *le += e,
            _ => merged.push((p, e)),
        }
    }
    debug_assert_eq!(
        merged
            .iter()
            .map(|&(p, e)| p.pow(e))
            .product::<u64>(),
        n
    );
    Ok(Factorization { n, factors: merged })
}

fn push_factor(factors: &mut Vec<(u64, u32)>, p: u64, e: u32) {
    factors.push((p, e));
}

/// Moebius function.
pub fn mu(n: u64) -> Result<i64> {
    let f = factorize(n)?;
    if !f.is_squarefree() {
        return Ok(0);
    }
    Ok(if f.factors().len() % 2 == 0 { 1 } else { -1 })
}

/// Squarefree indicator mu^2.
pub fn mu2(n: u64) -> Result<i64> {
    Ok(if factorize(n)?.is_squarefree() { 1 } else { 0 })
}

/// Number of divisors.
pub fn divisor_count(n: u64) -> Result<i64> {
    Ok(factorize(n)?
        .factors()
        .iter()
        .map(|&(_, e)| e as i64 + 1)
        .product())
}

/// Number of ordered triples (a, b, c) with a*b*c = n.
pub fn triple_divisor_count(n: u64) -> Result<i64> {
    Ok(factorize(n)?
        .factors()
        .iter()
        .map(|&(_, e)| {
            let e = e as i64;
            (e + 1) * (e + 2) / 2
        })
        .product())
}

/// Number of distinct primes dividing n.
pub fn omega(n: u64) -> Result<i64> {
    Ok(factorize(n)?.factors().len() as i64)
}

/// Product of the primes whose square divides n.
pub fn squarefull_part(n: u64) -> Result<i64> {
    Ok(factorize(n)?
        .factors()
        .iter()
        .filter(|&&(_, e)| e >= 2)
        .map(|&(p, _)| p as i64)
        .product())
}

/// Multiplicative inverse of `a` modulo `q`, in `[1, q-1]`.
pub fn mod_inverse(a: i64, q: u64) -> Result<u64> {
    if q < 2 {
        return Err(Error::Domain(format!("modulus {q} must be at least 2")));
    }
    let a_red = a.rem_euclid(q as i64);
    if gcd_u64(a_red as u64, q) != 1 {
        return Err(Error::NonInvertible { a, q });
    }
    // Extended Euclid on (a_red, q).
    let (mut r0, mut r1) = (a_red, q as i64);
    let (mut s0, mut s1) = (1i64, 0i64);
    while r1 != 0 {
        let quot = r0 / r1;
        (r0, r1) = (r1, r0 - quot * r1);
        (s0, s1) = (s1, s0 - quot * s1);
    }
    debug_assert_eq!(r0, 1);
    Ok(s0.rem_euclid(q as i64) as u64)
}

/// Fractional part in `[0, 1)`, also for negative inputs.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // Guard the case where rounding pushes x - floor(x) to exactly 1.0.
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Periodic Bernoulli functions: k = 1 gives {x} - 1/2, k = 2 gives
/// {x}^2/2 - {x}/2 + 1/12.
pub fn bernoulli(k: u8, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("bernoulli argument {x} not finite")));
    }
    let t = frac(x);
    match k {
        1 => Ok(t - 0.5),
        2 => Ok(t * t / 2.0 - t / 2.0 + 1.0 / 12.0),
        _ => Err(Error::Domain(format!("bernoulli order {k} unsupported"))),
    }
}

#[inline]
pub(crate) fn bernoulli2(x: f64) -> f64 {
    let t = frac(x);
    t * t / 2.0 - t / 2.0 + 1.0 / 12.0
}

/// The prime nearest to `n` (ties resolved downward).
pub fn nearest_prime(n: u64) -> u64 {
    if n < 2 {
        return 2;
    }
    for d in 0..n {
        if is_prime_u64(n - d) {
            return n - d;
        }
        if is_prime_u64(n + d) {
            return n + d;
        }
    }
    2
}
