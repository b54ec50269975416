//! Exact local densities and constants.
//!
//! `h` is the multiplicative function with h(p) = (1 - 2/p^2)^-1 on
//! squarefree arguments, `beta` its inverse under convolution with the
//! constant-1 function, `kappa` the correction at primes shared between the
//! shift and the slope, and `u_p` the local obstruction count: the number of
//! residues v mod p^2 for which p^2 divides v or r*v + ell. The pair density
//! f(ell, r) assembles these into the Euler product prod_p (1 - u_p/p^2).

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::arith::{
    factorize, gcd_i64, gcd_u64, is_prime_u64, mu, primes_upto, Rational,
};
use crate::error::{Error, Result};

/// An exact rational carrier together with its float value; `includes_c2`
/// marks values that carry one factor of the constant C2.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityValue {
    pub rational_part: Rational,
    pub includes_c2: bool,
    pub approx: f64,
}

/// h(d): zero unless d is squarefree, otherwise prod_{p|d} p^2/(p^2 - 2).
pub fn h_value(d: u64) -> Result<Rational> {
    let f = factorize(d)?;
    if !f.is_squarefree() {
        return Ok(Rational::ZERO);
    }
    let mut acc = Rational::ONE;
    for &(p, _) in f.factors() {
        let p2 = (p * p) as i64;
        acc = acc * Rational::new(p2, p2 - 2);
    }
    Ok(acc)
}

/// h as a float, for hot loops where the factorization is already known.
pub(crate) fn h_f64_from_primes(primes: impl Iterator<Item = u64>) -> f64 {
    let mut acc = 1.0;
    for p in primes {
        let p2 = (p * p) as f64;
        acc *= p2 / (p2 - 2.0);
    }
    acc
}

/// beta: the multiplicative function with h(d) = sum_{mn=d} beta(m).
/// Supported on cubefree numbers.
pub fn beta_value(m: u64) -> Result<Rational> {
    let f = factorize(m)?;
    let mut acc = Rational::ONE;
    for &(p, e) in f.factors() {
        let p2 = (p * p) as i64;
        let local = match e {
            1 => Rational::new(2, p2 - 2),
            2 => Rational::new(-p2, p2 - 2),
            _ => return Ok(Rational::ZERO),
        };
        acc = acc * local;
    }
    Ok(acc)
}

/// kappa: multiplicative, kappa(p) = (p^2-p-1)/(p^2-1),
/// kappa(p^2) = (p^2-p)/(p^2-1), zero from the cube up.
pub fn kappa_value(n: u64) -> Result<Rational> {
    let f = factorize(n)?;
    let mut acc = Rational::ONE;
    for &(p, e) in f.factors() {
        let p = p as i64;
        let local = match e {
            1 => Rational::new(p * p - p - 1, p * p - 1),
            2 => Rational::new(p * p - p, p * p - 1),
            _ => return Ok(Rational::ZERO),
        };
        acc = acc * local;
    }
    Ok(acc)
}

fn check_shift_slope(ell: i64, r: i64) -> Result<()> {
    if ell == 0 {
        return Err(Error::Domain("shift ell must be nonzero".into()));
    }
    if r == 0 {
        return Err(Error::Domain("slope r must be nonzero".into()));
    }
    if !factorize(r.unsigned_abs())?.is_squarefree() {
        return Err(Error::Domain(format!("slope r = {r} must be squarefree")));
    }
    Ok(())
}

/// The five-case local obstruction count at p. Divisibility is read off
/// |ell| and |r|.
pub fn u_p(p: u64, ell: i64, r: i64) -> Result<u64> {
    if !is_prime_u64(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    check_shift_slope(ell, r)?;
    let ell = ell.unsigned_abs();
    let p2 = p * p;
    Ok(if r.unsigned_abs() % p == 0 {
        if ell % p2 == 0 {
            p
        } else if ell % p == 0 {
            p + 1
        } else {
            1
        }
    } else if ell % p2 == 0 {
        1
    } else {
        2
    })
}

/// Direct scan of v in [0, p^2): counts v with p^2 | v or p^2 | r*v + ell,
/// reading p^2 | 0 as true.
pub fn u_p_bruteforce(p: u64, ell: i64, r: i64) -> Result<u64> {
    if !is_prime_u64(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    if p > 1_000 {
        return Err(Error::Domain(format!("brute-force scan capped at p <= 1000, got {p}")));
    }
    check_shift_slope(ell, r)?;
    let p2 = (p * p) as i128;
    let (r, ell) = (r as i128, ell as i128);
    let mut count = 0u64;
    for v in 0..p2 {
        if v == 0 || (r * v + ell).rem_euclid(p2) == 0 {
            count += 1;
        }
    }
    Ok(count)
}

// --- C2 and the prime-zeta machinery -------------------------------------

/// zeta at an integer s >= 2; closed forms for 2, 4, 6, direct summation
/// with a negligible tail elsewhere.
fn zeta_int(s: u32) -> f64 {
    match s {
        2 => PI * PI / 6.0,
        4 => PI.powi(4) / 90.0,
        6 => PI.powi(6) / 945.0,
        _ => {
            // Tail below n^-(s-1)/(s-1) < 4096^-7 for s >= 8.
            let mut sum = 0.0;
            for n in (1..=4096u32).rev() {
                sum += (n as f64).powi(-(s as i32));
            }
            sum
        }
    }
}

/// Prime zeta P(s) = sum_p p^-s via the Moebius/log-zeta expansion.
fn prime_zeta(s: u32) -> f64 {
    let mut sum = 0.0;
    for j in 1..=40u64 {
        let m = mu(j).expect("small factorization");
        if m == 0 {
            continue;
        }
        let z = zeta_int(s * j as u32);
        if z == 1.0 {
            break;
        }
        sum += m as f64 / j as f64 * z.ln();
    }
    sum
}

/// sum_{p > limit} p^-s, assuming `partial` = sum_{p <= limit} p^-s.
fn prime_zeta_tail(s: u32, partial: f64) -> f64 {
    (prime_zeta(s) - partial).max(0.0)
}

/// sum_{p > limit} p^-2 given the primes below the limit; used as a tail
/// correction by several Euler products. Slightly padded variant available
/// as an upper bound.
pub(crate) fn inv_square_prime_tail(primes_below: &[u64]) -> f64 {
    let partial: f64 = primes_below.iter().map(|&p| 1.0 / (p as f64 * p as f64)).sum();
    prime_zeta_tail(2, partial)
}

/// Partial product prod_{p <= limit} (1 - 2/p^2).
pub fn c2_partial_product(limit: u64) -> f64 {
    let mut acc = 1.0;
    for p in primes_upto(limit) {
        let p2 = p as f64 * p as f64;
        acc *= 1.0 - 2.0 / p2;
    }
    acc
}

fn c2_full_precision() -> f64 {
    // Partial product over p <= P, then exp(-sum_k 2^k/k * T_k) with
    // T_k = sum_{p > P} p^-2k recovered from the prime zeta function.
    // The discarded k >= 4 terms are below 1e-30 at this P.
    const P: u64 = 100_000;
    let primes = primes_upto(P);
    let mut product = 1.0;
    let mut partials = [0.0f64; 3]; // sums of p^-2, p^-4, p^-6 for p <= P
    for &p in &primes {
        let p2 = p as f64 * p as f64;
        product *= 1.0 - 2.0 / p2;
        partials[0] += 1.0 / p2;
        partials[1] += 1.0 / (p2 * p2);
        partials[2] += 1.0 / (p2 * p2 * p2);
    }
    let mut log_tail = 0.0;
    for (k, &partial) in partials.iter().enumerate() {
        let k = k as u32 + 1;
        log_tail += (2.0f64).powi(k as i32) / k as f64 * prime_zeta_tail(2 * k, partial);
    }
    product * (-log_tail).exp()
}

/// C2 = prod_p (1 - 2/p^2), memoized at full precision.
pub fn c2() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(c2_full_precision)
}

/// C2 to a requested relative tolerance. The computed correction leaves a
/// relative error well below 1e-14, so every admissible eps is satisfied.
pub fn c2_constant(eps: f64) -> Result<f64> {
    if !(1e-14..=1e-3).contains(&eps) {
        return Err(Error::Domain(format!(
            "c2 tolerance {eps} outside [1e-14, 1e-3]"
        )));
    }
    Ok(c2())
}

// --- assembled densities ---------------------------------------------------

/// Pair density f(ell, r): C2 times an exact rational correction.
pub fn f_density(ell: i64, r: i64) -> Result<DensityValue> {
    check_shift_slope(ell, r)?;
    let r_abs = r.unsigned_abs();
    let ell_abs = ell.unsigned_abs();
    let mut rational = Rational::ONE;
    for &(p, _) in factorize(r_abs)?.factors() {
        let p2 = (p * p) as i64;
        rational = rational * Rational::new(p2 - 1, p2 - 2);
    }
    for &(p, e) in factorize(ell_abs)?.factors() {
        if e >= 2 && r_abs % p != 0 {
            let p2 = (p * p) as i64;
            rational = rational * Rational::new(p2 - 1, p2 - 2);
        }
    }
    let r2 = r_abs * r_abs;
    rational = rational * kappa_value(gcd_u64(ell_abs, r2))?;
    Ok(DensityValue {
        rational_part: rational,
        includes_c2: true,
        approx: rational.to_f64() * c2(),
    })
}

/// C(q) = (6/pi^2) (1 - q^-2)^-1.
pub fn cq_constant(q: u64) -> Result<f64> {
    if q < 2 {
        return Err(Error::Domain(format!("modulus {q} must be at least 2")));
    }
    let q2 = q as f64 * q as f64;
    Ok(6.0 / (PI * PI) * q2 / (q2 - 1.0))
}

/// sum over ordered pairs (rho, sigma) with rho*sigma | r^2 of
/// kappa(rho) mu(sigma) / (rho sigma), as an exact rational.
pub fn kappa_mu_divisor_sum(r: i64) -> Result<Rational> {
    if r == 0 {
        return Err(Error::Domain("slope r must be nonzero".into()));
    }
    let r_abs = r.unsigned_abs();
    if !factorize(r_abs)?.is_squarefree() {
        return Err(Error::Domain(format!("slope r = {r} must be squarefree")));
    }
    let r2 = r_abs * r_abs;
    let divisors = factorize(r2)?.divisors();
    let mut sum = Rational::ZERO;
    for &rho in &divisors {
        let kappa = kappa_value(rho)?;
        if kappa.is_zero() {
            continue;
        }
        for &sigma in &divisors {
            if r2 % (rho * sigma) != 0 {
                continue;
            }
            let m = mu(sigma)?;
            if m == 0 {
                continue;
            }
            sum = sum + kappa * Rational::new(m, (rho * sigma) as i64);
        }
    }
    Ok(sum)
}

/// sum_{d <= cutoff, gcd(d, qr) = 1} h(d)/d^4; the discarded tail is below
/// 3.1/cutoff^3.
fn h_quartic_sum(q: u64, r: u64, cutoff: u64) -> Result<f64> {
    let seg = crate::sieve::sieve_squarefree(1, cutoff + 1)?;
    let mut sum = 0.0;
    for d in seg.ones() {
        if gcd_u64(d, q) != 1 || gcd_u64(d, r) != 1 {
            continue;
        }
        let h = h_f64_from_primes(factorize(d)?.factors().iter().map(|&(p, _)| p));
        let d = d as f64;
        sum += h / (d * d * d * d);
    }
    Ok(sum)
}

/// (lambda(q, r), Lambda(q, r)).
///
/// lambda is the kappa/mu divisor sum times sum_{(d,qr)=1} h(d)/d^4;
/// Lambda is the closed form (6/pi^2)^2 (1 + 1/(q^2(q^2-2)))^-1, which is
/// independent of r.
pub fn lambda_factors(q: u64, r: i64) -> Result<(f64, f64)> {
    if !is_prime_u64(q) {
        return Err(Error::Domain(format!("modulus {q} must be prime")));
    }
    if r == 0 || gcd_i64(q as i64, r) != 1 {
        return Err(Error::Domain(format!(
            "slope r = {r} must be nonzero and coprime to q = {q}"
        )));
    }
    let lambda = kappa_mu_divisor_sum(r)?.to_f64() * h_quartic_sum(q, r.unsigned_abs(), 10_000)?;
    let q2 = q as f64 * q as f64;
    let big_lambda = (6.0 / (PI * PI)).powi(2) / (1.0 + 1.0 / (q2 * (q2 - 2.0)));
    Ok((lambda, big_lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_examples() {
        assert_eq!(h_value(2).unwrap(), Rational::from(2));
        assert_eq!(h_value(4).unwrap(), Rational::ZERO);
        assert_eq!(h_value(6).unwrap(), Rational::new(18, 7));
        assert_eq!(h_value(1).unwrap(), Rational::ONE);
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_value(1).unwrap(), Rational::ONE);
        assert_eq!(beta_value(2).unwrap(), Rational::ONE);
        assert_eq!(beta_value(8).unwrap(), Rational::ZERO);
        assert_eq!(beta_value(4).unwrap(), Rational::from(-2));
    }

    #[test]
    fn beta_convolution_against_table() {
        // Independent oracle: accumulate beta through the defining identity
        // h(d) = sum_{m | d} beta(m) instead of the per-prime table.
        let n = 600u64;
        let mut beta_table = vec![Rational::ZERO; (n + 1) as usize];
        for d in 1..=n {
            let mut partial = Rational::ZERO;
            for m in 1..d {
                if d % m == 0 {
                    partial = partial + beta_table[m as usize];
                }
            }
            beta_table[d as usize] = h_value(d).unwrap() - partial;
        }
        for m in 1..=n {
            assert_eq!(beta_value(m).unwrap(), beta_table[m as usize], "m = {m}");
        }
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_value(2).unwrap(), Rational::new(1, 3));
        assert_eq!(kappa_value(4).unwrap(), Rational::new(2, 3));
        assert_eq!(kappa_value(6).unwrap(), Rational::new(5, 24));
        assert_eq!(kappa_value(8).unwrap(), Rational::ZERO);
        assert_eq!(kappa_value(1).unwrap(), Rational::ONE);
    }

    #[test]
    fn u_p_examples() {
        assert_eq!(u_p(3, 5, 1).unwrap(), 2);
        assert_eq!(u_p(2, 4, 2).unwrap(), 2);
        assert_eq!(u_p(2, 2, 2).unwrap(), 3);
        assert!(u_p(4, 5, 1).is_err());
        assert!(u_p(3, 0, 1).is_err());
        assert!(u_p(3, 1, 4).is_err());
    }

    #[test]
    fn u_p_bruteforce_examples() {
        assert_eq!(u_p_bruteforce(3, 5, 1).unwrap(), 2);
        assert_eq!(u_p_bruteforce(2, 4, 2).unwrap(), 2);
        assert_eq!(u_p_bruteforce(5, 1, 1).unwrap(), 2);
        assert!(u_p_bruteforce(1009, 1, 1).is_err());
    }

    #[test]
    fn u_p_matches_bruteforce_spot() {
        for p in [2u64, 3, 5, 7, 11, 13] {
            for ell in [-9i64, -4, -2, -1, 1, 2, 3, 4, 8, 9, 12, 18] {
                for r in [-6i64, -2, -1, 1, 2, 3, 5, 6, 7, 10] {
                    assert_eq!(
                        u_p(p, ell, r).unwrap(),
                        u_p_bruteforce(p, ell, r).unwrap(),
                        "p = {p}, ell = {ell}, r = {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn c2_value() {
        assert!((c2() - 0.3226340989).abs() < 1e-9);
        assert!(c2_constant(1e-10).is_ok());
        assert!(c2_constant(1e-2).is_err());
        assert_eq!(c2_partial_product(2), 0.5);
    }

    #[test]
    fn c2_partial_products_decrease() {
        let mut prev = 1.0;
        for limit in [2u64, 3, 10, 100, 1000] {
            let v = c2_partial_product(limit);
            assert!(v < prev);
            prev = v;
        }
        assert!(c2() < prev);
    }

    #[test]
    fn f_density_examples() {
        let f11 = f_density(1, 1).unwrap();
        assert_eq!(f11.rational_part, Rational::ONE);
        assert!((f11.approx - c2()).abs() < 1e-15);

        let f41 = f_density(4, 1).unwrap();
        assert_eq!(f41.rational_part, Rational::new(3, 2));

        let f22 = f_density(2, 2).unwrap();
        assert_eq!(f22.rational_part, Rational::new(1, 2));
        assert!((f22.approx - 0.5 * c2()).abs() < 1e-15);

        assert!(f_density(0, 1).is_err());
        assert!(f_density(1, 0).is_err());
    }

    #[test]
    fn cq_examples() {
        assert!((cq_constant(5).unwrap() - 150.0 / (24.0 * PI * PI)).abs() < 1e-15);
        assert!((cq_constant(5).unwrap() - 0.633257).abs() < 1e-6);
        assert!(cq_constant(1).is_err());
    }

    #[test]
    fn kappa_mu_sum_for_two() {
        assert_eq!(kappa_mu_divisor_sum(2).unwrap(), Rational::new(3, 4));
        assert_eq!(kappa_mu_divisor_sum(1).unwrap(), Rational::ONE);
    }

    #[test]
    fn lambda_closed_form() {
        let (_, big) = lambda_factors(5, 2).unwrap();
        assert!((big - 0.368934).abs() < 1e-6);
        // Independent of r.
        let (_, big_other) = lambda_factors(5, -3).unwrap();
        assert_eq!(big, big_other);
        assert!(lambda_factors(5, 10).is_err()); // q | r
        assert!(lambda_factors(10, 3).is_err()); // q not prime
    }

    #[test]
    fn lambda_consistency() {
        // Lambda must equal C2 * prod_{p|r} (p^2-1)/(p^2-2) * lambda.
        for (q, r) in [(101u64, -1i64), (101, 2), (997, 6)] {
            let (lambda, big) = lambda_factors(q, r).unwrap();
            let mut front = c2();
            for &(p, _) in factorize(r.unsigned_abs()).unwrap().factors() {
                let p2 = (p * p) as f64;
                front *= (p2 - 1.0) / (p2 - 2.0);
            }
            let assembled = front * lambda;
            assert!(
                (assembled - big).abs() <= 1e-8 * big,
                "q = {q}, r = {r}: {assembled} vs {big}"
            );
        }
    }
}
