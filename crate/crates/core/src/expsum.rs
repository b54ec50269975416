//! Inverse-square exponential sums and the Bernoulli-difference sums A, B, G.
//!
//! Every infinite sum here is truncated under an explicit analytic budget:
//! the A and B tails come from |B1| <= 1/2 (so a single difference is at
//! most Z^2/(2 n^2)) together with h <= 1/C2, and the G tail over the
//! convolution index m comes from an upper bound on sum_{m>M} |beta(m)|/m
//! obtained as a certified Euler-product total minus the exact partial sum.
//! Each returned [`TruncationBudget`] is a bound on the discarded mass, and
//! doubling any cutoff moves the value by at most that bound.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::arith::{
    bernoulli2, factorize, gcd_u64, is_prime_u64, mod_inverse, mu, mul_mod, primes_upto,
};
use crate::error::{Error, Result};
use crate::localdensity::{beta_value, c2, inv_square_prime_tail, kappa_value};
use crate::numeric::KahanSum;

/// Ceiling for incomplete-sum lengths and truncation cutoffs.
pub const CUTOFF_MAX: u64 = 1_000_000_000;
/// Ceiling for the convolution cutoff in the G sum.
pub const M_CUTOFF_MAX: u64 = 1_000_000;
/// One modular inversion per block of this many residues.
const INVERSION_BLOCK: usize = 4096;

/// Real/imaginary pair for exponential sums.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl ComplexValue {
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(&self) -> ComplexValue {
        ComplexValue {
            re: self.re,
            im: -self.im,
        }
    }
}

/// A truncation decision: requested tolerance, chosen cutoff, and the
/// analytic bound on everything discarded (always <= tolerance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBudget {
    pub tolerance: f64,
    pub cutoff: u64,
    pub tail_bound: f64,
}

/// Batched modular inverses: one extended-gcd inversion per call via the
/// prefix-product walk. Every input must be coprime to q.
pub(crate) fn batch_inverses(values: &[u64], q: u64) -> Result<Vec<u64>> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let mut prefix = Vec::with_capacity(values.len());
    let mut acc = 1u64;
    for &v in values {
        acc = mul_mod(acc, v % q, q);
        prefix.push(acc);
    }
    let mut inv_acc = mod_inverse(acc as i64, q)?;
    let mut out = vec![0u64; values.len()];
    for i in (0..values.len()).rev() {
        let before = if i == 0 { 1 } else { prefix[i - 1] };
        out[i] = mul_mod(inv_acc, before, q);
        inv_acc = mul_mod(inv_acc, values[i] % q, q);
    }
    Ok(out)
}

fn check_residue(a: i64, q: u64) -> Result<u64> {
    if q < 2 {
        return Err(Error::Domain(format!("modulus {q} must be at least 2")));
    }
    let a_red = a.rem_euclid(q as i64) as u64;
    if gcd_u64(a_red, q) != 1 {
        return Err(Error::Domain(format!("gcd({a}, {q}) > 1")));
    }
    Ok(a_red)
}

#[inline]
fn unit_phase(num: u64, q: u64) -> (f64, f64) {
    // e(num/q) from the reduced fraction; no accumulated angles.
    let (s, c) = (2.0 * PI * (num as f64 / q as f64)).sin_cos();
    (c, s)
}

/// sum_{n <= N, (n,q)=1} e(a nbar^2 / q).
pub fn incomplete_invsq_sum(n_max: u64, q: u64, a: i64) -> Result<ComplexValue> {
    let a_red = check_residue(a, q)?;
    if n_max > CUTOFF_MAX {
        return Err(Error::Capacity(format!("N = {n_max} exceeds {CUTOFF_MAX}")));
    }
    let starts: Vec<u64> = (1..=n_max).step_by(INVERSION_BLOCK).collect();
    let partials: Vec<(KahanSum, KahanSum)> = starts
        .into_par_iter()
        .map(|start| {
            let end = (start + INVERSION_BLOCK as u64 - 1).min(n_max);
            let ns: Vec<u64> = (start..=end).filter(|&n| gcd_u64(n % q, q) == 1).collect();
            let invs = batch_inverses(&ns, q).expect("inputs filtered coprime");
            let mut re = KahanSum::new();
            let mut im = KahanSum::new();
            for inv in invs {
                let num = mul_mod(a_red, mul_mod(inv, inv, q), q);
                let (c, s) = unit_phase(num, q);
                re.add(c);
                im.add(s);
            }
            (re, im)
        })
        .collect();
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for (r, i) in &partials {
        re.merge(r);
        im.merge(i);
    }
    Ok(ComplexValue {
        re: re.value(),
        im: im.value(),
    })
}

/// The complete sum over all invertible residues.
pub fn complete_invsq_sum(q: u64, a: i64) -> Result<ComplexValue> {
    incomplete_invsq_sum(q - 1, q, a)
}

// --- A(Y; q, a) -------------------------------------------------------------

/// A-sum truncated at an explicit cutoff:
/// sum_{n <= cutoff, (n,q)=1} B2(Y^2/n^2 + a nbar^2/q) - B2(a nbar^2/q).
pub fn a_sum_with_cutoff(y: f64, q: u64, a: i64, cutoff: u64) -> Result<f64> {
    let a_red = check_residue(a, q)?;
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("Y = {y} must be positive")));
    }
    if cutoff > CUTOFF_MAX {
        return Err(Error::Capacity(format!(
            "cutoff {cutoff} exceeds {CUTOFF_MAX}"
        )));
    }
    let y2 = y * y;
    let starts: Vec<u64> = (1..=cutoff).step_by(INVERSION_BLOCK).collect();
    let partials: Vec<KahanSum> = starts
        .into_par_iter()
        .map(|start| {
            let end = (start + INVERSION_BLOCK as u64 - 1).min(cutoff);
            let ns: Vec<u64> = (start..=end).filter(|&n| gcd_u64(n % q, q) == 1).collect();
            let invs = batch_inverses(&ns, q).expect("inputs filtered coprime");
            let mut acc = KahanSum::new();
            for (&n, inv) in ns.iter().zip(invs) {
                let num = mul_mod(a_red, mul_mod(inv, inv, q), q);
                let x = num as f64 / q as f64;
                let nf = n as f64;
                acc.add(bernoulli2(y2 / (nf * nf) + x) - bernoulli2(x));
            }
            acc
        })
        .collect();
    let mut acc = KahanSum::new();
    for p in &partials {
        acc.merge(p);
    }
    Ok(acc.value())
}

/// A(Y; q, a) under a tolerance: the tail beyond the chosen cutoff T is at
/// most Y^2/(2T) since each discarded term is bounded by Y^2/(2 n^2).
pub fn a_sum(y: f64, q: u64, a: i64, tolerance: f64) -> Result<(f64, TruncationBudget)> {
    if !(y > 0.0) || y > 1e6 {
        return Err(Error::Domain(format!("Y = {y} outside (0, 1e6]")));
    }
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(Error::Domain(format!("tolerance {tolerance} must be positive")));
    }
    let cutoff_f = (y * y / (2.0 * tolerance)).ceil();
    if cutoff_f > CUTOFF_MAX as f64 {
        return Err(Error::Capacity(format!(
            "tolerance {tolerance} needs cutoff {cutoff_f} beyond {CUTOFF_MAX}"
        )));
    }
    let cutoff = (cutoff_f as u64).max(1);
    let value = a_sum_with_cutoff(y, q, a, cutoff)?;
    Ok((
        value,
        TruncationBudget {
            tolerance,
            cutoff,
            tail_bound: y * y / (2.0 * cutoff as f64),
        },
    ))
}

// --- B(D; q, a; r) ----------------------------------------------------------

/// h(d) for every d in [lo, hi): zero at non-squarefree d, else
/// prod p^2/(p^2-2). Computed by a segmented remainder walk.
fn h_block(lo: u64, hi: u64, primes: &[u64]) -> Vec<f64> {
    let len = (hi - lo) as usize;
    let mut rem: Vec<u64> = (lo..hi).collect();
    let mut h: Vec<f64> = vec![1.0; len];
    for &p in primes {
        if p * p >= hi {
            break;
        }
        let mut m = p.max(lo.div_ceil(p) * p);
        while m < hi {
            let i = (m - lo) as usize;
            let mut e = 0;
            while rem[i] % p == 0 {
                rem[i] /= p;
                e += 1;
            }
            if e >= 2 {
                h[i] = 0.0;
            } else {
                let p2 = (p * p) as f64;
                h[i] *= p2 / (p2 - 2.0);
            }
            m += p;
        }
    }
    for i in 0..len {
        if h[i] != 0.0 && rem[i] > 1 {
            let p2 = rem[i] as f64 * rem[i] as f64;
            h[i] *= p2 / (p2 - 2.0);
        }
    }
    if lo == 0 {
        h[0] = 0.0;
    }
    h
}

fn check_slope(q: u64, r: i64) -> Result<u64> {
    if r == 0 {
        return Err(Error::Domain("slope r must be nonzero".into()));
    }
    let r_abs = r.unsigned_abs();
    if !factorize(r_abs)?.is_squarefree() {
        return Err(Error::Domain(format!("slope r = {r} must be squarefree")));
    }
    if gcd_u64(r_abs % q, q) != 1 {
        return Err(Error::Domain(format!("q = {q} must not divide r = {r}")));
    }
    Ok(r_abs)
}

/// B-sum truncated at an explicit cutoff:
/// sum_{d <= cutoff, (d, qr)=1} h(d) [B2(D^2/d^2 + a dbar^2/q) - B2(a dbar^2/q)].
pub fn b_sum_with_cutoff(d_scale: f64, q: u64, a: i64, r: i64, cutoff: u64) -> Result<f64> {
    let a_red = check_residue(a, q)?;
    let r_abs = check_slope(q, r)?;
    if !(d_scale > 0.0) || !d_scale.is_finite() {
        return Err(Error::Domain(format!("D = {d_scale} must be positive")));
    }
    if cutoff > CUTOFF_MAX {
        return Err(Error::Capacity(format!(
            "cutoff {cutoff} exceeds {CUTOFF_MAX}"
        )));
    }
    let primes = primes_upto(cutoff.isqrt());
    let d2 = d_scale * d_scale;
    let block = 1u64 << 16;
    let starts: Vec<u64> = (1..=cutoff).step_by(block as usize).collect();
    let partials: Vec<KahanSum> = starts
        .into_par_iter()
        .map(|start| {
            let end = (start + block).min(cutoff + 1);
            let h = h_block(start, end, &primes);
            let ds: Vec<u64> = (start..end)
                .filter(|&d| {
                    h[(d - start) as usize] != 0.0
                        && gcd_u64(d % q, q) == 1
                        && gcd_u64(d, r_abs) == 1
                })
                .collect();
            let invs = batch_inverses(&ds, q).expect("inputs filtered coprime");
            let mut acc = KahanSum::new();
            for (&d, inv) in ds.iter().zip(invs) {
                let num = mul_mod(a_red, mul_mod(inv, inv, q), q);
                let x = num as f64 / q as f64;
                let df = d as f64;
                let delta = bernoulli2(d2 / (df * df) + x) - bernoulli2(x);
                acc.add(h[(d - start) as usize] * delta);
            }
            acc
        })
        .collect();
    let mut acc = KahanSum::new();
    for p in &partials {
        acc.merge(p);
    }
    Ok(acc.value())
}

/// B(D; q, a; r) under a tolerance; tail bound (1/C2) D^2 / (2T) from
/// h <= 1/C2.
pub fn b_sum(d_scale: f64, q: u64, a: i64, r: i64, tolerance: f64) -> Result<(f64, TruncationBudget)> {
    if !(d_scale > 0.0) || d_scale > 1e6 {
        return Err(Error::Domain(format!("D = {d_scale} outside (0, 1e6]")));
    }
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(Error::Domain(format!("tolerance {tolerance} must be positive")));
    }
    let cutoff_f = (d_scale * d_scale / (2.0 * c2() * tolerance)).ceil();
    if cutoff_f > CUTOFF_MAX as f64 {
        return Err(Error::Capacity(format!(
            "tolerance {tolerance} needs cutoff {cutoff_f} beyond {CUTOFF_MAX}"
        )));
    }
    let cutoff = (cutoff_f as u64).max(1);
    let value = b_sum_with_cutoff(d_scale, q, a, r, cutoff)?;
    Ok((
        value,
        TruncationBudget {
            tolerance,
            cutoff,
            tail_bound: d_scale * d_scale / (2.0 * c2() * cutoff as f64),
        },
    ))
}

// --- G(Y; q, s; r) ----------------------------------------------------------

/// Certified upper bound for sum_m |beta(m)| / m: Euler product over
/// p <= 10^5 times a padded tail factor.
fn beta_abs_total_upper() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        const P: u64 = 100_000;
        let primes = primes_upto(P);
        let mut product = 1.0;
        for &p in &primes {
            let pf = p as f64;
            let p2 = pf * pf;
            product *= 1.0 + 2.0 / (pf * (p2 - 2.0)) + 1.0 / (p2 - 2.0);
        }
        // log of the tail factor is below sum_{p>P} (1/p^2 + 2.001/p^3).
        let tail = inv_square_prime_tail(&primes) + 1e-12 + 1.001 / (P as f64 * P as f64);
        product * tail.exp()
    })
}

/// Certified upper bound for sum_m |beta(m)| / m^{3/2}.
fn beta_abs_total_15_upper() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        const P: u64 = 100_000;
        let mut product = 1.0;
        for p in primes_upto(P) {
            let pf = p as f64;
            let p2 = pf * pf;
            product *= 1.0 + 2.0 / (pf.powf(1.5) * (p2 - 2.0)) + 1.0 / (pf * (p2 - 2.0));
        }
        product * (1.0 / (P as f64 * P as f64)).exp()
    })
}

/// Certified upper bound for sum_m |beta(m)| / m^2.
fn beta_abs_total_2_upper() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        const P: u64 = 100_000;
        let mut product = 1.0;
        for p in primes_upto(P) {
            let pf = p as f64;
            let p2 = pf * pf;
            product *= 1.0 + 2.0 / (p2 * (p2 - 2.0)) + 1.0 / (p2 * (p2 - 2.0));
        }
        product * (1.0 / (P as f64 * P as f64 * P as f64)).exp()
    })
}

/// beta(m) as floats for m = 1..=cutoff (index 0 unused).
fn beta_signed_upto(cutoff: u64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; cutoff as usize + 1];
    for m in 1..=cutoff {
        out[m as usize] = beta_value(m)?.to_f64();
    }
    Ok(out)
}

/// Weights of the outer (rho, sigma, tau) expansion for slope r.
struct SlopeExpansion {
    /// (rho*sigma*tau^2, kappa(rho) mu(sigma) mu(tau) rho sigma) pairs.
    terms: Vec<(u64, f64)>,
    /// sum |kappa mu mu| rho sigma.
    weight_v: f64,
    /// sum |kappa mu mu| sqrt(rho sigma) / tau; pairs with |A(Z)| <= 9Z/8.
    weight_w: f64,
    /// sum |kappa mu mu| / tau^2; pairs with |A(Z)| <= (pi^2/12) Z^2.
    weight_w2: f64,
}

fn slope_expansion(r: i64) -> Result<SlopeExpansion> {
    let r_abs = r.unsigned_abs();
    let r2 = r_abs * r_abs;
    let sq_divs = factorize(r2)?.divisors();
    let tau_divs = factorize(r_abs)?.divisors();
    let mut terms = Vec::new();
    let (mut weight_v, mut weight_w, mut weight_w2) = (0.0, 0.0, 0.0);
    for &rho in &sq_divs {
        let kappa = kappa_value(rho)?.to_f64();
        if kappa == 0.0 {
            continue;
        }
        for &sigma in &sq_divs {
            if r2 % (rho * sigma) != 0 {
                continue;
            }
            let mu_sigma = mu(sigma)?;
            if mu_sigma == 0 {
                continue;
            }
            for &tau in &tau_divs {
                let mu_tau = mu(tau)?;
                if mu_tau == 0 {
                    continue;
                }
                let rs = (rho * sigma) as f64;
                let coeff = kappa * mu_sigma as f64 * mu_tau as f64 * rs;
                terms.push((rho * sigma * tau * tau, coeff));
                weight_v += coeff.abs();
                weight_w += kappa.abs() * rs.sqrt() / tau as f64;
                weight_w2 += kappa.abs() / (tau * tau) as f64;
            }
        }
    }
    Ok(SlopeExpansion {
        terms,
        weight_v,
        weight_w,
        weight_w2,
    })
}

/// G evaluated at a fixed convolution cutoff M with the inner tolerance rule
/// tol(m) = inner_coeff / m^{3/2}. Returns the value and the actual inner
/// slack sum |weight| * inner_tail.
fn g_sum_fixed(
    y: f64,
    q: u64,
    s: i64,
    r: i64,
    m_cutoff: u64,
    inner_coeff: f64,
) -> Result<(f64, f64)> {
    if !is_prime_u64(q) {
        return Err(Error::Domain(format!("modulus {q} must be prime")));
    }
    let r_abs = check_slope(q, r)?;
    let s_red = check_residue(s, q)?;
    if m_cutoff > M_CUTOFF_MAX {
        return Err(Error::Capacity(format!(
            "convolution cutoff {m_cutoff} exceeds {M_CUTOFF_MAX}"
        )));
    }
    let expansion = slope_expansion(r)?;
    let beta = beta_signed_upto(m_cutoff)?;
    let mut value = KahanSum::new();
    let mut slack = KahanSum::new();
    for m in 1..=m_cutoff {
        if gcd_u64(m % q, q) != 1 || gcd_u64(m, r_abs) != 1 {
            continue;
        }
        let beta_m = beta[m as usize];
        if beta_m == 0.0 {
            continue;
        }
        let inner_tol = inner_coeff / (m as f64).powf(1.5);
        for &(rst2, coeff) in &expansion.terms {
            let denom = rst2 as f64 * (m as f64 * m as f64);
            let z = (y / denom).sqrt();
            let twisted_base = mul_mod(rst2 % q, mul_mod(m % q, m % q, q), q);
            let inv = mod_inverse(twisted_base as i64, q)?;
            let twisted = mul_mod(inv, s_red, q) as i64;
            let (a_val, budget) = a_sum(z, q, twisted, inner_tol)?;
            value.add(coeff * beta_m * a_val);
            slack.add((coeff * beta_m).abs() * budget.tail_bound);
        }
    }
    Ok((value.value(), slack.value()))
}

/// Exact prefix sums sum_{m<=M} |beta(m)|/m^s for s = 1, 3/2, 2.
fn beta_prefixes(m_cutoff: u64) -> Result<(f64, f64, f64)> {
    let mut p1 = KahanSum::new();
    let mut p15 = KahanSum::new();
    let mut p2 = KahanSum::new();
    for m in 1..=m_cutoff {
        let b = beta_value(m)?.to_f64().abs();
        if b != 0.0 {
            let mf = m as f64;
            p1.add(b / mf);
            p15.add(b / mf.powf(1.5));
            p2.add(b / (mf * mf));
        }
    }
    Ok((p1.value(), p15.value(), p2.value()))
}

/// G(Y; q, s; r): the (rho, sigma, tau, m) expansion of the h-weighted
/// Bernoulli-difference sum into inverse-twisted A-sums.
///
/// Discarding m > M costs at most the smaller of two bounds: the linear
/// |A(Z)| <= 9Z/8 gives (9/8) sqrt(Y) W sum_{m>M} |beta(m)|/m, and the
/// quadratic |A(Z)| <= (pi^2/12) Z^2 gives 0.8225 Y W2 sum_{m>M}
/// |beta(m)|/m^2; the beta tails are certified from Euler totals.
pub fn g_sum(y: f64, q: u64, s: i64, r: i64, tolerance: f64) -> Result<(f64, TruncationBudget)> {
    if !(y > 0.0) || y > 1e9 {
        return Err(Error::Domain(format!("Y = {y} outside (0, 1e9]")));
    }
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(Error::Domain(format!("tolerance {tolerance} must be positive")));
    }
    let expansion = slope_expansion(r)?;
    let inner_coeff = tolerance / (2.0 * expansion.weight_v * beta_abs_total_15_upper());
    // Find the smallest power-of-two cutoff whose certified m-tail fits in
    // half the tolerance.
    let mut m_cutoff = 16u64;
    let (m_tail_budget, tail15) = loop {
        let (p1, p15, p2) = beta_prefixes(m_cutoff)?;
        let tail1 = (beta_abs_total_upper() - p1).max(0.0);
        let tail15 = (beta_abs_total_15_upper() - p15).max(0.0);
        let tail2 = (beta_abs_total_2_upper() - p2).max(0.0);
        let linear = 1.125 * y.sqrt() * expansion.weight_w * tail1;
        let quadratic = 0.8225 * y * expansion.weight_w2 * tail2;
        let m_tail = linear.min(quadratic);
        if m_tail <= tolerance / 2.0 {
            break (m_tail, tail15);
        }
        m_cutoff *= 2;
        if m_cutoff > M_CUTOFF_MAX {
            return Err(Error::Capacity(format!(
                "tolerance {tolerance} needs convolution cutoff beyond {M_CUTOFF_MAX}"
            )));
        }
    };
    let (value, inner_slack) = g_sum_fixed(y, q, s, r, m_cutoff, inner_coeff)?;
    let tail_bound = m_tail_budget + inner_slack + expansion.weight_v * inner_coeff * tail15;
    Ok((
        value,
        TruncationBudget {
            tolerance,
            cutoff: m_cutoff,
            tail_bound,
        },
    ))
}

/// G at an explicit cutoff, sharing g_sum's inner tolerance rule; for
/// truncation-honesty checks.
pub fn g_sum_with_cutoff(
    y: f64,
    q: u64,
    s: i64,
    r: i64,
    m_cutoff: u64,
    tolerance: f64,
) -> Result<f64> {
    let expansion = slope_expansion(r)?;
    let inner_coeff = tolerance / (2.0 * expansion.weight_v * beta_abs_total_15_upper());
    Ok(g_sum_fixed(y, q, s, r, m_cutoff, inner_coeff)?.0)
}

// --- decay scan -------------------------------------------------------------

/// One sampled ratio |sum| / N at N = ceil(q^epsilon).
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub q: u64,
    pub epsilon: f64,
    pub n: u64,
    pub a: u64,
    pub abs_sum: f64,
    pub ratio: f64,
}

/// Measure cancellation of the incomplete sums at N = q^epsilon. Purely
/// observational: the bound being probed is qualitative at desk scale.
pub fn decay_scan(q_list: &[u64], exponents: &[f64], a_samples: usize) -> Result<Vec<DecayRow>> {
    if a_samples == 0 {
        return Err(Error::Domain("need at least one sample residue".into()));
    }
    let mut rows = Vec::new();
    for &q in q_list {
        if q > 10_000_000 {
            return Err(Error::Domain(format!("modulus {q} beyond desk scale 1e7")));
        }
        if !is_prime_u64(q) {
            return Err(Error::Domain(format!("modulus {q} must be prime")));
        }
        let mut residues: Vec<u64> = if a_samples == 1 || q <= 2 {
            vec![1]
        } else {
            (0..a_samples as u64)
                .map(|j| 1 + j * (q - 2) / (a_samples as u64 - 1))
                .collect()
        };
        residues.dedup();
        for &eps in exponents {
            if !(eps > 0.0) {
                return Err(Error::Domain(format!("exponent {eps} must be positive")));
            }
            let n = (q as f64).powf(eps).ceil().min(CUTOFF_MAX as f64) as u64;
            let n = n.max(1);
            for &a in &residues {
                let s = incomplete_invsq_sum(n, q, a as i64)?;
                let abs = s.abs();
                rows.push(DecayRow {
                    q,
                    epsilon: eps,
                    n,
                    a,
                    abs_sum: abs,
                    ratio: abs / n as f64,
                });
            }
        }
    }
    Ok(rows)
}

/// Partial Fourier expansion of B2: sum_{1<=h<=H} cos(2 pi h x) / (2 pi^2 h^2).
/// Cross-check only; the closed form is the production evaluator.
pub fn b2_fourier_partial(x: f64, harmonics: u32) -> f64 {
    let mut acc = KahanSum::new();
    for h in 1..=harmonics {
        let hf = h as f64;
        acc.add((2.0 * PI * hf * x).cos() / (2.0 * PI * PI * hf * hf));
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::bernoulli;

    #[test]
    fn batch_inverses_match_direct() {
        let q = 10_007u64;
        let ns: Vec<u64> = (1..500).filter(|&n| gcd_u64(n, q) == 1).collect();
        let invs = batch_inverses(&ns, q).unwrap();
        for (&n, &inv) in ns.iter().zip(&invs) {
            assert_eq!(inv, mod_inverse(n as i64, q).unwrap());
        }
    }

    #[test]
    fn incomplete_small_example() {
        // nbar^2 for n = 1..4 mod 5 is {1, 4, 4, 1}.
        let s = incomplete_invsq_sum(4, 5, 1).unwrap();
        let expected = 4.0 * (2.0 * PI / 5.0).cos();
        assert!((s.re - expected).abs() < 1e-12);
        assert!(s.im.abs() < 1e-12);
        assert!((s.abs() - 1.236068).abs() < 1e-6);
    }

    #[test]
    fn incomplete_rejects_bad_inputs() {
        assert!(incomplete_invsq_sum(10, 1, 1).is_err());
        assert!(incomplete_invsq_sum(10, 6, 3).is_err());
        assert!(incomplete_invsq_sum(CUTOFF_MAX + 1, 5, 1).is_err());
    }

    #[test]
    fn gauss_magnitude_small_odd_primes() {
        for q in primes_upto(300).into_iter().skip(1) {
            for a in [1i64, 2, (q as i64 - 1) / 2].into_iter().filter(|&a| a >= 1) {
                let s = complete_invsq_sum(q, a).unwrap();
                let g = ((s.re + 1.0).powi(2) + s.im.powi(2)).sqrt();
                let root = (q as f64).sqrt();
                assert!(
                    (g - root).abs() <= 1e-9 * root,
                    "q = {q}, a = {a}: |g| = {g}"
                );
            }
        }
    }

    #[test]
    fn conjugation_symmetry() {
        for (n, q, a) in [(100u64, 101u64, 7i64), (500, 1009, 13), (77, 83, 30)] {
            let s1 = incomplete_invsq_sum(n, q, a).unwrap();
            let s2 = incomplete_invsq_sum(n, q, q as i64 - a).unwrap();
            assert!((s1.re - s2.re).abs() < 1e-12);
            assert!((s1.im + s2.im).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_inequality_mod_two() {
        for n in [1u64, 5, 17, 256] {
            let s = incomplete_invsq_sum(n, 2, 1).unwrap();
            assert!(s.abs() <= n as f64 + 1e-12);
        }
    }

    #[test]
    fn a_sum_matches_independent_direct_evaluation() {
        // Direct route: per-n extended-gcd inverse, library B2, plain loop.
        let (y, q, a, cutoff) = (50.0f64, 101u64, 1i64, 1_000_000u64);
        let mut direct = 0.0f64;
        for n in 1..=cutoff {
            if n % q == 0 {
                continue;
            }
            let inv = mod_inverse(n as i64, q).unwrap();
            let x = (a as u64 * inv % q * inv % q) as f64 / q as f64;
            let nf = n as f64;
            direct += bernoulli(2, y * y / (nf * nf) + x).unwrap()
                - bernoulli(2, x).unwrap();
        }
        let batched = a_sum_with_cutoff(y, q, a, cutoff).unwrap();
        assert!(
            (batched - direct).abs() < 1e-6,
            "batched = {batched}, direct = {direct}"
        );
    }

    #[test]
    fn a_sum_budget_is_honest() {
        let (value, budget) = a_sum(40.0, 997, 5, 0.05).unwrap();
        let doubled = a_sum_with_cutoff(40.0, 997, 5, budget.cutoff * 2).unwrap();
        assert!(budget.tail_bound <= budget.tolerance);
        assert!((doubled - value).abs() <= budget.tail_bound);
    }

    #[test]
    fn a_sum_respects_trivial_bound() {
        for (y, q, a) in [(3.0, 11u64, 2i64), (25.0, 101, 9), (160.0, 1009, 44)] {
            let (value, budget) = a_sum(y, q, a, 0.5).unwrap();
            assert!(value.abs() <= 2.0 * y + budget.tolerance);
        }
    }

    #[test]
    fn a_sum_infeasible_budget_errors() {
        assert!(matches!(
            a_sum(1000.0, 101, 1, 1e-10),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn h_block_matches_h_value() {
        let primes = primes_upto(40);
        let h = h_block(1, 1300, &primes);
        for d in 1..1300u64 {
            let expected = crate::localdensity::h_value(d).unwrap().to_f64();
            let got = h[(d - 1) as usize];
            assert!(
                (got - expected).abs() <= 1e-12 * expected.max(1.0),
                "d = {d}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn b_sum_excludes_divisors_of_r() {
        // r = 2 keeps only odd d; compare against a direct filtered sum.
        let (d_scale, q, a, cutoff) = (12.0f64, 101u64, 3i64, 40_000u64);
        let via_b = b_sum_with_cutoff(d_scale, q, a, 2, cutoff).unwrap();
        let mut direct = 0.0f64;
        for d in (1..=cutoff).step_by(2) {
            if d % q == 0 {
                continue;
            }
            let f = factorize(d).unwrap();
            if !f.is_squarefree() {
                continue;
            }
            let h = crate::localdensity::h_value(d).unwrap().to_f64();
            let inv = mod_inverse(d as i64, q).unwrap();
            let x = ((a as u64) * inv % q * inv % q) as f64 / q as f64;
            let df = d as f64;
            direct += h
                * (bernoulli(2, d_scale * d_scale / (df * df) + x).unwrap()
                    - bernoulli(2, x).unwrap());
        }
        assert!((via_b - direct).abs() < 1e-6);
    }

    #[test]
    fn b_sum_matches_bruteforce() {
        let (value, budget) = b_sum(30.0, 101, 1, -1, 1e-2).unwrap();
        let direct = b_sum_with_cutoff(30.0, 101, 1, -1, budget.cutoff).unwrap();
        assert!((value - direct).abs() < 1e-12);
        let doubled = b_sum_with_cutoff(30.0, 101, 1, -1, budget.cutoff * 2).unwrap();
        assert!((doubled - value).abs() <= budget.tail_bound);
    }

    #[test]
    fn g_sum_unit_slope_collapses_to_beta_series() {
        let (y, q, s, tol) = (150.0f64, 101u64, 7i64, 0.05f64);
        let (value, budget) = g_sum(y, q, s, 1, tol).unwrap();
        // Direct beta series with the same cutoffs and tolerance rule.
        let inner_coeff = tol / (2.0 * beta_abs_total_15_upper());
        let mut direct = 0.0f64;
        for m in 1..=budget.cutoff {
            if m % q == 0 {
                continue;
            }
            let b = beta_value(m).unwrap().to_f64();
            if b == 0.0 {
                continue;
            }
            let inv = mod_inverse((m * m % q) as i64, q).unwrap();
            let twisted = (inv as u64 * (s as u64) % q) as i64;
            let z = y.sqrt() / m as f64;
            let (a_val, _) = a_sum(z, q, twisted, inner_coeff / (m as f64).powf(1.5)).unwrap();
            direct += b * a_val;
        }
        assert!(
            (value - direct).abs() <= 1e-9 * direct.abs().max(1.0),
            "value = {value}, direct = {direct}"
        );
    }

    #[test]
    fn g_sum_budget_is_honest() {
        let (value, budget) = g_sum(80.0, 101, 3, -2, 0.5).unwrap();
        assert!(budget.tail_bound <= budget.tolerance);
        let doubled = g_sum_with_cutoff(80.0, 101, 3, -2, budget.cutoff * 2, 0.5).unwrap();
        assert!((doubled - value).abs() <= budget.tail_bound);
    }

    #[test]
    fn g_sum_sign_flip_matches_negated_twists() {
        // Negating s negates every twisted residue argument mod q.
        let (y, q, r, tol) = (60.0f64, 13u64, -1i64, 0.5f64);
        let expansion_inner = tol / (2.0 * beta_abs_total_15_upper());
        let (direct_neg, _) = g_sum(y, q, -3, r, tol).unwrap();
        let mut negated_args = 0.0f64;
        let (_, budget) = g_sum(y, q, 3, r, tol).unwrap();
        for m in 1..=budget.cutoff {
            if m % q == 0 {
                continue;
            }
            let b = beta_value(m).unwrap().to_f64();
            if b == 0.0 {
                continue;
            }
            let inv = mod_inverse((m * m % q) as i64, q).unwrap();
            let twisted = (inv as u64 * 3 % q) as i64;
            let z = y.sqrt() / m as f64;
            let (a_val, _) =
                a_sum(z, q, -twisted, expansion_inner / (m as f64).powf(1.5)).unwrap();
            negated_args += b * a_val;
        }
        assert!((direct_neg - negated_args).abs() <= 1e-9 * negated_args.abs().max(1.0));
    }

    #[test]
    fn decay_rows_are_bounded() {
        let rows = decay_scan(&[101, 997], &[0.5, 1.0], 3).unwrap();
        assert!(!rows.is_empty());
        for row in &rows {
            assert!(row.ratio <= 1.0 + 1e-12);
            assert!(row.n >= 1);
        }
    }

    #[test]
    fn decay_complete_sum_ratio_near_inverse_root() {
        // At N = q - 1 the ratio is about sqrt(q)/N.
        let q = 10_007u64;
        let s = complete_invsq_sum(q, 1).unwrap();
        let ratio = s.abs() / (q - 1) as f64;
        let predicted = (q as f64).sqrt() / (q - 1) as f64;
        assert!((ratio - predicted).abs() < 2.0 / (q - 1) as f64);
    }

    #[test]
    fn fourier_partial_sums_approach_closed_form() {
        for h in [8u32, 64, 256] {
            let bound = 1.0 / (2.0 * PI * PI * h as f64);
            let mut sup = 0.0f64;
            for i in 0..1000 {
                let x = i as f64 / 1000.0;
                let err = (b2_fourier_partial(x, h) - bernoulli(2, x).unwrap()).abs();
                sup = sup.max(err);
            }
            assert!(sup <= bound, "H = {h}: sup {sup} > bound {bound}");
        }
    }
}

