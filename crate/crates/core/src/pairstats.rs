//! Correlated squarefree-pair counting and the completed shift sum.
//!
//! `I(X, ell, r)` is the set of real u with both u and r*u + ell in the open
//! interval (0, X); `pair_count` sums mu^2(n) mu^2(rn + ell) over the
//! integers of that window, and `big_sigma` evaluates the exact finite sum
//! over one residue class of shifts of density times window length.

use rayon::prelude::*;

use crate::arith::{factorize, gcd_i64, is_prime_u64};
use crate::error::{Error, Result};
use crate::localdensity::{f_density, lambda_factors};
use crate::numeric::KahanSum;
use crate::sieve::SegmentStore;

/// Desk-scale ceiling for window scans.
pub const PAIR_COUNT_MAX_X: f64 = 1e8;
/// Desk-scale ceiling for the completed shift sum.
pub const BIG_SIGMA_MAX_X: f64 = 1e7;

/// One window: the shift, the slope and the length of I(X, ell, r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairWindow {
    pub x: f64,
    pub ell: i64,
    pub r: i64,
    pub length: f64,
}

impl PairWindow {
    pub fn new(x: f64, ell: i64, r: i64) -> Result<PairWindow> {
        Ok(PairWindow {
            x,
            ell,
            r,
            length: interval_length(x, ell, r)?,
        })
    }
}

/// Lebesgue length of I(X, ell, r).
pub fn interval_length(x: f64, ell: i64, r: i64) -> Result<f64> {
    if r == 0 {
        return Err(Error::Domain("slope r must be nonzero".into()));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("window bound X = {x} must be positive")));
    }
    let (ell, r) = (ell as f64, r as f64);
    let len = if r > 0.0 {
        (x.min((x - ell) / r) - (0.0f64).max(-ell / r)).max(0.0)
    } else {
        (x.min(-ell / r) - (0.0f64).max((x - ell) / r)).max(0.0)
    };
    Ok(len)
}

#[inline]
fn floor_div(a: i128, b: i128) -> i128 {
    a.div_euclid(b)
}

#[inline]
fn ceil_div(a: i128, b: i128) -> i128 {
    -((-a).div_euclid(b))
}

/// Largest integer strictly below x.
fn strict_upper(x: f64) -> i64 {
    if x.fract() == 0.0 {
        x as i64 - 1
    } else {
        x.floor() as i64
    }
}

/// Integer endpoints (first, last) of the open window, if any integer lies
/// inside. For integers the strict conditions 0 < n < X and 0 < rn + ell < X
/// reduce to 1 <= n <= n_max and 1 <= rn + ell <= n_max, solved exactly.
fn integer_window(x: f64, ell: i64, r: i64) -> Option<(i64, i64)> {
    let n_max = strict_upper(x);
    if n_max < 1 {
        return None;
    }
    let (mut first, mut last) = (1i64, n_max);
    let (ri, ei, ni) = (r as i128, ell as i128, n_max as i128);
    if r > 0 {
        first = first.max(ceil_div(1 - ei, ri) as i64);
        last = last.min(floor_div(ni - ei, ri) as i64);
    } else {
        let m = -ri;
        first = first.max(ceil_div(ei - ni, m) as i64);
        last = last.min(floor_div(ei - 1, m) as i64);
    }
    (first <= last).then_some((first, last))
}

/// S(ell, r): number of n in the window with both n and r*n + ell squarefree.
pub fn pair_count(store: &SegmentStore, x: f64, ell: i64, r: i64) -> Result<u64> {
    if r == 0 {
        return Err(Error::Domain("slope r must be nonzero".into()));
    }
    if !(x > 0.0) || x > PAIR_COUNT_MAX_X {
        return Err(Error::Domain(format!(
            "window bound X = {x} outside (0, {PAIR_COUNT_MAX_X}]"
        )));
    }
    let Some((first, last)) = integer_window(x, ell, r) else {
        return Ok(0);
    };
    // Both n and r*n + ell lie in (0, X) by construction, so they fit i64
    // comfortably at desk scale; still check the affine image.
    let img = |n: i64| -> Result<u64> {
        let v = (r as i128) * (n as i128) + ell as i128;
        if v <= 0 || v >= u64::MAX as i128 {
            return Err(Error::Capacity(format!("affine image {v} out of range")));
        }
        Ok(v as u64)
    };
    let (img_first, img_last) = (img(first)?, img(last)?);
    let (img_lo, img_hi) = if r > 0 {
        (img_first, img_last + 1)
    } else {
        (img_last, img_first + 1)
    };
    let base = store.bits(first as u64, last as u64 + 1)?;
    let image = store.bits(img_lo, img_hi)?;
    let mut count = 0u64;
    for n in base.ones() {
        let v = (r as i64 * n as i64 + ell) as u64;
        if image.contains(v) {
            count += 1;
        }
    }
    Ok(count)
}

/// One row of a density check: measured count against f * |I|.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDensityRow {
    pub ell: i64,
    pub r: i64,
    pub count: u64,
    pub density: f64,
    pub interval: f64,
    pub main: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairDensityReport {
    pub rows: Vec<PairDensityRow>,
    pub max_abs_dev: f64,
    pub mean_abs_dev: f64,
    pub max_rel_dev: f64,
    pub mean_rel_dev: f64,
}

/// Measure S(ell, r) against its predicted main term for each shift.
/// Purely observational; nothing is asserted here.
pub fn verify_pair_density(
    store: &SegmentStore,
    x: f64,
    r: i64,
    shifts: &[i64],
) -> Result<PairDensityReport> {
    let mut report = PairDensityReport::default();
    for &ell in shifts {
        let count = pair_count(store, x, ell, r)?;
        let density = f_density(ell, r)?.approx;
        let interval = interval_length(x, ell, r)?;
        let main = density * interval;
        let abs_dev = (count as f64 - main).abs();
        let rel_dev = if main > 0.0 { abs_dev / main } else { f64::NAN };
        report.rows.push(PairDensityRow {
            ell,
            r,
            count,
            density,
            interval,
            main,
            abs_dev,
            rel_dev,
        });
    }
    let n = report.rows.len().max(1) as f64;
    report.max_abs_dev = report.rows.iter().map(|r| r.abs_dev).fold(0.0, f64::max);
    report.mean_abs_dev = report.rows.iter().map(|r| r.abs_dev).sum::<f64>() / n;
    let finite: Vec<f64> = report
        .rows
        .iter()
        .map(|r| r.rel_dev)
        .filter(|d| d.is_finite())
        .collect();
    report.max_rel_dev = finite.iter().copied().fold(0.0, f64::max);
    report.mean_rel_dev = finite.iter().sum::<f64>() / (finite.len().max(1) as f64);
    Ok(report)
}

/// The completed sum over shifts in one residue class:
/// sum_{ell = s mod q} f(ell, r) |I(X, ell, r)|.
///
/// Only finitely many shifts have a nonzero window (|ell| <= (|r|+1) X);
/// each density is evaluated exactly through the factorization of |ell|.
pub fn big_sigma(x: f64, q: u64, r: i64, s: i64) -> Result<f64> {
    if !is_prime_u64(q) {
        return Err(Error::Domain(format!("modulus {q} must be prime")));
    }
    if r == 0 || r.unsigned_abs() > 10 {
        return Err(Error::Domain(format!("slope r = {r} outside [-10, 10] \\ {{0}}")));
    }
    if !factorize(r.unsigned_abs())?.is_squarefree() {
        return Err(Error::Domain(format!("slope r = {r} must be squarefree")));
    }
    if gcd_i64(q as i64, r) != 1 || s.rem_euclid(q as i64) == 0 {
        return Err(Error::Domain(format!(
            "q = {q} must divide neither r = {r} nor s = {s}"
        )));
    }
    if !(x > 0.0) || x > BIG_SIGMA_MAX_X {
        return Err(Error::Domain(format!(
            "window bound X = {x} outside (0, {BIG_SIGMA_MAX_X}]"
        )));
    }
    let envelope = ((r.unsigned_abs() + 1) as f64 * x).ceil() as i64;
    let qi = q as i64;
    // First shift >= -envelope congruent to s mod q.
    let first = -envelope + (s - (-envelope)).rem_euclid(qi);
    let count = ((envelope - first) / qi + 1).max(0) as u64;
    let partials: Vec<KahanSum> = (0..count)
        .collect::<Vec<_>>()
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = KahanSum::new();
            for &k in chunk {
                let ell = first + k as i64 * qi;
                if ell == 0 {
                    continue;
                }
                let interval = interval_length(x, ell, r).expect("validated inputs");
                if interval <= 0.0 {
                    continue;
                }
                let density = f_density(ell, r).expect("validated inputs").approx;
                acc.add(density * interval);
            }
            acc
        })
        .collect();
    let mut total = KahanSum::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.value())
}

/// Main-term prediction Lambda(q, r) X^2 / q for `big_sigma`.
pub fn big_sigma_main_term(x: f64, q: u64, r: i64) -> Result<f64> {
    let (_, big_lambda) = lambda_factors(q, r)?;
    Ok(big_lambda * x * x / q as f64)
}
