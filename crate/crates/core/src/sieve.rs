//! Segmented squarefree and Moebius sieves plus the segment cache.
//!
//! A [`SqfreeSegment`] is the crate's sieve currency: one packed bit per
//! integer of a half-open range, set when the integer is squarefree. The
//! squarefree sieve only crosses off multiples of prime squares; it never
//! counts factors.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::arith::primes_upto;
use crate::error::{Error, Result};

/// Hard ceiling for sieve coordinates.
pub const SIEVE_MAX_HI: u64 = 1_000_000_000_000;
/// Hard ceiling for a single segment span.
pub const SIEVE_MAX_SPAN: u64 = 1 << 32;
/// Hard ceiling for `count_squarefree`.
pub const COUNT_MAX: u64 = 10_000_000_000;

const CACHE_MAGIC: &[u8; 4] = b"SQF1";
const CACHE_VERSION: u8 = 1;

/// Packed squarefree indicator over `[lo, hi)`.
///
/// Bit `i` of word `w` encodes index `lo + 64*w + i`; trailing bits are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqfreeSegment {
    lo: u64,
    hi: u64,
    words: Vec<u64>,
}

impl SqfreeSegment {
    fn blank(lo: u64, hi: u64) -> SqfreeSegment {
        let nwords = ((hi - lo) as usize).div_ceil(64);
        SqfreeSegment {
            lo,
            hi,
            words: vec![0u64; nwords],
        }
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn len(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    fn clear(&mut self, idx: u64) {
        self.words[(idx / 64) as usize] &= !(1u64 << (idx % 64));
    }

    /// Squarefree indicator for `n`; panics outside the range.
    #[inline]
    pub fn contains(&self, n: u64) -> bool {
        assert!(n >= self.lo && n < self.hi, "index {n} outside segment");
        let idx = n - self.lo;
        self.words[(idx / 64) as usize] >> (idx % 64) & 1 == 1
    }

    /// Number of set bits in the whole segment.
    pub fn popcount(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of set bits among indices in `[lo, hi) ∩ [self.lo, self.hi)`.
    pub fn popcount_range(&self, lo: u64, hi: u64) -> u64 {
        let lo = lo.max(self.lo);
        let hi = hi.min(self.hi);
        if lo >= hi {
            return 0;
        }
        let a = lo - self.lo;
        let b = hi - self.lo;
        let (wa, wb) = ((a / 64) as usize, ((b - 1) / 64) as usize);
        if wa == wb {
            let mask = mask_range(a % 64, (b - 1) % 64 + 1);
            return (self.words[wa] & mask).count_ones() as u64;
        }
        let mut count = (self.words[wa] & mask_range(a % 64, 64)).count_ones() as u64;
        for w in &self.words[wa + 1..wb] {
            count += w.count_ones() as u64;
        }
        count += (self.words[wb] & mask_range(0, (b - 1) % 64 + 1)).count_ones() as u64;
        count
    }

    /// Iterate the set members in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(move |(w, &word)| {
            let base = self.lo + 64 * w as u64;
            BitIter { word }.map(move |b| base + b as u64)
        })
    }

    /// Copy every overlapping bit of `src` into this segment.
    pub fn fill_from(&mut self, src: &SqfreeSegment) {
        let lo = self.lo.max(src.lo);
        let hi = self.hi.min(src.hi);
        if lo >= hi {
            return;
        }
        let total = hi - lo;
        let src_base = lo - src.lo;
        let dst_base = lo - self.lo;
        let mut t = 0u64;
        while t < total {
            let nbits = 64.min(total - t) as u32;
            let chunk = read_bits(&src.words, src_base + t, nbits);
            write_bits(&mut self.words, dst_base + t, nbits, chunk);
            t += nbits as u64;
        }
    }

    /// Serialize in the cache file layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(21 + 8 * self.words.len());
        out.extend_from_slice(CACHE_MAGIC);
        out.push(CACHE_VERSION);
        out.extend_from_slice(&self.lo.to_le_bytes());
        out.extend_from_slice(&self.hi.to_le_bytes());
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    /// Parse the cache file layout; `None` for anything malformed.
    pub fn from_bytes(bytes: &[u8]) -> Option<SqfreeSegment> {
        if bytes.len() < 21 || &bytes[0..4] != CACHE_MAGIC || bytes[4] != CACHE_VERSION {
            return None;
        }
        let lo = u64::from_le_bytes(bytes[5..13].try_into().ok()?);
        let hi = u64::from_le_bytes(bytes[13..21].try_into().ok()?);
        if hi <= lo || hi - lo > SIEVE_MAX_SPAN {
            return None;
        }
        let nwords = ((hi - lo) as usize).div_ceil(64);
        if bytes.len() != 21 + 8 * nwords {
            return None;
        }
        let words: Vec<u64> = bytes[21..]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let seg = SqfreeSegment { lo, hi, words };
        // Trailing bits beyond hi - lo must be zero.
        let tail = (hi - lo) % 64;
        if tail != 0 && seg.words[nwords - 1] & !mask_range(0, tail) != 0 {
            return None;
        }
        Some(seg)
    }
}

/// Bits `[a, b)` of a word, `0 <= a < b <= 64`.
#[inline]
fn mask_range(a: u64, b: u64) -> u64 {
    debug_assert!(a < b && b <= 64);
    let high = if b == 64 { !0u64 } else { (1u64 << b) - 1 };
    high & !((1u64 << a) - 1)
}

#[inline]
fn read_bits(words: &[u64], pos: u64, nbits: u32) -> u64 {
    let w = (pos / 64) as usize;
    let off = (pos % 64) as u32;
    let mut raw = words[w] >> off;
    if off > 0 && off + nbits > 64 {
        raw |= words[w + 1] << (64 - off);
    }
    if nbits == 64 {
        raw
    } else {
        raw & ((1u64 << nbits) - 1)
    }
}

#[inline]
fn write_bits(words: &mut [u64], pos: u64, nbits: u32, value: u64) {
    let w = (pos / 64) as usize;
    let off = (pos % 64) as u32;
    words[w] |= value << off;
    if off > 0 && off + nbits > 64 {
        words[w + 1] |= value >> (64 - off);
    }
}

struct BitIter {
    word: u64,
}

impl Iterator for BitIter {
    type Item = u32;
    #[inline]
    fn next(&mut self) -> Option<u32> {
        if self.word == 0 {
            return None;
        }
        let b = self.word.trailing_zeros();
        self.word &= self.word - 1;
        Some(b)
    }
}

fn validate_range(lo: u64, hi: u64) -> Result<()> {
    if lo < 1 || lo >= hi || hi > SIEVE_MAX_HI {
        return Err(Error::Domain(format!(
            "sieve range [{lo}, {hi}) outside [1, {SIEVE_MAX_HI}]"
        )));
    }
    if hi - lo > SIEVE_MAX_SPAN {
        return Err(Error::Capacity(format!(
            "sieve span {} exceeds 2^32",
            hi - lo
        )));
    }
    Ok(())
}

/// Squarefree indicator over `[lo, hi)` by crossing off multiples of p^2
/// for every prime with p^2 < hi.
pub fn sieve_squarefree(lo: u64, hi: u64) -> Result<SqfreeSegment> {
    validate_range(lo, hi)?;
    let primes = primes_upto((hi - 1).isqrt());
    Ok(sieve_squarefree_with_primes(lo, hi, &primes))
}

pub(crate) fn sieve_squarefree_with_primes(lo: u64, hi: u64, primes: &[u64]) -> SqfreeSegment {
    let mut seg = SqfreeSegment::blank(lo, hi);
    for w in seg.words.iter_mut() {
        *w = !0u64;
    }
    let tail = (hi - lo) % 64;
    if tail != 0 {
        let last = seg.words.len() - 1;
        seg.words[last] &= mask_range(0, tail);
    }
    for &p in primes {
        let p2 = p * p;
        if p2 >= hi {
            break;
        }
        let mut m = p2.max(lo.div_ceil(p2) * p2);
        while m < hi {
            seg.clear(m - lo);
            m += p2;
        }
    }
    seg
}

/// Moebius values over `[lo, hi)`.
pub fn sieve_mobius(lo: u64, hi: u64) -> Result<Vec<i8>> {
    validate_range(lo, hi)?;
    let len = (hi - lo) as usize;
    let mut rem: Vec<u64> = (lo..hi).collect();
    let mut mu: Vec<i8> = vec![1; len];
    for p in primes_upto((hi - 1).isqrt()) {
        let mut m = p.max(lo.div_ceil(p) * p);
        while m < hi {
            let i = (m - lo) as usize;
            let mut e = 0;
            while rem[i] % p == 0 {
                rem[i] /= p;
                e += 1;
            }
            if e >= 2 {
                mu[i] = 0;
            } else {
                mu[i] = -mu[i];
            }
            m += p;
        }
    }
    for i in 0..len {
        if mu[i] != 0 && rem[i] > 1 {
            mu[i] = -mu[i];
        }
    }
    if lo == 1 {
        mu[0] = 1;
    }
    Ok(mu)
}

/// Segment provider with optional on-disk persistence.
///
/// Arbitrary ranges are assembled from fixed, aligned blocks so repeated
/// queries over overlapping ranges reuse the same cache keys. Segments are
/// immutable once built and safe to share; distinct blocks sieve in parallel.
#[derive(Debug, Clone)]
pub struct SegmentStore {
    dir: Option<PathBuf>,
    segment_len: u64,
}

impl Default for SegmentStore {
    fn default() -> Self {
        SegmentStore {
            dir: None,
            segment_len: 1 << 22,
        }
    }
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl SegmentStore {
    pub fn new() -> SegmentStore {
        SegmentStore::default()
    }

    pub fn with_dir(dir: Option<PathBuf>) -> SegmentStore {
        SegmentStore {
            dir,
            segment_len: 1 << 22,
        }
    }

    /// Override the block length; rounded up to a multiple of 64.
    pub fn with_segment_len(mut self, len: u64) -> SegmentStore {
        self.segment_len = len.max(64).div_ceil(64) * 64;
        self
    }

    pub fn segment_len(&self) -> u64 {
        self.segment_len
    }

    /// Indices of the aligned blocks covering `[lo, hi)`.
    pub fn block_ids(&self, lo: u64, hi: u64) -> std::ops::Range<u64> {
        lo / self.segment_len..(hi - 1) / self.segment_len + 1
    }

    fn block_bounds(&self, k: u64) -> (u64, u64) {
        let lo = (k * self.segment_len).max(1);
        let hi = ((k + 1) * self.segment_len).min(SIEVE_MAX_HI);
        (lo, hi)
    }

    /// The full aligned block `k`, loaded from cache when possible.
    pub fn block_segment(&self, k: u64) -> Result<SqfreeSegment> {
        let (lo, hi) = self.block_bounds(k);
        if let Some(seg) = self.load(lo, hi) {
            return Ok(seg);
        }
        let seg = sieve_squarefree(lo, hi)?;
        self.persist(&seg);
        Ok(seg)
    }

    /// Exact squarefree bits over `[lo, hi)`, assembled from aligned blocks.
    pub fn bits(&self, lo: u64, hi: u64) -> Result<SqfreeSegment> {
        validate_range(lo, hi)?;
        let blocks: Vec<SqfreeSegment> = self
            .block_ids(lo, hi)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|k| self.block_segment(k))
            .collect::<Result<_>>()?;
        let mut out = SqfreeSegment::blank(lo, hi);
        for b in &blocks {
            out.fill_from(b);
        }
        Ok(out)
    }

    fn cache_path(&self, lo: u64, hi: u64) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("sqf1-{lo}-{hi}.seg")))
    }

    fn load(&self, lo: u64, hi: u64) -> Option<SqfreeSegment> {
        let path = self.cache_path(lo, hi)?;
        let bytes = std::fs::read(path).ok()?;
        let seg = SqfreeSegment::from_bytes(&bytes)?;
        // A file renamed into the wrong slot is ignored like any corruption.
        (seg.lo == lo && seg.hi == hi).then_some(seg)
    }

    /// Best effort: cache writes never fail the computation.
    fn persist(&self, seg: &SqfreeSegment) {
        let Some(path) = self.cache_path(seg.lo, seg.hi) else {
            return;
        };
        let Some(dir) = path.parent() else { return };
        if std::fs::create_dir_all(dir).is_err() {
            return;
        }
        let tmp = dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        if std::fs::write(&tmp, seg.to_bytes()).is_ok() {
            let _ = std::fs::rename(&tmp, &path);
        }
    }
}

/// Q(X): number of squarefree integers up to and including `x`.
pub fn count_squarefree(x: u64) -> Result<u64> {
    count_squarefree_with(&SegmentStore::new(), x)
}

pub fn count_squarefree_with(store: &SegmentStore, x: u64) -> Result<u64> {
    if x < 1 || x > COUNT_MAX {
        return Err(Error::Domain(format!(
            "count_squarefree argument {x} outside [1, {COUNT_MAX}]"
        )));
    }
    let counts: Vec<u64> = store
        .block_ids(1, x + 1)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| {
            store
                .block_segment(k)
                .map(|seg| seg.popcount_range(1, x + 1))
        })
        .collect::<Result<_>>()?;
    Ok(counts.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::factorize;

    fn squarefree_by_trial(n: u64) -> bool {
        let mut p = 2;
        while p * p <= n {
            if n % (p * p) == 0 {
                return false;
            }
            p += 1;
        }
        true
    }

    #[test]
    fn sieve_small_range() {
        let seg = sieve_squarefree(1, 11).unwrap();
        let set: Vec<u64> = seg.ones().collect();
        assert_eq!(set, vec![1, 2, 3, 5, 6, 7, 10]);
    }

    #[test]
    fn sieve_single_square() {
        let seg = sieve_squarefree(49, 50).unwrap();
        assert!(!seg.contains(49));
        assert_eq!(seg.popcount(), 0);
    }

    #[test]
    fn sieve_large_offset_matches_trial_division() {
        let lo = 1_000_000_000u64;
        let seg = sieve_squarefree(lo, lo + 10).unwrap();
        for n in lo..lo + 10 {
            assert_eq!(seg.contains(n), squarefree_by_trial(n), "n = {n}");
        }
    }

    #[test]
    fn sieve_rejects_bad_ranges() {
        assert!(sieve_squarefree(0, 5).is_err());
        assert!(sieve_squarefree(5, 5).is_err());
        assert!(sieve_squarefree(1, SIEVE_MAX_HI + 2).is_err());
        assert!(matches!(
            sieve_squarefree(1, 2 + (1 << 32)),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn mobius_small_values() {
        assert_eq!(sieve_mobius(1, 7).unwrap(), vec![1, -1, -1, 0, -1, 1]);
        assert_eq!(sieve_mobius(30, 31).unwrap(), vec![-1]);
    }

    #[test]
    fn mobius_matches_factorization_oracle() {
        let lo = 1_000_000u64;
        let mu = sieve_mobius(lo, lo + 100).unwrap();
        for (i, &m) in mu.iter().enumerate() {
            let n = lo + i as u64;
            let f = factorize(n).unwrap();
            let expected = if !f.is_squarefree() {
                0
            } else if f.factors().len() % 2 == 0 {
                1
            } else {
                -1
            };
            assert_eq!(m as i64, expected, "n = {n}");
        }
    }

    #[test]
    fn mobius_squared_equals_indicator() {
        let hi = 30_000;
        let mu = sieve_mobius(1, hi).unwrap();
        let seg = sieve_squarefree(1, hi).unwrap();
        for n in 1..hi {
            let sq = mu[(n - 1) as usize];
            assert_eq!((sq * sq) as u64, seg.contains(n) as u64, "n = {n}");
        }
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_squarefree(10).unwrap(), 7);
        assert_eq!(count_squarefree(100).unwrap(), 61);
        assert_eq!(count_squarefree(1).unwrap(), 1);
        assert!(count_squarefree(0).is_err());
    }

    #[test]
    fn count_matches_single_segment_popcount() {
        for x in [1_000u64, 100_000, 1_000_000] {
            let direct = sieve_squarefree(1, x + 1).unwrap().popcount();
            assert_eq!(count_squarefree(x).unwrap(), direct);
        }
    }

    #[test]
    fn popcount_range_agrees_with_scan() {
        let seg = sieve_squarefree(1, 1000).unwrap();
        for (a, b) in [(1u64, 2u64), (1, 999), (63, 65), (64, 128), (130, 131), (500, 700)] {
            let scan = (a..b).filter(|&n| seg.contains(n)).count() as u64;
            assert_eq!(seg.popcount_range(a, b), scan, "range [{a}, {b})");
        }
    }

    #[test]
    fn segment_join_consistency() {
        let (a, b, c) = (97u64, 10_000, 23_456);
        let s1 = sieve_squarefree(a, b).unwrap();
        let s2 = sieve_squarefree(b, c).unwrap();
        let mut joined = SqfreeSegment::blank(a, c);
        joined.fill_from(&s1);
        joined.fill_from(&s2);
        assert_eq!(joined, sieve_squarefree(a, c).unwrap());
    }

    #[test]
    fn cache_roundtrip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let store = SegmentStore::with_dir(Some(dir.path().to_path_buf()))
            .with_segment_len(1 << 12);
        let fresh = store.bits(1, 20_000).unwrap();
        // Re-read purely from cache.
        let cached = store.bits(1, 20_000).unwrap();
        assert_eq!(fresh, cached);

        // Corrupt one block file: it must be ignored and recomputed.
        let victim = dir.path().join("sqf1-4096-8192.seg");
        assert!(victim.exists(), "expected cache file {victim:?}");
        std::fs::write(&victim, b"SQF1garbage").unwrap();
        let recomputed = store.bits(1, 20_000).unwrap();
        assert_eq!(fresh, recomputed);

        // Version bump must invalidate.
        let mut bytes = store.bits(4096, 8192).unwrap().to_bytes();
        bytes[4] = 2;
        assert!(SqfreeSegment::from_bytes(&bytes).is_none());
    }

    #[test]
    fn cache_bytes_layout() {
        let seg = sieve_squarefree(1, 11).unwrap();
        let bytes = seg.to_bytes();
        assert_eq!(&bytes[0..4], b"SQF1");
        assert_eq!(bytes[4], 1);
        assert_eq!(u64::from_le_bytes(bytes[5..13].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[13..21].try_into().unwrap()), 11);
        assert_eq!(bytes.len(), 21 + 8);
        // {1,2,3,5,6,7,10} relative to lo = 1 -> bits {0,1,2,4,5,6,9}.
        let word = u64::from_le_bytes(bytes[21..29].try_into().unwrap());
        assert_eq!(word, 0b10_0111_0111);
        assert_eq!(SqfreeSegment::from_bytes(&bytes).unwrap(), seg);
    }
}
