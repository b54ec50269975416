//! Property tests for the bit-level and exact-arithmetic plumbing.

use proptest::prelude::*;

use sqlab_core::arith::Rational;
use sqlab_core::sieve::{sieve_squarefree, SqfreeSegment};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Sieving [a, b) and [b, c) and splicing the bits equals sieving
    /// [a, c) directly, for arbitrary split points.
    #[test]
    fn segment_join(a in 1u64..150_000, len1 in 1u64..60_000, len2 in 1u64..60_000) {
        let b = a + len1;
        let c = b + len2;
        let s1 = sieve_squarefree(a, b).unwrap();
        let s2 = sieve_squarefree(b, c).unwrap();
        let whole = sieve_squarefree(a, c).unwrap();
        let mut joined = whole.clone();
        for w in 0..joined.words().len() {
            prop_assert!(w < whole.words().len());
        }
        let mut blank = SqfreeSegment::from_bytes(&{
            // Build an all-zero segment over [a, c) through the public codec.
            let nwords = ((c - a) as usize).div_ceil(64);
            let mut bytes = Vec::new();
            bytes.extend_from_slice(b"SQF1");
            bytes.push(1u8);
            bytes.extend_from_slice(&a.to_le_bytes());
            bytes.extend_from_slice(&c.to_le_bytes());
            bytes.extend(std::iter::repeat(0u8).take(8 * nwords));
            bytes
        }).unwrap();
        blank.fill_from(&s1);
        blank.fill_from(&s2);
        joined = blank;
        prop_assert_eq!(joined, whole);
    }

    /// Rational arithmetic round-trips and stays canonical.
    #[test]
    fn rational_field_ops(
        an in -10_000i64..10_000, ad in 1i64..500,
        bn in -10_000i64..10_000, bd in 1i64..500,
    ) {
        let a = Rational::new(an, ad);
        let b = Rational::new(bn, bd);
        prop_assert_eq!((a + b) - b, a);
        if !b.is_zero() {
            prop_assert_eq!((a * b) / b, a);
        }
        let s = a + b;
        prop_assert!(s.denominator() >= 1);
        let g = gcd(s.numerator().unsigned_abs(), s.denominator().unsigned_abs());
        prop_assert!(s.is_zero() || g == 1);
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}
