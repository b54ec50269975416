//! Numerical laboratory for squarefree numbers in arithmetic progressions.
//!
//! The crate is organized around five currencies:
//!
//! * [`sieve::SqfreeSegment`] — packed squarefree indicators over a range;
//! * [`apstats::ErrorVector`] — residue counts and error terms for one (X, q);
//! * [`apstats::AffineMap`] — the residue map a -> r a + s;
//! * [`arith::Rational`] — exact carrier for local densities;
//! * [`expsum::ComplexValue`] — exponential-sum values.
//!
//! Everything is deterministic: parallel passes reduce in a fixed order, so
//! results do not depend on the number of worker threads.

pub mod apstats;
pub mod arith;
pub mod error;
pub mod expsum;
pub mod localdensity;
pub mod numeric;
pub mod pairstats;
pub mod sieve;

pub use error::{Error, Result};
