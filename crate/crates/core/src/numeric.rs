//! Compensated floating-point accumulation.
//!
//! The correlation statistics sum up to 10^6 terms of mixed sign whose total
//! is far smaller than the individual terms; plain summation loses that
//! signal. Everything float-valued in this crate that sums more than a
//! handful of terms goes through [`KahanSum`].

/// Kahan–Babuška (Neumaier) compensated summation.
///
/// The running compensation also handles the case where the new term is
/// larger in magnitude than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Fold another accumulator into this one (used for ordered block merges).
    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn sum_iter<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc.value()
    }
}
