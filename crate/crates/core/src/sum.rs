//! Compensated accumulation for long sums of small differences.

use std::iter::Sum;
use std::ops::AddAssign;

/// Kahan–Babuška–Neumaier running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    s: f64,
    c: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self) -> f64 {
        self.s + self.c
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }
}

impl Sum<f64> for NeumaierSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc += x;
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn csum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    xs.into_iter().sum::<NeumaierSum>().value()
}

/// Running compensated prefix sums: `out[k] = x[0] + ... + x[k]`.
pub fn prefix_sums(xs: &[f64]) -> Vec<f64> {
    let mut acc = NeumaierSum::new();
    xs.iter()
        .map(|&x| {
            acc += x;
            acc.value()
        })
        .collect()
}
