//! Mean and standard-error bookkeeping for Monte Carlo estimates.

use crate::{Error, Result};

/// A Monte Carlo estimate: sample mean, its standard error and sample count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { mean: value, stderr: 0.0, n: 1 }
    }

    /// Estimate from i.i.d. samples; the standard error uses the unbiased variance.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let mut acc = Accumulator::default();
        for &x in samples {
            acc.push(x);
        }
        acc.estimate()
    }

    /// Combined standard error of `self - other` for independent estimates.
    pub fn combined_stderr(&self, other: &Estimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }

    /// `|self.mean - value| <= sigmas * stderr`, with a tiny absolute floor for exact cases.
    pub fn agrees_with(&self, value: f64, sigmas: f64) -> bool {
        (self.mean - value).abs() <= sigmas * self.stderr + 1e-12
    }
}

/// Welford accumulator; partial accumulators merge exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = (self.n + other.n) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n;
        self.m2 += other.m2 + delta * delta * self.n as f64 * other.n as f64 / n;
        self.n += other.n;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn estimate(&self) -> Result<Estimate> {
        if self.n == 0 {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        Ok(Estimate {
            mean: self.mean,
            stderr: (self.variance() / self.n as f64).sqrt(),
            n: self.n,
        })
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_stderr() {
        let e = Estimate::from_samples(&[2.5; 10]).unwrap();
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.n, 10);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..57).map(|i| ((i * 37) % 11) as f64 * 0.3 - 1.0).collect();
        let whole: Accumulator = xs.iter().copied().collect();
        let mut left: Accumulator = xs[..20].iter().copied().collect();
        let right: Accumulator = xs[20..].iter().copied().collect();
        left.merge(&right);
        assert_eq!(left.len(), whole.len());
        assert!((left.mean() - whole.mean()).abs() < 1e-14);
        assert!((left.variance() - whole.variance()).abs() < 1e-13);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(Estimate::from_samples(&[]).is_err());
    }
}
