//! Streaming moment accumulators with deterministic pairwise merging.

use serde::{Deserialize, Serialize};

/// Running mean and second central moment (Welford / Chan).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

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
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        *self = Accumulator { n, mean, m2 };
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn summary(&self) -> Stat {
        Stat::from_parts(self.mean(), self.variance(), self.n)
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Running covariance of a pair of variables.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CoAccumulator {
    n: u64,
    mean_x: f64,
    mean_y: f64,
    c: f64,
}

impl CoAccumulator {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let dx = x - self.mean_x;
        self.mean_x += dx / self.n as f64;
        self.mean_y += (y - self.mean_y) / self.n as f64;
        self.c += dx * (y - self.mean_y);
    }

    pub fn merge(&mut self, other: &CoAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        let w = self.n as f64 * other.n as f64 / n as f64;
        self.c += other.c + dx * dy * w;
        self.mean_x += dx * other.n as f64 / n as f64;
        self.mean_y += dy * other.n as f64 / n as f64;
        self.n = n;
    }

    pub fn covariance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.c / (self.n - 1) as f64
        }
    }
}

/// Summary statistics of one observable over an ensemble.
///
/// Standard errors use the Gaussian approximation
/// `SE(var) = var * sqrt(2 / (n - 1))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub variance: f64,
    pub mean_stderr: f64,
    pub variance_stderr: f64,
}

impl Stat {
    pub fn from_parts(mean: f64, variance: f64, n: u64) -> Self {
        let (mean_stderr, variance_stderr) = if n >= 2 {
            let n = n as f64;
            (
                (variance.max(0.0) / n).sqrt(),
                variance.abs() * (2.0 / (n - 1.0)).sqrt(),
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        Stat {
            mean,
            variance,
            mean_stderr,
            variance_stderr,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}
