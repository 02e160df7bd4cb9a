//! Binomial proportion estimates.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// A sampled frequency with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub count: u64,
    pub n: u64,
    pub freq: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl Estimate {
    pub fn new(count: u64, n: u64) -> Self {
        let (lo, hi) = wilson(count, n, Z95);
        Estimate {
            count,
            n,
            freq: if n == 0 { 0.0 } else { count as f64 / n as f64 },
            wilson_lo: lo,
            wilson_hi: hi,
        }
    }

    pub fn radius(&self) -> f64 {
        (self.wilson_hi - self.wilson_lo) / 2.0
    }

    /// `|freq - target| <= k` Wilson radii.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.freq - target).abs() <= k * self.radius()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_interval() {
        // 50/100: center 0.5, half width 1.96*sqrt(.25/100 + 3.84/40000)/1.0384
        let (lo, hi) = wilson(50, 100, Z95);
        assert!((lo - 0.403_831).abs() < 1e-5 && (hi - 0.596_169).abs() < 1e-5);
        let (lo, hi) = wilson(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_533).abs() < 1e-5);
    }

    #[test]
    fn interval_contains_estimate() {
        for (k, n) in [(1, 3), (7, 7), (123, 4096), (0, 1)] {
            let e = Estimate::new(k, n);
            assert!(e.wilson_lo <= e.freq && e.freq <= e.wilson_hi);
            assert!(e.within(e.freq, 0.0));
        }
    }
}
