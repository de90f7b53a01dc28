//! Special functions and a log-domain positive scalar.

use serde::{Deserialize, Serialize};
use statrs::function::{erf, factorial, gamma};
use std::f64::consts::PI;

pub fn ln_factorial(n: u64) -> f64 {
    factorial::ln_factorial(n)
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

pub fn erfc(x: f64) -> f64 {
    erf::erfc(x)
}

/// `ln erfc(x)`, finite for every `x` including where `erfc` underflows.
pub fn ln_erfc(x: f64) -> f64 {
    if x < 20.0 {
        return erf::erfc(x).ln();
    }
    // Asymptotic series; at x >= 20 the truncation error is below 1e-13.
    let z = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut series = 1.0;
    for k in 1..8 {
        term *= -((2 * k - 1) as f64) * z;
        series += term;
    }
    -x * x - x.ln() - 0.5 * PI.ln() + series.ln()
}

/// Euclidean volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    (h * PI.ln() - ln_gamma(h + 1.0)).exp()
}

/// Volume of the round unit sphere `S^n`.
pub fn sphere_volume(n: usize) -> f64 {
    let h = (n as f64 + 1.0) / 2.0;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// Pairwise summation; the order of operations depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// A positive number stored by its natural logarithm. Constants such as
/// `erfc(160)/4` are far below the smallest `f64` but still compare, multiply
/// and add correctly here.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogScale {
    pub ln: f64,
}

impl LogScale {
    pub fn from_ln(ln: f64) -> Self {
        LogScale { ln }
    }

    pub fn from_value(v: f64) -> Self {
        LogScale { ln: v.ln() }
    }

    pub fn zero() -> Self {
        LogScale { ln: f64::NEG_INFINITY }
    }

    /// Value as `f64`; may underflow to zero.
    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn is_positive(self) -> bool {
        self.ln > f64::NEG_INFINITY && !self.ln.is_nan()
    }

    pub fn mul(self, other: LogScale) -> LogScale {
        LogScale { ln: self.ln + other.ln }
    }

    pub fn scale(self, factor: f64) -> LogScale {
        LogScale { ln: self.ln + factor.ln() }
    }

    pub fn add(self, other: LogScale) -> LogScale {
        let (hi, lo) = if self.ln >= other.ln { (self.ln, other.ln) } else { (other.ln, self.ln) };
        if hi == f64::NEG_INFINITY {
            return LogScale::zero();
        }
        LogScale { ln: hi + (lo - hi).exp().ln_1p() }
    }

    /// Decimal mantissa and exponent, for printing tiny values.
    pub fn decimal(self) -> (f64, i64) {
        let l10 = self.ln / std::f64::consts::LN_10;
        let e = l10.floor();
        (10f64.powf(l10 - e), e as i64)
    }
}

impl std::fmt::Display for LogScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if !self.is_positive() {
            return write!(f, "0");
        }
        let (m, e) = self.decimal();
        write!(f, "{m:.6}e{e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_erfc_matches_direct_and_continues() {
        for &x in &[0.0, 0.5, 3.0, 10.0, 19.9] {
            assert!((ln_erfc(x) - erfc(x).ln()).abs() < 1e-10);
        }
        // Continuity across the switch.
        let a = ln_erfc(19.999_999);
        let b = ln_erfc(20.0);
        assert!((a - b).abs() < 1e-4);
        // Agreement with the direct value where both are representable.
        let direct = erfc(25.0).ln();
        let x = 25.0f64;
        let z = 1.0 / (2.0 * x * x);
        let series = 1.0 - z + 3.0 * z * z - 15.0 * z * z * z;
        let asym = -x * x - x.ln() - 0.5 * PI.ln() + series.ln();
        assert!((direct - asym).abs() < 1e-9);
        assert!((ln_erfc(160.0) - (-25600.0 - 160f64.ln() - 0.5 * PI.ln())).abs() < 1e-4);
    }

    #[test]
    fn volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_volume(1) - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn log_scale_arithmetic() {
        let a = LogScale::from_value(0.25);
        let b = LogScale::from_value(0.5);
        assert!((a.add(b).value() - 0.75).abs() < 1e-15);
        assert!((a.mul(b).value() - 0.125).abs() < 1e-15);
        let tiny = LogScale::from_ln(-25_000.0);
        assert!(tiny.is_positive());
        assert_eq!(tiny.value(), 0.0);
        assert!(tiny.add(tiny).ln > tiny.ln);
        assert_eq!(format!("{}", LogScale::from_value(1234.5)), "1.234500e3");
    }
}
