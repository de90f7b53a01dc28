//! Determinant statistics of Gaussian symmetric matrices, split by signature.
//!
//! Matrices have independent entries with diagonal variance 1 and
//! off-diagonal variance 1/2 (density proportional to `exp(-tr(A^2)/2)`).
//! For an `m x m` matrix, `e(i)` is the expectation of `|det A|` restricted
//! to matrices with exactly `i` positive eigenvalues.

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::special::{ln_gamma, pairwise_sum};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Draw trial `index` of the `m x m` ensemble.
pub fn sample_symmetric(m: usize, seed: u64, index: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, Domain::Matrix, index);
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = rng::normal(&mut r);
        for j in 0..i {
            let x = rng::half_normal_variance(&mut r);
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
    a
}

/// Eigenvalues, determinant and signature of one matrix.
#[derive(Debug, Clone)]
pub struct SpectralSample {
    pub eigenvalues: Vec<f64>,
    pub determinant: f64,
    pub positive: usize,
    pub negative: usize,
}

impl SpectralSample {
    pub fn of(a: &DMatrix<f64>) -> SpectralSample {
        let eig = SymmetricEigen::new(a.clone());
        let ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let radius = ev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tol = 1e-12 * radius;
        let positive = ev.iter().filter(|&&x| x > tol).count();
        let negative = ev.iter().filter(|&&x| x < -tol).count();
        SpectralSample { determinant: ev.iter().product(), eigenvalues: ev, positive, negative }
    }

    pub fn is_degenerate(&self) -> bool {
        self.positive + self.negative < self.eigenvalues.len()
    }
}

/// Estimated `e(i)` for `i = 0..=m`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetExpectationTable {
    pub m: usize,
    pub trials: usize,
    pub e_hat: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub hits: Vec<usize>,
    /// Rule-of-three upper bound `3 / trials`, reported for empty bins.
    pub empty_bin_bound: f64,
    pub mean_abs_det: f64,
    /// Standard error of `mean_abs_det`.
    pub total_se: f64,
    pub degenerate: usize,
}

impl DetExpectationTable {
    /// `c_i^+ = e(i) / sqrt(pi)`.
    pub fn c_plus(&self) -> Vec<f64> {
        self.e_hat.iter().map(|e| e / PI.sqrt()).collect()
    }

    pub fn c_plus_std_errors(&self) -> Vec<f64> {
        self.std_errors.iter().map(|e| e / PI.sqrt()).collect()
    }

    /// Sum of the `c_i^+`.
    pub fn total(&self) -> f64 {
        pairwise_sum(&self.c_plus())
    }

    /// Standard error of [`Self::total`]. Bins are disjoint events of one
    /// sample, so this is the standard error of `|det| / sqrt(pi)`.
    pub fn total_std_error(&self) -> f64 {
        self.total_se / PI.sqrt()
    }
}

/// Monte Carlo estimate of the signature-resolved table.
pub fn estimate_e_table(m: usize, trials: usize, seed: u64) -> Result<DetExpectationTable> {
    if m == 0 {
        return Err(Error::invalid("matrix size must be at least 1"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let samples: Vec<(f64, usize, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = SpectralSample::of(&sample_symmetric(m, seed, i));
            (s.determinant.abs(), s.positive, s.is_degenerate())
        })
        .collect();
    let n = trials as f64;
    let mut e_hat = Vec::with_capacity(m + 1);
    let mut std_errors = Vec::with_capacity(m + 1);
    let mut hits = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let xs: Vec<f64> = samples.iter().map(|&(d, p, deg)| if p == i && !deg { d } else { 0.0 }).collect();
        let mean = pairwise_sum(&xs) / n;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        let var = if trials > 1 { pairwise_sum(&dev) / (n - 1.0) } else { 0.0 };
        e_hat.push(mean);
        std_errors.push((var / n).sqrt());
        hits.push(samples.iter().filter(|&&(_, p, deg)| p == i && !deg).count());
    }
    let all: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let mean_abs_det = pairwise_sum(&all) / n;
    let dev: Vec<f64> = all.iter().map(|x| (x - mean_abs_det).powi(2)).collect();
    let total_se = if trials > 1 { (pairwise_sum(&dev) / (n - 1.0) / n).sqrt() } else { 0.0 };
    Ok(DetExpectationTable {
        m,
        trials,
        e_hat,
        std_errors,
        hits,
        empty_bin_bound: 3.0 / n,
        mean_abs_det,
        degenerate: samples.iter().filter(|s| s.2).count(),
        total_se,
    })
}

/// `(2 sqrt 2 / pi) * Gamma((n + 1) / 2)`, the large-`n` growth profile of the
/// total for matrices of size `m = n - 1`.
pub fn asymptotic_profile(n: usize) -> f64 {
    2.0 * SQRT_2 / PI * ln_gamma((n as f64 + 1.0) / 2.0).exp()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticRatio {
    pub n: usize,
    pub total: f64,
    pub total_std_error: f64,
    pub profile: f64,
    pub ratio: f64,
    pub ratio_std_error: f64,
}

/// Ratio of the estimated total to [`asymptotic_profile`] for each
/// `n = m + 1`.
pub fn asymptotic_ratio(m_values: &[usize], trials: usize, seed: u64) -> Result<Vec<AsymptoticRatio>> {
    m_values
        .iter()
        .map(|&m| {
            let t = estimate_e_table(m, trials, seed)?;
            let n = m + 1;
            let profile = asymptotic_profile(n);
            Ok(AsymptoticRatio {
                n,
                total: t.total(),
                total_std_error: t.total_std_error(),
                profile,
                ratio: t.total() / profile,
                ratio_std_error: t.total_std_error() / profile,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub n: usize,
    pub cutoff: usize,
    pub value: f64,
    pub std_error: f64,
    /// True when no sample landed in the tail and `value` is the
    /// rule-of-three bound.
    pub upper_bound: bool,
}

/// `sum_{i <= floor(alpha n)} c_i^+` for matrices of size `n - 1`.
pub fn low_index_tail(n: usize, alpha: f64, trials: usize, seed: u64) -> Result<TailEstimate> {
    if n < 2 {
        return Err(Error::invalid("n must be at least 2"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid("alpha must lie in [0, 1]"));
    }
    let t = estimate_e_table(n - 1, trials, seed)?;
    let cutoff = ((alpha * n as f64).floor() as usize).min(n - 1);
    let hits: usize = t.hits[..=cutoff].iter().sum();
    if hits == 0 {
        return Ok(TailEstimate { n, cutoff, value: t.empty_bin_bound, std_error: 0.0, upper_bound: true });
    }
    let c = t.c_plus();
    let se = t.c_plus_std_errors();
    Ok(TailEstimate {
        n,
        cutoff,
        value: pairwise_sum(&c[..=cutoff]),
        std_error: se[..=cutoff].iter().map(|s| s * s).sum::<f64>().sqrt(),
        upper_bound: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one() {
        let t = estimate_e_table(1, 200_000, 4).unwrap();
        let target = (2.0 / PI).sqrt();
        assert!((t.mean_abs_det - target).abs() < 4.0 * t.total_se);
        // Half the mass on each sign.
        assert!((t.e_hat[0] - t.e_hat[1]).abs() < 5.0 * (t.std_errors[0] + t.std_errors[1]));
        assert!((t.total() - SQRT_2 / PI).abs() < 4.0 * t.total_std_error());
    }

    #[test]
    fn bins_sum_to_mean() {
        let t = estimate_e_table(5, 5_000, 1).unwrap();
        let s: f64 = t.e_hat.iter().sum();
        assert!((s - t.mean_abs_det).abs() <= 1e-12 * t.mean_abs_det);
        assert_eq!(t.hits.iter().sum::<usize>() + t.degenerate, 5_000);
    }

    #[test]
    fn spectral_identities() {
        for i in 0..50 {
            let a = sample_symmetric(6, 9, i);
            let s = SpectralSample::of(&a);
            let tr: f64 = s.eigenvalues.iter().sum();
            assert!((tr - a.trace()).abs() < 1e-10);
            let lu = a.clone().lu().determinant();
            assert!((lu - s.determinant).abs() < 1e-9 * (1.0 + lu.abs()));
        }
    }

    #[test]
    fn entry_variances() {
        let n = 40_000;
        let (mut d2, mut o2) = (0.0, 0.0);
        for i in 0..n {
            let a = sample_symmetric(3, 2, i);
            d2 += a[(1, 1)] * a[(1, 1)];
            o2 += a[(2, 0)] * a[(2, 0)];
        }
        assert!((d2 / n as f64 - 1.0).abs() < 0.03);
        assert!((o2 / n as f64 - 0.5).abs() < 0.015);
    }

    #[test]
    fn profile_at_two() {
        // n = 2: total equals sqrt(2)/pi and the profile equals sqrt(2/pi).
        assert!((asymptotic_profile(2) - (2.0 / PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        assert!(estimate_e_table(0, 10, 0).is_err());
        assert!(low_index_tail(4, 1.5, 10, 0).is_err());
    }

    #[test]
    fn empty_tail_reports_bound() {
        // Size 15 matrices almost never have at most one positive eigenvalue.
        let t = low_index_tail(16, 1.0 / 16.0, 500, 3).unwrap();
        assert!(t.upper_bound);
        assert_eq!(t.value, 3.0 / 500.0);
    }
}
