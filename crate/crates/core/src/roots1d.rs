//! Real roots of random univariate polynomials.
//!
//! Counting is certified. Roots in `[-1, 1]` are isolated with interval
//! Taylor bounds that include Horner rounding errors; roots outside are the
//! reciprocals of roots of the reversed polynomial in `[-1, 1]`. Whenever the
//! fast path cannot decide (clustered or multiple roots, a root on a split
//! point), the exact Sturm count is used instead.

pub mod sturm;

use crate::ensembles::{EnsembleKind, EnsembleSpec, HomogeneousPolynomial, Sampler};
use crate::error::{Error, Result};
use crate::quadrature::Integrator;
use crate::special::ln_factorial;
use crate::stats::Estimate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

pub use sturm::sturm_count;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountMethod {
    Isolation,
    Sturm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootCount {
    pub count: usize,
    pub method: CountMethod,
}

/// Coefficients of `t -> P(1, t)`, ascending.
pub fn chart_coefficients(p: &HomogeneousPolynomial) -> Result<Vec<f64>> {
    if p.nvars() != 2 {
        return Err(Error::invalid("univariate counting needs a binary form"));
    }
    // alpha = (d - k, k) sits at index k.
    Ok(p.coeffs().to_vec())
}

const U: f64 = f64::EPSILON * 0.5;

/// `(p(t), bound on |error of p(t)|, p'(t), bound on its error)`.
fn horner_bounds(a: &[f64], t: f64) -> (f64, f64, f64, f64) {
    let d = a.len() - 1;
    let at = t.abs();
    let (mut p, mut s0) = (0.0, 0.0);
    let (mut p1, mut s1) = (0.0, 0.0);
    for k in (0..=d).rev() {
        if k >= 1 {
            p1 = p1 * t + k as f64 * a[k];
            s1 = s1 * at + k as f64 * a[k].abs();
        }
        p = p * t + a[k];
        s0 = s0 * at + a[k].abs();
    }
    let g = 2.0 * (2 * d + 4) as f64 * U;
    (p, g * s0 + f64::MIN_POSITIVE, p1, g * s1 + f64::MIN_POSITIVE)
}

/// Upper bound for `|p''|` on `[-rho, rho]`.
fn second_derivative_bound(a: &[f64], rho: f64) -> f64 {
    let d = a.len() - 1;
    let mut s = 0.0;
    for k in (2..=d).rev() {
        s = s * rho + (k * (k - 1)) as f64 * a[k].abs();
    }
    s * (1.0 + 1e-10) + f64::MIN_POSITIVE
}

/// Certified number of roots in `[-1, 1]`, or `None` if undecided.
fn isolate_unit_interval(a: &[f64]) -> Option<usize> {
    const MAX_DEPTH: u32 = 50;
    let mut count = 0;
    let mut stack = vec![(-1.0f64, 1.0f64, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let rho = lo.abs().max(hi.abs());
        let b2 = second_derivative_bound(a, rho);
        let (p, e0, p1, e1) = horner_bounds(a, c);
        if p.abs() - e0 > h * (p1.abs() + e1) + 0.5 * h * h * b2 {
            continue;
        }
        if p1.abs() - e1 > h * b2 {
            let (pl, el, _, _) = horner_bounds(a, lo);
            let (ph, eh, _, _) = horner_bounds(a, hi);
            if pl.abs() <= el || ph.abs() <= eh {
                return None;
            }
            if (pl > 0.0) != (ph > 0.0) {
                count += 1;
            }
            continue;
        }
        if depth >= MAX_DEPTH {
            return None;
        }
        stack.push((c, hi, depth + 1));
        stack.push((lo, c, depth + 1));
    }
    Some(count)
}

fn certified_count(a: &[f64]) -> Option<usize> {
    for t in [-1.0, 1.0] {
        let (p, e, _, _) = horner_bounds(a, t);
        if p.abs() <= e {
            return None;
        }
    }
    let inner = isolate_unit_interval(a)?;
    let rev: Vec<f64> = a.iter().rev().copied().collect();
    let outer = isolate_unit_interval(&rev)?;
    Some(inner + outer)
}

/// Number of distinct real roots of `sum a_k t^k`.
pub fn count_real_roots(a: &[f64]) -> Result<RootCount> {
    if a.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("coefficients must be finite"));
    }
    let deg = match a.iter().rposition(|c| *c != 0.0) {
        None => return Err(Error::invalid("the zero polynomial has no finite root count")),
        Some(k) => k,
    };
    if deg == 0 {
        return Ok(RootCount { count: 0, method: CountMethod::Isolation });
    }
    let a = &a[..=deg];
    if let Some(count) = certified_count(a) {
        return Ok(RootCount { count, method: CountMethod::Isolation });
    }
    Ok(RootCount { count: sturm_count(a)?, method: CountMethod::Sturm })
}

/// Monte Carlo summary of real root counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootStatistics {
    pub kind: EnsembleKind,
    pub degree: u32,
    pub trials: usize,
    pub estimate: Estimate,
    pub sturm_fallbacks: usize,
}

/// Expected number of real roots of a binary form, by sampling.
///
/// Every sample must have at most `d` roots with the parity of `d`; a
/// violation aborts with [`Error::InvalidState`].
pub fn expected_roots_mc(spec: &EnsembleSpec, trials: usize) -> Result<RootStatistics> {
    if spec.nvars != 2 {
        return Err(Error::invalid("root counting needs nvars = 2"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let sampler = Sampler::new(*spec)?;
    let d = spec.degree as usize;
    let counts: Vec<RootCount> = (0..trials as u64)
        .into_par_iter()
        .map(|i| count_real_roots(sampler.sample(i).coeffs()))
        .collect::<Result<_>>()?;
    for (i, c) in counts.iter().enumerate() {
        if c.count > d || (d - c.count) % 2 != 0 {
            return Err(Error::InvalidState(format!(
                "trial {i}: {} real roots for degree {d} violates count <= d with matching parity",
                c.count
            )));
        }
    }
    let xs: Vec<f64> = counts.iter().map(|c| c.count as f64).collect();
    Ok(RootStatistics {
        kind: spec.kind,
        degree: spec.degree,
        trials,
        estimate: Estimate::from_samples(&xs),
        sturm_fallbacks: counts.iter().filter(|c| c.method == CountMethod::Sturm).count(),
    })
}

fn ln_weights_sq(spec: &EnsembleSpec) -> Vec<f64> {
    let d = spec.degree as u64;
    (0..=d)
        .map(|k| match spec.kind {
            EnsembleKind::Kostlan => ln_factorial(d + 1) - ln_factorial(k) - ln_factorial(d - k),
            EnsembleKind::Kac => 0.0,
        })
        .collect()
}

fn speed(lw: &[f64], t: f64) -> f64 {
    if t.abs() < 1e-100 {
        return (lw[1] - lw[0]).exp().sqrt();
    }
    let lt = 2.0 * t.abs().ln();
    let logs: Vec<f64> = lw.iter().enumerate().map(|(k, w)| w + k as f64 * lt).collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = p.iter().sum();
    let mean = p.iter().enumerate().map(|(k, q)| k as f64 * q).sum::<f64>() / z;
    let var = p.iter().enumerate().map(|(k, q)| (k as f64 - mean).powi(2) * q).sum::<f64>() / z;
    var.sqrt() / t.abs()
}

/// Speed `|gamma'(t)|` of the normalized moment curve `t -> v(t)/|v(t)|`,
/// where `v_k(t) = w_k t^k`. Equals `sqrt(Var_p(k)) / |t|` with
/// `p_k ∝ w_k^2 t^(2k)`, evaluated in log space.
pub fn gamma_speed(spec: &EnsembleSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    if spec.nvars != 2 {
        return Err(Error::invalid("gamma_speed needs nvars = 2"));
    }
    if !t.is_finite() {
        return Err(Error::invalid("t must be finite"));
    }
    Ok(speed(&ln_weights_sq(spec), t))
}

/// `(1/pi) * integral of |gamma'(t)| dt` over the real line: the expected
/// number of real roots, by integral geometry on the sphere.
pub fn expected_roots_crofton(spec: &EnsembleSpec) -> Result<f64> {
    spec.validate()?;
    if spec.nvars != 2 {
        return Err(Error::invalid("Crofton integral needs nvars = 2"));
    }
    let lw = ln_weights_sq(spec);
    // t = tan(theta); the integrand is even and the Kac profile peaks at t = 1.
    let f = |theta: f64| {
        let t = theta.tan();
        speed(&lw, t) * (1.0 + t * t)
    };
    let it = Integrator { abs_tol: 1e-11, rel_tol: 1e-12, max_intervals: 4000 };
    let q = it.integrate_with_breaks(f, &[0.0, FRAC_PI_4, FRAC_PI_2])?;
    Ok(2.0 * q.value / PI)
}
