//! Fubini–Study geometry of homogeneous polynomials.
//!
//! Volume convention: the Fubini–Study volume form is normalized so that
//! `Vol(CP^n) = 1`. Its restriction to `RP^n` is the round metric of the
//! Hopf quotient rescaled by [`fs_length_scale`], and that function is the
//! only place where the two conventions meet.

use crate::ensembles::{AffinePolynomial, EnsembleSpec, HomogeneousPolynomial, Sampler};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, Integrator};
use crate::rng::{self, Domain};
use crate::special::{ln_factorial, sphere_volume};
use crate::stats::Estimate;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Ratio between lengths in the volume-normalized Fubini–Study metric and
/// round lengths on `RP^n` (geodesic distance `arccos |<u, v>|`).
pub fn fs_length_scale(n: usize) -> f64 {
    ((ln_factorial(n as u64) - n as f64 * PI.ln()) / (2.0 * n as f64)).exp()
}

/// Volume of `RP^n` in the volume-normalized Fubini–Study metric.
pub fn fs_volume_rp(n: usize) -> f64 {
    fs_length_scale(n).powi(n as i32) * sphere_volume(n) / 2.0
}

/// A point of `RP^n` stored as a unit vector whose first nonzero coordinate
/// is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint {
    coords: Vec<f64>,
}

impl ProjectivePoint {
    pub fn new(v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if v.len() < 2 || !norm.is_finite() || norm == 0.0 {
            return Err(Error::invalid("a projective point needs a finite nonzero vector of length >= 2"));
        }
        let s = v.iter().find(|x| **x != 0.0).map_or(1.0, |x| x.signum());
        Ok(ProjectivePoint { coords: v.iter().map(|x| s * x / norm).collect() })
    }

    /// The point `[1 : 0 : ... : 0]` of `RP^n`.
    pub fn origin(n: usize) -> Self {
        let mut coords = vec![0.0; n + 1];
        coords[0] = 1.0;
        ProjectivePoint { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Round distance `arccos |<u, v>|`.
    pub fn round_distance(&self, other: &ProjectivePoint) -> f64 {
        let c: f64 = self.coords.iter().zip(&other.coords).map(|(a, b)| a * b).sum();
        c.abs().min(1.0).acos()
    }

    pub fn is_origin(&self) -> bool {
        self.coords[0] == 1.0
    }

    /// Orthogonal matrix (rows) whose first column is this point, so that
    /// `R e_0 = x`.
    pub fn rotation(&self) -> Vec<Vec<f64>> {
        let m = self.coords.len();
        let mut cols: Vec<Vec<f64>> = vec![self.coords.clone()];
        for k in 0..m {
            if cols.len() == m {
                break;
            }
            let mut v = vec![0.0; m];
            v[k] = 1.0;
            for c in &cols {
                let dot: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= dot * y);
            }
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nv > 1e-8 {
                cols.push(v.iter().map(|x| x / nv).collect());
            }
        }
        (0..m).map(|i| (0..m).map(|j| cols[j][i]).collect()).collect()
    }
}

fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    (0..m).map(|i| (0..m).map(|j| a[j][i]).collect()).collect()
}

/// `|Q(v)|^2 / |v|^(2d)` for any nonzero representative `v`.
pub fn fs_pointwise_norm_sq(q: &HomogeneousPolynomial, v: &[f64]) -> Result<f64> {
    if v.len() != q.nvars() {
        return Err(Error::invalid("point dimension differs from polynomial"));
    }
    let p = ProjectivePoint::new(v)?;
    Ok(q.evaluate(p.coords()).powi(2))
}

/// Value and gradient of the section in the chart `X_0 = 1`, trivialized by
/// the unit-norm frame: `s(x) = Q(1, x) / (1 + |x|^2)^(d/2)`.
pub fn chart_value_and_gradient(q: &HomogeneousPolynomial, x: &[f64]) -> (f64, Vec<f64>) {
    let n = q.nvars() - 1;
    assert_eq!(x.len(), n);
    let d = q.degree() as f64;
    let r2: f64 = 1.0 + x.iter().map(|t| t * t).sum::<f64>();
    let nv = r2.sqrt();
    let mut u = Vec::with_capacity(n + 1);
    u.push(1.0 / nv);
    u.extend(x.iter().map(|t| t / nv));
    let (s, g) = q.value_and_gradient(&u);
    let grad = (0..n).map(|j| g[j + 1] / nv - d * x[j] * s / r2).collect();
    (s, grad)
}

/// Angular average of `P(1, z) conj(Q(1, z))` over the torus `|z_j| = sqrt(u_j)`,
/// which by orthogonality of characters is `sum p_beta q_beta u^beta`.
fn torus_average(p: &HomogeneousPolynomial, q: &HomogeneousPolynomial, u: &[f64]) -> f64 {
    let mut s = 0.0;
    for ((a, b), e) in p.coeffs().iter().zip(q.coeffs()).zip(p.basis().iter()) {
        let c = a * b;
        if c == 0.0 {
            continue;
        }
        let mut m = c;
        for (j, &k) in e[1..].iter().enumerate() {
            m *= u[j].powi(k as i32);
        }
        s += m;
    }
    s
}

/// Radial part of the Fubini–Study `L^2` pairing over the chart ball
/// `|z|^2 < s_max` (`s_max = inf` for the whole space).
fn radial_pairing(p: &HomogeneousPolynomial, q: &HomogeneousPolynomial, s_max: f64) -> Result<f64> {
    let n = p.nvars() - 1;
    let d = p.degree() as i32;
    let it = Integrator { abs_tol: 1e-14, rel_tol: 1e-11, max_intervals: 4000 };
    // Split near the concentration scale 1/d of the weight (1 + s)^-(d+n+1).
    let knee = 1.0 / (d as f64 + 1.0);
    let total = match n {
        1 => {
            let f = |s: f64| torus_average(p, q, &[s]) * (1.0 + s).powi(-(d + 2));
            integrate_radial(&it, f, knee, s_max)?
        }
        2 => {
            let (x, w) = gauss_legendre(d as usize / 2 + 2);
            let f = |s: f64| {
                let mut inner = 0.0;
                for (xi, wi) in x.iter().zip(&w) {
                    let l = 0.5 * (xi + 1.0);
                    inner += 0.5 * wi * torus_average(p, q, &[s * l, s * (1.0 - l)]);
                }
                s * inner * (1.0 + s).powi(-(d + 3))
            };
            integrate_radial(&it, f, knee, s_max)?
        }
        _ => return Err(Error::NotImplemented("radial quadrature for n > 2".into())),
    };
    Ok(total)
}

fn integrate_radial(it: &Integrator, f: impl Fn(f64) -> f64, knee: f64, s_max: f64) -> Result<f64> {
    if s_max.is_finite() {
        let mut pts = vec![0.0];
        for k in [1.0, 4.0, 16.0] {
            if k * knee < s_max {
                pts.push(k * knee);
            }
        }
        pts.push(s_max);
        return Ok(it.integrate_with_breaks(&f, &pts)?.value);
    }
    let head = it.integrate_with_breaks(&f, &[0.0, knee, 4.0 * knee, 16.0 * knee])?.value;
    let tail = it.integrate_to_infinity(&f, 16.0 * knee)?.value;
    Ok(head + tail)
}

/// Fubini–Study `L^2` inner product under the volume-one normalization.
///
/// `n = 1, 2`: exact angular averaging and adaptive radial quadrature.
/// `n >= 3`: Monte Carlo over the unit sphere of `C^(n+1)` with a fixed seed
/// and `4e5` samples (relative accuracy about 1e-2).
pub fn fs_l2_inner(p: &HomogeneousPolynomial, q: &HomogeneousPolynomial) -> Result<f64> {
    if p.nvars() != q.nvars() || p.degree() != q.degree() {
        return Err(Error::invalid("polynomial shapes differ"));
    }
    let n = p.nvars() - 1;
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if n <= 2 {
        let f = ln_factorial(n as u64).exp();
        return Ok(f * radial_pairing(p, q, f64::INFINITY)?);
    }
    Ok(sphere_monte_carlo(p, q, 400_000))
}

fn sphere_monte_carlo(p: &HomogeneousPolynomial, q: &HomogeneousPolynomial, samples: usize) -> f64 {
    let m = p.nvars();
    let mut r = rng::stream(0, Domain::Misc, 0x5EED);
    let mut acc = 0.0;
    for _ in 0..samples {
        let re: Vec<f64> = (0..m).map(|_| rng::normal(&mut r)).collect();
        let im: Vec<f64> = (0..m).map(|_| rng::normal(&mut r)).collect();
        let nrm = (re.iter().chain(&im).map(|x| x * x).sum::<f64>()).sqrt();
        let re: Vec<f64> = re.iter().map(|x| x / nrm).collect();
        let im: Vec<f64> = im.iter().map(|x| x / nrm).collect();
        let a = p.evaluate_complex(&re, &im);
        let b = q.evaluate_complex(&re, &im);
        acc += a.0 * b.0 + a.1 * b.1;
    }
    acc / samples as f64
}

pub fn fs_l2_norm_sq(q: &HomogeneousPolynomial) -> Result<f64> {
    fs_l2_inner(q, q)
}

/// `sqrt(n! * sum a_beta^2 beta!)`: the Gaussian `L^2` norm of `P` against
/// `exp(-|y|^2)` with the volume-normalized measure at the origin. Dividing
/// by it makes the peak sections of [`build_peak_section`] tend to unit norm.
pub fn peak_normalization(p: &AffinePolynomial) -> f64 {
    let n = p.nvars() as u64;
    let s: f64 = p
        .terms()
        .map(|(c, e)| c * c * e.iter().map(|&k| ln_factorial(k as u64)).sum::<f64>().exp())
        .sum();
    (ln_factorial(n).exp() * s).sqrt()
}

/// Peak section `sigma_P` of degree `d` concentrated at `center`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakSection {
    pub section: HomogeneousPolynomial,
    pub base: AffinePolynomial,
    pub degree: u32,
    pub center: ProjectivePoint,
    pub normalization: f64,
}

impl PeakSection {
    /// The same section viewed from the origin chart (center moved to
    /// `[1:0:...:0]`).
    pub fn at_origin(&self) -> Result<HomogeneousPolynomial> {
        if self.center.is_origin() {
            return Ok(self.section.clone());
        }
        self.section.compose_linear(&self.center.rotation())
    }
}

/// `sigma_P = (sqrt(d)^n / D) * P_d` where `P_d(1, x) = P(sqrt(d) x)` is
/// homogenized to degree `d`, then moved from the origin to `center`.
pub fn build_peak_section(p: &AffinePolynomial, d: u32, center: &ProjectivePoint) -> Result<PeakSection> {
    let n = p.nvars();
    if center.dim() != n {
        return Err(Error::invalid("center dimension differs from polynomial"));
    }
    if d < p.degree() {
        return Err(Error::invalid(format!("degree {d} below the degree {} of P", p.degree())));
    }
    let norm = peak_normalization(p);
    if norm == 0.0 {
        return Err(Error::invalid("P is the zero polynomial"));
    }
    let sd = (d as f64).sqrt();
    let lead = sd.powi(n as i32) / norm;
    let scaled_terms: Vec<(f64, Vec<u32>)> = p
        .terms()
        .map(|(c, e)| (lead * c * sd.powi(e.iter().sum::<u32>() as i32), e.to_vec()))
        .collect();
    let scaled = AffinePolynomial::from_terms(n, &scaled_terms)?;
    let mut section = scaled.homogenize(d)?;
    if !center.is_origin() {
        section = section.compose_linear(&transpose(&center.rotation()))?;
    }
    Ok(PeakSection { section, base: p.clone(), degree: d, center: center.clone(), normalization: norm })
}

/// Fraction of the `L^2` mass of `q` inside the ball of normalized
/// Fubini–Study radius `radius` around `center` (`n = 1, 2`).
pub fn mass_fraction_in_ball(q: &HomogeneousPolynomial, center: &ProjectivePoint, radius: f64) -> Result<f64> {
    let n = q.nvars() - 1;
    if center.dim() != n {
        return Err(Error::invalid("center dimension differs from polynomial"));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid("radius must be positive"));
    }
    let local = if center.is_origin() { q.clone() } else { q.compose_linear(&center.rotation())? };
    let angle = radius / fs_length_scale(n);
    if angle >= std::f64::consts::FRAC_PI_2 {
        return Ok(1.0);
    }
    let s_max = angle.tan().powi(2);
    let inside = radial_pairing(&local, &local, s_max)?;
    let total = radial_pairing(&local, &local, f64::INFINITY)?;
    Ok((inside / total).min(1.0))
}

/// `E |sigma(x)|` with `x` normalized, by Monte Carlo.
pub fn expected_pointwise_value(spec: &EnsembleSpec, x: &[f64], trials: usize) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    if x.len() != spec.nvars {
        return Err(Error::invalid("point dimension differs from ensemble"));
    }
    let u = ProjectivePoint::new(x)?;
    let s = Sampler::new(*spec)?;
    let xs: Vec<f64> = (0..trials as u64).map(|i| s.sample(i).evaluate(u.coords()).abs()).collect();
    Ok(Estimate::from_samples(&xs))
}

/// Exact `E |sigma(x)|` for the Kostlan ensemble: `sqrt((d+n)!/(n! d!)) / sqrt(pi)`.
pub fn expected_pointwise_exact(n: usize, d: u32) -> f64 {
    let w0 = (0.5 * (ln_factorial(d as u64 + n as u64) - ln_factorial(n as u64) - ln_factorial(d as u64))).exp();
    w0 / PI.sqrt()
}
