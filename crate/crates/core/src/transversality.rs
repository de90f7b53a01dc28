//! Quantitative transversality and the barrier lower bound for the
//! probability that a random section contains a prescribed local picture.
//!
//! A model hypersurface `Sigma` is a union of compact components of
//! `P^{-1}(0)` for an affine polynomial `P` with `0` a regular value, inside
//! a ball `B(0, R)`. Neighbourhoods `K ⊂ U` of `Sigma` are sublevel sets of
//! `|P|`. The peak section `sigma_P` carries the picture to the ball of
//! radius `R / sqrt(d)`; adding a random section that is small compared to
//! `a sigma_P` on `U` keeps the zero set trapped between `K` and `U`.
//!
//! Everything below works in the rescaled chart coordinate `y = sqrt(d) x`.

pub mod chart;

pub use chart::{ChartField, ChartGrid};

use crate::curves2d::{canonical_signature, extract_contours, nesting_signature, SquareGrid};
use crate::ensembles::{AffinePolynomial, EnsembleSpec, HomogeneousPolynomial, Sampler};
use crate::error::{Error, Result};
use crate::fubini::{build_peak_section, peak_normalization, ProjectivePoint};
use crate::rng::{self, Domain};
use crate::special::{erfc, ln_erfc, LogScale};
use crate::stats::Estimate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Safety factor applied to every grid minimum.
pub const SAFETY: f64 = 0.9;

/// On-disk form of a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    /// Affine dimension.
    pub n: usize,
    /// Each term is `[coefficient, e_1, ..., e_n]`.
    pub terms: Vec<Vec<f64>>,
    pub delta_k: f64,
    pub delta_u: f64,
    pub radius: f64,
    /// Nesting signature of `Sigma` (curves only), e.g. `"()"` or `"(())"`.
    pub signature: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypersurfaceModel {
    pub name: String,
    pub p: AffinePolynomial,
    pub delta_k: f64,
    pub delta_u: f64,
    pub radius: f64,
    pub signature: String,
}

impl HypersurfaceModel {
    pub fn new(
        name: &str,
        p: AffinePolynomial,
        delta_k: f64,
        delta_u: f64,
        radius: f64,
        signature: &str,
    ) -> Result<Self> {
        if !(delta_k > 0.0 && delta_k < delta_u) {
            return Err(Error::invalid("need 0 < delta_k < delta_u"));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid("radius must be positive"));
        }
        Ok(HypersurfaceModel {
            name: name.to_string(),
            p,
            delta_k,
            delta_u,
            radius,
            signature: canonical_signature(signature)?,
        })
    }

    pub fn from_file(f: ModelFile) -> Result<Self> {
        let terms = f
            .terms
            .iter()
            .map(|t| {
                if t.len() != f.n + 1 {
                    return Err(Error::invalid(format!("model term {t:?} needs {} entries", f.n + 1)));
                }
                let exps = t[1..]
                    .iter()
                    .map(|&e| {
                        if e >= 0.0 && e.fract() == 0.0 && e < 1e4 {
                            Ok(e as u32)
                        } else {
                            Err(Error::invalid(format!("exponent {e} is not a small non-negative integer")))
                        }
                    })
                    .collect::<Result<Vec<u32>>>()?;
                Ok((t[0], exps))
            })
            .collect::<Result<Vec<_>>>()?;
        let p = AffinePolynomial::from_terms(f.n, &terms)?;
        Self::new(&f.name, p, f.delta_k, f.delta_u, f.radius, &f.signature)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let f: ModelFile =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_file(f)
    }

    pub fn n(&self) -> usize {
        self.p.nvars()
    }

    /// Number of components of `Sigma`, read from the signature.
    pub fn b0(&self) -> usize {
        self.signature.matches('(').count()
    }

    /// Betti numbers `(b_0, b_1)` of `Sigma` for a union of circles.
    pub fn betti(&self) -> Vec<usize> {
        vec![self.b0(), self.b0()]
    }

    /// Unit circle, `K = {|P| <= 0.2}`, `U = {|P| < 0.4}`, `R = 2`.
    pub fn unit_circle() -> Self {
        let p = AffinePolynomial::from_terms(2, &[(1.0, vec![2, 0]), (1.0, vec![0, 2]), (-1.0, vec![0, 0])])
            .expect("valid terms");
        Self::new("circle", p, 0.2, 0.4, 2.0, "()").expect("valid model")
    }
}

/// Grid samples of `P` and `|grad P|` on `B(0, R)`.
struct ModelGrid {
    grid: SquareGrid,
    inside: Vec<bool>,
    values: Vec<f64>,
    grads: Vec<f64>,
}

impl ModelGrid {
    fn new(model: &HypersurfaceModel, cells: usize) -> Result<Self> {
        if model.n() != 2 {
            return Err(Error::invalid("model grids are implemented for n = 2"));
        }
        let r = model.radius;
        let grid = SquareGrid::centered(r, cells)?;
        let mut inside = Vec::with_capacity(grid.len());
        let mut values = Vec::with_capacity(grid.len());
        let mut grads = Vec::with_capacity(grid.len());
        for j in 0..grid.n {
            for i in 0..grid.n {
                let y = grid.point(i, j);
                inside.push(y[0] * y[0] + y[1] * y[1] < r * r);
                let (v, g) = model.p.value_and_gradient(&y);
                values.push(v);
                grads.push(g.iter().map(|t| t * t).sum::<f64>().sqrt());
            }
        }
        Ok(ModelGrid { grid, inside, values, grads })
    }

    fn in_u(&self, k: usize, m: &HypersurfaceModel) -> bool {
        self.inside[k] && self.values[k].abs() < m.delta_u
    }

    fn in_u_minus_k(&self, k: usize, m: &HypersurfaceModel) -> bool {
        self.in_u(k, m) && self.values[k].abs() > m.delta_k
    }
}

/// Transversality constants of a model at one grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEpsilon {
    pub delta: f64,
    pub epsilon: f64,
    pub cells: usize,
}

fn delta_epsilon_on(values: &[f64], grads: &[f64], in_u: &[bool], in_shell: &[bool]) -> Option<(f64, f64)> {
    let mut min_p = f64::INFINITY;
    for k in 0..values.len() {
        if in_shell[k] {
            min_p = min_p.min(values[k].abs());
        }
    }
    if !min_p.is_finite() {
        return None;
    }
    let delta = SAFETY * min_p;
    let mut min_g = f64::INFINITY;
    for k in 0..values.len() {
        if in_u[k] && values[k].abs() <= delta {
            min_g = min_g.min(grads[k]);
        }
    }
    if !min_g.is_finite() {
        return None;
    }
    Some((delta, SAFETY * min_g))
}

/// `delta = 0.9 min_{U \ K} |P|` and `epsilon = 0.9 min |grad P|` over the
/// points of `U` with `|P| <= delta`, refining the grid until both change
/// by less than 1%.
pub fn estimate_delta_epsilon(model: &HypersurfaceModel, start_cells: usize) -> Result<DeltaEpsilon> {
    let mut cells = start_cells.max(16);
    let mut last: Option<(f64, f64)> = None;
    while cells <= 4096 {
        let g = ModelGrid::new(model, cells)?;
        let in_u: Vec<bool> = (0..g.values.len()).map(|k| g.in_u(k, model)).collect();
        let shell: Vec<bool> = (0..g.values.len()).map(|k| g.in_u_minus_k(k, model)).collect();
        let Some((delta, epsilon)) = delta_epsilon_on(&g.values, &g.grads, &in_u, &shell) else {
            return Err(Error::CertificateFailure(format!("{}: U \\ K contains no grid point", model.name)));
        };
        if epsilon == 0.0 {
            return Err(Error::CertificateFailure(format!("{}: grad P vanishes on the zero level", model.name)));
        }
        if let Some((d0, e0)) = last {
            if (delta - d0).abs() <= 0.01 * d0 && (epsilon - e0).abs() <= 0.01 * e0 {
                return Ok(DeltaEpsilon { delta, epsilon, cells });
            }
        }
        last = Some((delta, epsilon));
        cells *= 2;
    }
    Err(Error::CertificateFailure(format!(
        "{}: transversality constants did not settle; K and U are too tight or 0 is not a regular value",
        model.name
    )))
}

/// Checks that `U` stays inside the ball and that the closed zero set of
/// `P` in the ball realizes the model's signature.
pub fn validate_model(model: &HypersurfaceModel, cells: usize) -> Result<()> {
    let g = ModelGrid::new(model, cells)?;
    let r = model.radius;
    // Boundary circle must avoid U.
    for k in 0..720 {
        let t = k as f64 * std::f64::consts::PI / 360.0;
        let v = model.p.evaluate(&[r * t.cos(), r * t.sin()]);
        if v.abs() < model.delta_u {
            return Err(Error::invalid(format!("{}: U reaches the boundary of B(0, R)", model.name)));
        }
    }
    let c = extract_contours(&g.values, &g.grid)?;
    let inside: Vec<Vec<[f64; 2]>> =
        c.cycles.into_iter().filter(|cyc| cyc.iter().all(|p| p[0] * p[0] + p[1] * p[1] < r * r)).collect();
    let sig = nesting_signature(&inside);
    if sig != model.signature {
        return Err(Error::invalid(format!(
            "{}: zero set has signature {sig:?}, model declares {:?}",
            model.name, model.signature
        )));
    }
    Ok(())
}

/// Constants of the rescaled peak section at degree `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledConstants {
    pub d: u32,
    /// Verified: `|sigma_P| > delta sqrt(d)^n` on `U_d \ K_d`.
    pub delta: f64,
    /// Verified: `|d sigma_P| > epsilon sqrt(d)^(n+1)` where `|sigma_P| <= delta sqrt(d)^n` on `U_d`.
    pub epsilon: f64,
    /// The same constants for the limit profile `P(y) exp(-|y|^2/2) / D`.
    pub delta_limit: f64,
    pub epsilon_limit: f64,
    pub cells: usize,
}

/// Measures the two transversality constants of `sigma_P` directly on the
/// grid of `U_d`, and compares them with the limit profile.
pub fn rescaled_constants(model: &HypersurfaceModel, d: u32, cells: usize) -> Result<RescaledConstants> {
    let n = model.n();
    let peak = build_peak_section(&model.p, d, &ProjectivePoint::origin(n))?;
    let cg = ChartGrid::new(n, model.radius, cells, d)?;
    let field = cg.evaluate(&peak.section)?;
    let mg = ModelGrid::new(model, cells)?;
    let len = mg.values.len();
    let in_u: Vec<bool> = (0..len).map(|k| mg.in_u(k, model)).collect();
    let shell: Vec<bool> = (0..len).map(|k| mg.in_u_minus_k(k, model)).collect();
    let sd = (d as f64).sqrt();
    let vs: Vec<f64> = field.values.iter().map(|v| v / sd.powi(n as i32)).collect();
    let gs: Vec<f64> = field.grad_norms.iter().map(|g| g / sd.powi(n as i32 + 1)).collect();
    let (delta, epsilon) = delta_epsilon_on(&vs, &gs, &in_u, &shell)
        .ok_or_else(|| Error::CertificateFailure("U_d \\ K_d is empty on the grid".into()))?;

    let dn = peak_normalization(&model.p);
    let mut lv = Vec::with_capacity(len);
    let mut lg = Vec::with_capacity(len);
    for j in 0..mg.grid.n {
        for i in 0..mg.grid.n {
            let y = mg.grid.point(i, j);
            let r2 = y[0] * y[0] + y[1] * y[1];
            let w = (-0.5 * r2).exp() / dn;
            let (p, g) = model.p.value_and_gradient(&y);
            lv.push(p * w);
            let g1 = (g[0] - y[0] * p) * w;
            let g2 = (g[1] - y[1] * p) * w;
            lg.push((g1 * g1 + g2 * g2).sqrt());
        }
    }
    let (delta_limit, epsilon_limit) =
        delta_epsilon_on(&lv, &lg, &in_u, &shell).ok_or_else(|| Error::CertificateFailure("empty shell".into()))?;
    if delta < 0.5 * delta_limit || epsilon < 0.5 * epsilon_limit || epsilon == 0.0 {
        return Err(Error::CertificateFailure(format!(
            "{} at d = {d}: peak-section constants ({delta:.4e}, {epsilon:.4e}) fall below half the limit \
             ({delta_limit:.4e}, {epsilon_limit:.4e})",
            model.name
        )));
    }
    Ok(RescaledConstants { d, delta, epsilon, delta_limit, epsilon_limit, cells })
}

/// Sup-norm constants of the Kostlan ensemble on a ball of radius `R / sqrt(d)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupConstants {
    pub n: usize,
    pub radius: f64,
    pub cells: usize,
    pub trials: usize,
    /// Per degree: `(d, mean sup|s| / sqrt(d)^n, std error, mean sup|ds| / sqrt(d)^(n+1), std error)`.
    pub rows: Vec<(u32, f64, f64, f64, f64)>,
    pub c1: f64,
    pub c2: f64,
}

/// Per-sample sup of `|s|` and `|ds|` over the ball, normalized.
fn sup_samples(n: usize, d: u32, radius: f64, cells: usize, trials: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let cg = ChartGrid::new(n, radius, cells, d)?;
    let sampler = Sampler::new(EnsembleSpec::kostlan(n + 1, d, seed))?;
    let sd = (d as f64).sqrt();
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let f = cg.evaluate(&sampler.sample(i))?;
            Ok((f.sup_abs(&cg.inside) / sd.powi(n as i32), f.sup_grad(&cg.inside) / sd.powi(n as i32 + 1)))
        })
        .collect()
}

/// `C1 = max_d (mean + 3 se)` of the normalized sup, and likewise `C2`.
pub fn estimate_c1_c2(
    n: usize,
    d_values: &[u32],
    trials: usize,
    radius: f64,
    cells: usize,
    seed: u64,
) -> Result<SupConstants> {
    if d_values.is_empty() || trials < 2 {
        return Err(Error::invalid("need at least one degree and two trials"));
    }
    let mut rows = Vec::new();
    let (mut c1, mut c2) = (0.0f64, 0.0f64);
    for &d in d_values {
        let s = sup_samples(n, d, radius, cells, trials, seed)?;
        let a = Estimate::from_samples(&s.iter().map(|x| x.0).collect::<Vec<_>>());
        let b = Estimate::from_samples(&s.iter().map(|x| x.1).collect::<Vec<_>>());
        c1 = c1.max(a.mean + 3.0 * a.std_error);
        c2 = c2.max(b.mean + 3.0 * b.std_error);
        rows.push((d, a.mean, a.std_error, b.mean, b.std_error));
    }
    Ok(SupConstants { n, radius, cells, trials, rows, c1, c2 })
}

/// Fraction of Kostlan samples with `sup|s| <= k C1 sqrt(d)^n` and
/// `sup|ds| <= k C2 sqrt(d)^(n+1)`; `k = 4` gives the filtered set.
pub fn markov_filter_mass(
    consts: &SupConstants,
    d: u32,
    trials: usize,
    multiplier: f64,
    seed: u64,
) -> Result<Estimate> {
    let s = sup_samples(consts.n, d, consts.radius, consts.cells, trials, seed)?;
    let xs: Vec<f64> = s
        .iter()
        .map(|&(a, b)| if a <= multiplier * consts.c1 && b <= multiplier * consts.c2 { 1.0 } else { 0.0 })
        .collect();
    Ok(Estimate::from_samples(&xs))
}

/// `1/4 erfc(M)` in log form, the Gaussian measure of the barrier set.
pub fn barrier_measure(m: f64) -> LogScale {
    if m < 20.0 {
        LogScale::from_value(0.25 * erfc(m))
    } else {
        LogScale::from_ln(0.25f64.ln() + ln_erfc(m))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierCertificate {
    pub model: String,
    pub d: u32,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "M")]
    pub m: f64,
    /// `c_tilde` as an `f64`; underflows to zero for large `M`.
    pub c_tilde: f64,
    pub ln_c_tilde: f64,
    pub model_delta: f64,
    pub model_epsilon: f64,
    pub delta_limit: f64,
    pub epsilon_limit: f64,
    pub indeterminate_fraction: f64,
}

impl BarrierCertificate {
    pub fn c_tilde_log(&self) -> LogScale {
        LogScale::from_ln(self.ln_c_tilde)
    }
}

/// Options for assembling a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateOptions {
    pub cells: usize,
    pub sup_trials: usize,
    pub seed: u64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions { cells: 96, sup_trials: 400, seed: 1 }
    }
}

/// Runs every step: model constants, peak-section constants at `d`, the
/// sup constants at `d`, and the barrier measure.
pub fn assemble_certificate(model: &HypersurfaceModel, d: u32, opts: CertificateOptions) -> Result<BarrierCertificate> {
    validate_model(model, opts.cells.max(128))?;
    let base = estimate_delta_epsilon(model, 64)?;
    let rc = rescaled_constants(model, d, opts.cells)?;
    let sup = estimate_c1_c2(model.n(), &[d], opts.sup_trials, model.radius, opts.cells, opts.seed)?;
    Ok(certificate_from(model, d, &base, &rc, &sup))
}

pub fn certificate_from(
    model: &HypersurfaceModel,
    d: u32,
    base: &DeltaEpsilon,
    rc: &RescaledConstants,
    sup: &SupConstants,
) -> BarrierCertificate {
    let m = (4.0 * sup.c1 / rc.delta).max(4.0 * sup.c2 / rc.epsilon);
    let ct = barrier_measure(m);
    BarrierCertificate {
        model: model.name.clone(),
        d,
        delta: rc.delta,
        epsilon: rc.epsilon,
        c1: sup.c1,
        c2: sup.c2,
        m,
        c_tilde: ct.value(),
        ln_c_tilde: ct.ln,
        model_delta: base.delta,
        model_epsilon: base.epsilon,
        delta_limit: rc.delta_limit,
        epsilon_limit: rc.epsilon_limit,
        indeterminate_fraction: 0.0,
    }
}

/// Closed zero-set cycles lying wholly in the region where `keep` holds,
/// and the number of saddle cells met.
fn closed_cycles(values: &[f64], grid: &SquareGrid, keep: impl Fn(f64, f64) -> bool) -> Result<(Vec<Vec<[f64; 2]>>, usize)> {
    let c = extract_contours(values, grid)?;
    let cycles = c.cycles.into_iter().filter(|cyc| cyc.iter().all(|p| keep(p[0], p[1]))).collect();
    Ok((cycles, c.saddle_cells))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresenceEstimate {
    pub d: u32,
    pub trials: usize,
    pub hits: usize,
    pub indeterminate: usize,
    pub probability: f64,
    pub std_error: f64,
    pub indeterminate_fraction: f64,
}

/// Monte Carlo probability that the zero set of a Kostlan section,
/// restricted to the ball of radius `R / sqrt(d)` at the chart origin, has
/// closed components realizing exactly the model's signature.
///
/// Trials where two branches meet inside one grid cell, or a closed
/// component spans fewer than six cell edges, are indeterminate.
pub fn presence_probability_mc(
    model: &HypersurfaceModel,
    d: u32,
    trials: usize,
    cells: usize,
    seed: u64,
) -> Result<PresenceEstimate> {
    if model.n() != 2 {
        return Err(Error::invalid("presence tests are implemented for plane curves"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let cg = ChartGrid::new(2, model.radius, cells, d)?;
    let sq = cg.square()?;
    let sampler = Sampler::new(EnsembleSpec::kostlan(3, d, seed))?;
    let r2 = model.radius * model.radius;
    let outcomes: Vec<Option<bool>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let f = cg.evaluate(&sampler.sample(i))?;
            let c = extract_contours(&f.values, &sq)?;
            if c.saddle_cells > 0 {
                return Ok(None);
            }
            let inside: Vec<Vec<[f64; 2]>> =
                c.cycles.into_iter().filter(|cyc| cyc.iter().all(|p| p[0] * p[0] + p[1] * p[1] < r2)).collect();
            if inside.iter().any(|cyc| cyc.len() < 6) {
                return Ok(None);
            }
            Ok(Some(nesting_signature(&inside) == model.signature))
        })
        .collect::<Result<_>>()?;
    let indeterminate = outcomes.iter().filter(|o| o.is_none()).count();
    let xs: Vec<f64> = outcomes.iter().flatten().map(|&h| if h { 1.0 } else { 0.0 }).collect();
    let hits = xs.iter().filter(|&&x| x == 1.0).count();
    let (probability, std_error) = if xs.is_empty() {
        (0.0, 0.0)
    } else {
        let e = Estimate::from_samples(&xs);
        (e.mean, e.std_error)
    };
    Ok(PresenceEstimate {
        d,
        trials,
        hits,
        indeterminate,
        probability,
        std_error,
        indeterminate_fraction: indeterminate as f64 / trials as f64,
    })
}

/// How the amplitude `a` along `sigma_P` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Amplitude {
    /// `a = M + |N(0, 1/2)|`, a point of the barrier set.
    Barrier,
    /// Fixed `a`, for control runs below the barrier.
    Fixed(f64),
    /// `tau = 0`: only `a sigma_P` remains.
    NoPerturbation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrapReport {
    pub d: u32,
    pub trials: usize,
    pub verified: usize,
    pub fraction: f64,
    pub rejections: usize,
    /// Smallest `min_{U_d \ K_d} |sigma_t| / (a delta sqrt(d)^n)` seen.
    pub worst_margin: f64,
    /// Grid points of `U_d` where the certificate's chain of bounds failed.
    pub chain_violations: usize,
    pub t_values_max: usize,
}

/// Samples `sigma = a sigma_P + tau` from the barrier set and verifies on the
/// grid that for every `t` on the homotopy grid `sigma_t = a sigma_P + t tau`
/// has no zero on `U_d \ K_d` and a constant number of closed components
/// inside `U_d`.
pub fn isotopy_trap_check(
    model: &HypersurfaceModel,
    cert: &BarrierCertificate,
    trials: usize,
    amplitude: Amplitude,
    cells: usize,
    seed: u64,
) -> Result<TrapReport> {
    if model.n() != 2 {
        return Err(Error::invalid("isotopy checks are implemented for plane curves"));
    }
    let d = cert.d;
    let n = 2;
    let sd = (d as f64).sqrt();
    let (vs, gs) = (sd.powi(n), sd.powi(n + 1));
    let peak = build_peak_section(&model.p, d, &ProjectivePoint::origin(n as usize))?;
    let sp = &peak.section;
    let sp_norm2 = sp.kostlan_inner(sp)?;
    if !(sp_norm2 > 1e-300) {
        return Err(Error::InvalidState("peak section is numerically zero".into()));
    }
    let cg = ChartGrid::new(2, model.radius, cells, d)?;
    let sq = cg.square()?;
    let fp = cg.evaluate(sp)?;
    let mg = ModelGrid::new(model, cells)?;
    let len = mg.values.len();
    let in_u: Vec<bool> = (0..len).map(|k| mg.in_u(k, model)).collect();
    let shell: Vec<bool> = (0..len).map(|k| mg.in_u_minus_k(k, model)).collect();
    let p_in_u = |y0: f64, y1: f64| y0 * y0 + y1 * y1 < model.radius * model.radius && model.p.evaluate(&[y0, y1]).abs() < model.delta_u;
    let sampler = Sampler::new(EnsembleSpec::kostlan(3, d, seed ^ 0x7a5_0000))?;
    let (c1, c2) = (cert.c1, cert.c2);

    let project = |raw: HomogeneousPolynomial| -> Result<HomogeneousPolynomial> {
        let c = raw.kostlan_inner(sp)? / sp_norm2;
        raw.add_scaled(sp, -c)
    };

    let results: Vec<(bool, usize, f64, usize, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let a = match amplitude {
                Amplitude::Barrier => {
                    let mut r = rng::stream(seed, Domain::Amplitude, trial);
                    cert.m + rng::half_normal_variance(&mut r).abs()
                }
                Amplitude::Fixed(a) => a,
                Amplitude::NoPerturbation => cert.m.max(1.0),
            };
            let mut rejections = 0usize;
            let ft = if amplitude == Amplitude::NoPerturbation {
                ChartField { values: vec![0.0; len], grad_norms: vec![0.0; len] }
            } else {
                loop {
                    let tau = project(sampler.sample((trial << 20) | rejections as u64))?;
                    let f = cg.evaluate(&tau)?;
                    if f.sup_abs(&cg.inside) <= 4.0 * c1 * vs && f.sup_grad(&cg.inside) <= 4.0 * c2 * gs {
                        break f;
                    }
                    rejections += 1;
                    if rejections > 10_000 {
                        return Err(Error::numerical("perturbation rejection loop did not terminate", None));
                    }
                }
            };
            // Chain: |a sigma_P| <= |t tau| on U_d forces |sigma_P| <= delta
            // sqrt(d)^n, which forces |d sigma_P| > epsilon sqrt(d)^(n+1).
            let mut chain_violations = 0;
            for k in 0..len {
                if in_u[k] && (a * fp.values[k]).abs() <= ft.values[k].abs() {
                    let small = fp.values[k].abs() <= cert.delta * vs;
                    if !small || fp.grad_norms[k] <= cert.epsilon * gs {
                        chain_violations += 1;
                    }
                }
            }
            let scale = a * cert.delta * vs;
            let eval_t = |t: f64| -> Result<(f64, usize)> {
                let vals: Vec<f64> = (0..len).map(|k| a * fp.values[k] + t * ft.values[k]).collect();
                let margin =
                    (0..len).filter(|&k| shell[k]).map(|k| vals[k].abs()).fold(f64::INFINITY, f64::min) / scale;
                let (cycles, _) = closed_cycles(&vals, &sq, p_in_u)?;
                Ok((margin, cycles.len()))
            };
            let mut ts: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
            let mut evals: Vec<(f64, usize)> = ts.iter().map(|&t| eval_t(t)).collect::<Result<_>>()?;
            // Halve steps next to small margins or count changes.
            for _ in 0..4 {
                let mut nts = vec![ts[0]];
                let mut nev = vec![evals[0]];
                let mut changed = false;
                for w in 1..ts.len() {
                    let (m0, c0) = evals[w - 1];
                    let (m1, c1) = evals[w];
                    if m0.min(m1) < 0.05 || c0 != c1 {
                        let tm = 0.5 * (ts[w - 1] + ts[w]);
                        nts.push(tm);
                        nev.push(eval_t(tm)?);
                        changed = true;
                    }
                    nts.push(ts[w]);
                    nev.push(evals[w]);
                }
                ts = nts;
                evals = nev;
                if !changed {
                    break;
                }
            }
            let worst = evals.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
            let count0 = evals[0].1;
            let ok = worst > 0.0 && evals.iter().all(|e| e.1 == count0) && count0 == model.b0();
            Ok((ok, rejections, worst, chain_violations, ts.len()))
        })
        .collect::<Result<_>>()?;
    let verified = results.iter().filter(|r| r.0).count();
    Ok(TrapReport {
        d,
        trials,
        verified,
        fraction: verified as f64 / trials as f64,
        rejections: results.iter().map(|r| r.1).sum(),
        worst_margin: results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min),
        chain_violations: results.iter().map(|r| r.3).sum(),
        t_values_max: results.iter().map(|r| r.4).max().unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x1_squared() -> HypersurfaceModel {
        let p = AffinePolynomial::from_terms(2, &[(1.0, vec![2, 0])]).unwrap();
        HypersurfaceModel::new("degenerate", p, 0.2, 0.4, 2.0, "").unwrap()
    }

    #[test]
    fn circle_constants() {
        let m = HypersurfaceModel::unit_circle();
        let de = estimate_delta_epsilon(&m, 64).unwrap();
        assert!((de.delta - 0.9 * 0.2).abs() < 0.01 * 0.18, "{de:?}");
        // |grad P| = 2|y| is smallest on the inner edge |y|^2 = 1 - delta.
        let eps = 0.9 * 2.0 * (1.0f64 - de.delta).sqrt();
        assert!((de.epsilon - eps).abs() < 0.01 * eps, "{de:?}");
    }

    #[test]
    fn circle_constants_against_dense_sampling() {
        // Independent oracle: random points of the annulus.
        let m = HypersurfaceModel::unit_circle();
        let de = estimate_delta_epsilon(&m, 64).unwrap();
        let mut r = rng::stream(5, Domain::Misc, 0);
        let mut min_shell = f64::INFINITY;
        for _ in 0..200_000 {
            let rad: f64 = 2.0 * rand::Rng::random::<f64>(&mut r).sqrt();
            let p = rad * rad - 1.0;
            if p.abs() > 0.2 && p.abs() < 0.4 {
                min_shell = min_shell.min(p.abs());
            }
        }
        assert!((de.delta - 0.9 * min_shell).abs() < 0.01 * de.delta);
    }

    #[test]
    fn scaling_doubles_constants() {
        let m = HypersurfaceModel::unit_circle();
        let p2 = AffinePolynomial::from_terms(2, &[(2.0, vec![2, 0]), (2.0, vec![0, 2]), (-2.0, vec![0, 0])]).unwrap();
        let m2 = HypersurfaceModel::new("circle2", p2, 0.4, 0.8, 2.0, "()").unwrap();
        let a = estimate_delta_epsilon(&m, 64).unwrap();
        let b = estimate_delta_epsilon(&m2, 64).unwrap();
        assert!((b.delta / a.delta - 2.0).abs() < 0.02);
        assert!((b.epsilon / a.epsilon - 2.0).abs() < 0.02);
    }

    #[test]
    fn degenerate_model_fails() {
        match estimate_delta_epsilon(&x1_squared(), 64) {
            Err(Error::CertificateFailure(_)) => {}
            other => panic!("expected certificate failure, got {other:?}"),
        }
    }

    #[test]
    fn model_validation() {
        validate_model(&HypersurfaceModel::unit_circle(), 128).unwrap();
        let mut bad = HypersurfaceModel::unit_circle();
        bad.signature = "()()".into();
        assert!(validate_model(&bad, 128).is_err());
        let mut small = HypersurfaceModel::unit_circle();
        small.radius = 1.05;
        assert!(validate_model(&small, 128).is_err());
    }

    #[test]
    fn model_file_roundtrip() {
        let text = r#"
            name = "circle"
            n = 2
            terms = [[1.0, 2, 0], [1.0, 0, 2], [-1.0, 0, 0]]
            delta_k = 0.2
            delta_u = 0.4
            radius = 2.0
            signature = "()"
        "#;
        let f: ModelFile = toml::from_str(text).unwrap();
        let m = HypersurfaceModel::from_file(f).unwrap();
        assert_eq!(m.p.evaluate(&[0.5, 0.5]), -0.5);
        assert_eq!(m.b0(), 1);
        let bad: std::result::Result<ModelFile, _> = toml::from_str(&format!("{text}\nextra = 1"));
        assert!(bad.is_err());
    }

    #[test]
    fn rescaled_constants_approach_limit() {
        let m = HypersurfaceModel::unit_circle();
        let mut ratios = Vec::new();
        for d in [30, 60, 120] {
            let rc = rescaled_constants(&m, d, 96).unwrap();
            ratios.push(rc.delta / rc.delta_limit);
        }
        // The Gaussian profile is approached from below with O(1/d) error.
        for (k, r) in ratios.iter().enumerate() {
            assert!(*r > 1.0 - 3.0 / [30.0, 60.0, 120.0][k], "{ratios:?}");
        }
        assert!((ratios[2] - 1.0).abs() < (ratios[0] - 1.0).abs() + 1e-9);
    }

    #[test]
    fn peak_at_minimal_degree() {
        let m = HypersurfaceModel::unit_circle();
        let rc = rescaled_constants(&m, 2, 96);
        // d = deg P: legal; constants may be far from the limit, so only
        // the error kind is constrained.
        if let Err(e) = rc {
            assert!(matches!(e, Error::CertificateFailure(_)));
        }
    }

    #[test]
    fn barrier_measure_values() {
        assert!((barrier_measure(0.0).value() - 0.25).abs() < 1e-15);
        let a = barrier_measure(10.0);
        let b = barrier_measure(30.0);
        let c = barrier_measure(160.0);
        assert!(a > b && b > c && c.is_positive());
        assert!((b.ln - (0.25f64.ln() + ln_erfc(30.0))).abs() < 1e-12);
    }

    #[test]
    fn sup_constants_and_filter() {
        let s = estimate_c1_c2(2, &[20], 200, 2.0, 48, 3).unwrap();
        // The sup dominates the value at the centre, whose mean is
        // sqrt(d)^n / sqrt(n! pi) to leading order.
        assert!(s.c1 > 1.0 / (2.0 * std::f64::consts::PI).sqrt());
        let f = markov_filter_mass(&s, 20, 200, 4.0, 17).unwrap();
        assert!(f.mean >= 0.5);
    }

    #[test]
    fn trap_with_zero_perturbation() {
        let m = HypersurfaceModel::unit_circle();
        let de = estimate_delta_epsilon(&m, 64).unwrap();
        let rc = rescaled_constants(&m, 30, 64).unwrap();
        let sup = estimate_c1_c2(2, &[30], 50, 2.0, 64, 1).unwrap();
        let cert = certificate_from(&m, 30, &de, &rc, &sup);
        let r = isotopy_trap_check(&m, &cert, 5, Amplitude::NoPerturbation, 64, 2).unwrap();
        assert_eq!(r.fraction, 1.0);
    }
}
