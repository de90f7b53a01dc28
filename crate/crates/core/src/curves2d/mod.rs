//! Topology of random real plane curves.
//!
//! A Kostlan ternary form is evaluated on an icosahedral grid of `S^2`, its
//! zero set is traced as closed cycles, and antipodal cycles are paired to
//! obtain the components in `RP^2`. Local configurations inside small balls
//! are read off in the affine chart centred at the ball.

pub mod planar;
pub mod sphere;

pub use planar::{canonical_signature, extract_contours, nesting_signature, PlanarContours, SquareGrid};
pub use sphere::{extract_topology, CurveTopology, ResolutionFlags, SphereCycle, SphereGrid};

use crate::ensembles::{EnsembleSpec, HomogeneousPolynomial, Sampler};
use crate::error::{Error, Result};
use crate::fubini::fs_volume_rp;
use crate::packing::{greedy_separated_set, Manifold, SeparatedSet};
use crate::stats::Estimate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Finest grid level we build (about 2.6 million vertices).
pub const MAX_LEVEL: u32 = 9;

/// Upper bound on the number of components of a real plane curve of
/// degree `d`.
pub fn harnack_bound(d: u32) -> usize {
    if d == 0 {
        return 0;
    }
    let d = d as i64;
    ((d - 1) * (d - 2) / 2 + 1) as usize
}

/// Coarsest grid level whose edges are at most `1 / (4d)` radians.
pub fn level_for_degree(d: u32) -> Result<u32> {
    if d == 0 {
        return Err(Error::invalid("degree must be positive"));
    }
    SphereGrid::level_for_edge(0.25 / d as f64).map_err(|_| {
        let edge = SphereGrid::get(MAX_LEVEL).max_edge;
        Error::invalid(format!(
            "degree {d} needs a grid beyond level {MAX_LEVEL}; the largest supported degree is {}",
            (0.25 / edge).floor()
        ))
    })
}

/// Topology of one polynomial at a given level.
pub fn topology_of(q: &HomogeneousPolynomial, level: u32) -> Result<CurveTopology> {
    if q.coeffs().iter().all(|c| *c == 0.0) {
        return Err(Error::invalid("the zero polynomial has no curve"));
    }
    let grid = SphereGrid::get(level);
    extract_topology(&grid.evaluate(q)?, &grid)
}

/// Hard checks every extracted curve must pass.
fn check_sample(t: &CurveTopology, d: u32) -> Result<()> {
    if t.b0 > harnack_bound(d) {
        return Err(Error::InvalidState(format!(
            "{} components exceed the bound {} for degree {d}",
            t.b0,
            harnack_bound(d)
        )));
    }
    if t.noncontractible != (d % 2) as usize {
        return Err(Error::InvalidState(format!(
            "degree {d} curve has {} non-contractible components",
            t.noncontractible
        )));
    }
    Ok(())
}

/// Result for one Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialTopology {
    pub trial: u64,
    pub level: u32,
    pub b0: usize,
    pub noncontractible: usize,
    /// Still flagged after refinement.
    pub flagged: bool,
    /// Was re-run one level finer.
    pub refined: bool,
}

/// Extracts trial `index`, re-running one level finer when flagged.
pub fn trial_topology(sampler: &Sampler, index: u64, level: u32) -> Result<(TrialTopology, CurveTopology)> {
    let q = sampler.sample(index);
    let d = q.degree();
    let mut t = topology_of(&q, level)?;
    let mut refined = false;
    if t.flags.any() && level < MAX_LEVEL {
        t = topology_of(&q, level + 1)?;
        refined = true;
    }
    check_sample(&t, d)?;
    let summary = TrialTopology {
        trial: index,
        level: t.level,
        b0: t.b0,
        noncontractible: t.noncontractible,
        flagged: t.flags.any(),
        refined,
    };
    Ok((summary, t))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BettiStats {
    pub d: u32,
    pub trials: usize,
    pub level: u32,
    pub mean_b0: f64,
    pub std_error: f64,
    pub max_b0_observed: usize,
    pub harnack_bound: usize,
    /// `mean_b0 / d`.
    pub per_degree: f64,
    /// `mean_b0 / (d Vol_FS(RP^2))`.
    pub normalized: f64,
    pub normalized_std_error: f64,
    pub refined: usize,
    pub residual_flagged_fraction: f64,
    pub samples: Vec<TrialTopology>,
}

/// Monte Carlo statistics of `b0` for Kostlan curves of degree `d`.
pub fn betti_statistics(d: u32, trials: usize, level: Option<u32>, seed: u64) -> Result<BettiStats> {
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let level = match level {
        Some(l) if l > MAX_LEVEL => return Err(Error::invalid(format!("grid level {l} exceeds {MAX_LEVEL}"))),
        Some(l) => l,
        None => level_for_degree(d)?,
    };
    let sampler = Sampler::new(EnsembleSpec::kostlan(3, d, seed))?;
    SphereGrid::get(level);
    let samples: Vec<TrialTopology> = (0..trials as u64)
        .into_par_iter()
        .map(|i| trial_topology(&sampler, i, level).map(|r| r.0))
        .collect::<Result<_>>()?;
    let b: Vec<f64> = samples.iter().map(|s| s.b0 as f64).collect();
    let e = Estimate::from_samples(&b);
    let vol = fs_volume_rp(2);
    Ok(BettiStats {
        d,
        trials,
        level,
        mean_b0: e.mean,
        std_error: e.std_error,
        max_b0_observed: samples.iter().map(|s| s.b0).max().unwrap_or(0),
        harnack_bound: harnack_bound(d),
        per_degree: e.mean / d as f64,
        normalized: e.mean / (d as f64 * vol),
        normalized_std_error: e.std_error / (d as f64 * vol),
        refined: samples.iter().filter(|s| s.refined).count(),
        residual_flagged_fraction: samples.iter().filter(|s| s.flagged).count() as f64 / trials as f64,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementStability {
    pub d: u32,
    pub level: u32,
    pub compared: usize,
    pub agreeing: usize,
}

impl RefinementStability {
    pub fn fraction(&self) -> f64 {
        if self.compared == 0 {
            1.0
        } else {
            self.agreeing as f64 / self.compared as f64
        }
    }
}

/// Compares `b0` at `level` and `level + 1` on trials unflagged at `level`.
pub fn refinement_stability(d: u32, trials: usize, level: u32, seed: u64) -> Result<RefinementStability> {
    if level >= MAX_LEVEL {
        return Err(Error::invalid("no finer level available"));
    }
    let sampler = Sampler::new(EnsembleSpec::kostlan(3, d, seed))?;
    let pairs: Vec<Option<bool>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let q = sampler.sample(i);
            let a = topology_of(&q, level)?;
            if a.flags.any() {
                return Ok(None);
            }
            let b = topology_of(&q, level + 1)?;
            Ok(Some(a.b0 == b.b0))
        })
        .collect::<Result<_>>()?;
    Ok(RefinementStability {
        d,
        level,
        compared: pairs.iter().flatten().count(),
        agreeing: pairs.iter().flatten().filter(|x| **x).count(),
    })
}

/// Crossing points of each cycle, for plotting.
pub fn polylines(values: &[f64], grid: &SphereGrid, topology: &CurveTopology) -> Vec<Vec<[f64; 3]>> {
    topology
        .cycles
        .iter()
        .map(|c| c.edges.iter().map(|&e| grid.crossing_point(values, e as usize)).collect())
        .collect()
}

/// Gnomonic chart at the unit vector `c`: `p -> (p.u, p.v) / (p.c)` for an
/// orthonormal frame `(c, u, v)`.
fn chart_frame(c: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if c[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = a[0] * c[0] + a[1] * c[1] + a[2] * c[2];
    let mut u = [a[0] - d * c[0], a[1] - d * c[1], a[2] - d * c[2]];
    let s = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    u = [u[0] / s, u[1] / s, u[2] / s];
    let v = [c[1] * u[2] - c[2] * u[1], c[2] * u[0] - c[0] * u[2], c[0] * u[1] - c[1] * u[0]];
    (u, v)
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Ball census for one sample: for each centre, the nesting signature of
/// the components lying wholly inside the ball of round radius `rho`
/// (`None` when the ball holds no whole component).
pub fn ball_signatures(
    values: &[f64],
    grid: &SphereGrid,
    topology: &CurveTopology,
    centers: &[[f64; 3]],
    rho: f64,
) -> Vec<Option<String>> {
    let cos_rho = rho.cos();
    let mut inside: Vec<Vec<Vec<[f64; 2]>>> = vec![Vec::new(); centers.len()];
    let frames: Vec<_> = centers.iter().map(chart_frame).collect();
    for (idx, is_line) in topology.components() {
        if is_line {
            continue;
        }
        // Either lift of an oval may be the one near a given centre.
        for ci in [idx, topology.cycles[idx].antipode] {
            let pts: Vec<[f64; 3]> =
                topology.cycles[ci].edges.iter().map(|&e| grid.crossing_point(values, e as usize)).collect();
            let p0 = pts[0];
            let Some(k) = centers.iter().position(|c| dot3(c, &p0) > cos_rho) else { continue };
            let c = centers[k];
            if pts.iter().all(|p| dot3(&c, p) > cos_rho) {
                let (u, v) = frames[k];
                inside[k].push(pts.iter().map(|p| [dot3(p, &u) / dot3(p, &c), dot3(p, &v) / dot3(p, &c)]).collect());
            }
        }
    }
    inside.into_iter().map(|cycles| (!cycles.is_empty()).then(|| nesting_signature(&cycles))).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusEntry {
    pub signature: String,
    /// Mean number of balls per sample whose content matches exactly.
    pub mean_hits: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentCensus {
    pub d: u32,
    pub trials: usize,
    pub radius_factor: f64,
    /// Round radius of each ball, `atan(R / sqrt d)`.
    pub rho: f64,
    pub centers: usize,
    pub level: u32,
    pub entries: Vec<CensusEntry>,
    pub mean_b0: f64,
    /// Largest per-sample excess of total catalog hits over `b0` (must be
    /// at most zero).
    pub max_excess: i64,
}

/// Counts, per sample and per ball of a maximal separated family on
/// `RP^2`, whether the components wholly inside the ball realize each
/// catalog signature.
pub fn component_census_in_balls(
    d: u32,
    trials: usize,
    radius_factor: f64,
    catalog: &[String],
    seed: u64,
) -> Result<ComponentCensus> {
    if !(radius_factor > 0.0) {
        return Err(Error::invalid("ball radius factor must be positive"));
    }
    let catalog: Vec<String> = catalog.iter().map(|s| canonical_signature(s)).collect::<Result<_>>()?;
    let rho = (radius_factor / (d as f64).sqrt()).atan();
    let family: SeparatedSet = greedy_separated_set(Manifold::ProjectiveSpace(2), rho, seed)?;
    let level = level_for_degree(d)?;
    let grid = SphereGrid::get(level);
    let sampler = Sampler::new(EnsembleSpec::kostlan(3, d, seed))?;
    let rows: Vec<(Vec<usize>, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let q = sampler.sample(i);
            let values = grid.evaluate(&q)?;
            let t = extract_topology(&values, &grid)?;
            check_sample(&t, d)?;
            let sigs = ball_signatures(&values, &grid, &t, &family.points, rho);
            let hits = catalog.iter().map(|s| sigs.iter().filter(|x| x.as_deref() == Some(s.as_str())).count()).collect();
            Ok((hits, t.b0))
        })
        .collect::<Result<_>>()?;
    let entries = catalog
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let xs: Vec<f64> = rows.iter().map(|r| r.0[k] as f64).collect();
            let e = Estimate::from_samples(&xs);
            CensusEntry { signature: s.clone(), mean_hits: e.mean, std_error: e.std_error }
        })
        .collect();
    let b: Vec<f64> = rows.iter().map(|r| r.1 as f64).collect();
    Ok(ComponentCensus {
        d,
        trials,
        radius_factor,
        rho,
        centers: family.len(),
        level,
        entries,
        mean_b0: Estimate::from_samples(&b).mean,
        max_excess: rows.iter().map(|r| r.0.iter().sum::<usize>() as i64 - r.1 as i64).max().unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harnack_values() {
        assert_eq!(harnack_bound(1), 1);
        assert_eq!(harnack_bound(2), 1);
        assert_eq!(harnack_bound(3), 2);
        assert_eq!(harnack_bound(4), 4);
        assert_eq!(harnack_bound(6), 11);
    }

    #[test]
    fn levels_grow_with_degree() {
        let mut last = 0;
        for d in [1, 2, 4, 8, 16] {
            let l = level_for_degree(d).unwrap();
            assert!(SphereGrid::get(l).max_edge <= 0.25 / d as f64);
            assert!(l >= last);
            last = l;
        }
        assert!(level_for_degree(1000).is_err());
    }

    #[test]
    fn lines_and_conics() {
        let s = betti_statistics(1, 50, None, 3).unwrap();
        assert_eq!(s.mean_b0, 1.0);
        let s = betti_statistics(2, 400, None, 3).unwrap();
        assert!(s.mean_b0 < 1.0 && s.mean_b0 > 0.0);
        assert!(s.max_b0_observed <= 1);
    }

    #[test]
    fn small_degree_statistics_respect_bounds() {
        for d in 3..=6 {
            let s = betti_statistics(d, 60, None, 11).unwrap();
            assert!(s.max_b0_observed <= s.harnack_bound);
            assert!(s.samples.iter().all(|t| t.noncontractible == (d % 2) as usize));
        }
    }

    #[test]
    fn census_of_explicit_curve() {
        // Two small ovals near the chart origin and one far away.
        let p = crate::ensembles::AffinePolynomial::from_terms(
            2,
            &[(1.0, vec![2, 0]), (1.0, vec![0, 2]), (-0.01, vec![0, 0])],
        )
        .unwrap();
        let q1 = p.homogenize(2).unwrap();
        let grid = SphereGrid::get(6);
        let values = grid.evaluate(&q1).unwrap();
        let t = extract_topology(&values, &grid).unwrap();
        let centers = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let sigs = ball_signatures(&values, &grid, &t, &centers, 0.3);
        assert_eq!(sigs[0].as_deref(), Some("()"));
        assert_eq!(sigs[1], None);
        // Too small a ball cuts the oval.
        let sigs = ball_signatures(&values, &grid, &t, &centers, 0.05);
        assert_eq!(sigs[0], None);
    }

    #[test]
    fn census_hits_bounded_by_components() {
        let cat = vec!["()".to_string(), "()()".to_string(), "(())".to_string()];
        let c = component_census_in_balls(16, 100, 1.6, &cat, 2).unwrap();
        assert!(c.max_excess <= 0);
        assert!(c.entries[0].mean_hits > 0.0);
        let empty = component_census_in_balls(8, 5, 1.0, &[], 2).unwrap();
        assert!(empty.entries.is_empty());
    }

    #[test]
    fn zero_polynomial_rejected() {
        let q = HomogeneousPolynomial::zero(3, 3);
        assert!(topology_of(&q, 2).is_err());
    }
}
