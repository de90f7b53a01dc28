//! Maximal `2 eps`-separated point sets on the unit sphere `S^n` and on
//! `RP^n = S^n / ±1`, for `n` in {1, 2}, with the round metric of radius 1.
//!
//! Construction is greedy: uniform random candidates are accepted when they
//! are more than `2 eps` away from every accepted point. Once random
//! sampling stalls, the remaining holes are filled deterministically by
//! trying the intersection points of neighbouring `2 eps` circles, which
//! are the corners of any uncovered region. A final batch of fresh uniform
//! points with no admissible candidate is the maximality certificate.

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::special::{sphere_volume, unit_ball_volume};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Manifold {
    Sphere(usize),
    ProjectiveSpace(usize),
}

impl Manifold {
    pub fn dim(&self) -> usize {
        match *self {
            Manifold::Sphere(n) | Manifold::ProjectiveSpace(n) => n,
        }
    }

    pub fn is_projective(&self) -> bool {
        matches!(self, Manifold::ProjectiveSpace(_))
    }

    /// Riemannian volume for the round metric of radius 1.
    pub fn volume(&self) -> f64 {
        match *self {
            Manifold::Sphere(n) => sphere_volume(n),
            Manifold::ProjectiveSpace(n) => sphere_volume(n) / 2.0,
        }
    }

    /// `Vol / (2^n Vol(B^n))`, the asymptotic lower bound for `eps^n N`.
    pub fn packing_bound(&self) -> f64 {
        let n = self.dim();
        self.volume() / (2f64.powi(n as i32) * unit_ball_volume(n))
    }

    /// `Vol / Vol(B^n)`, the asymptotic upper bound for `eps^n N`.
    pub fn packing_ceiling(&self) -> f64 {
        self.volume() / unit_ball_volume(self.dim())
    }

    fn validate(&self) -> Result<()> {
        match self.dim() {
            1 | 2 => Ok(()),
            n => Err(Error::invalid(format!("packing supports dimensions 1 and 2, got {n}"))),
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Manifold::Sphere(n) => write!(f, "S{n}"),
            Manifold::ProjectiveSpace(n) => write!(f, "RP{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingOptions {
    /// Fresh points per random batch and in the certificate batch.
    pub batch: usize,
    /// Hard cap on random batches before switching to hole filling.
    pub max_batches: usize,
}

impl Default for PackingOptions {
    fn default() -> Self {
        PackingOptions { batch: 100_000, max_batches: 400 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatedSet {
    pub manifold: Manifold,
    pub epsilon: f64,
    /// Unit vectors in `R^3` (last coordinate zero on `S^1`); projective
    /// points are canonicalized.
    pub points: Vec<[f64; 3]>,
    pub random_batches: usize,
    pub filled_holes: usize,
    pub certificate_batch: usize,
}

impl SeparatedSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Geodesic distance on the manifold.
    pub fn distance(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        let c = dot(a, b).clamp(-1.0, 1.0);
        let c = if self.manifold.is_projective() { c.abs() } else { c };
        c.acos()
    }

    /// Smallest pairwise distance, by brute force.
    pub fn min_separation(&self) -> f64 {
        let p = &self.points;
        (0..p.len())
            .into_par_iter()
            .map(|i| (i + 1..p.len()).map(|j| self.distance(&p[i], &p[j])).fold(f64::INFINITY, f64::min))
            .reduce(|| f64::INFINITY, f64::min)
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn neg(a: &[f64; 3]) -> [f64; 3] {
    [-a[0], -a[1], -a[2]]
}

fn canonical(p: [f64; 3]) -> [f64; 3] {
    for &c in &p {
        if c != 0.0 {
            return if c > 0.0 { p } else { neg(&p) };
        }
    }
    p
}

/// Uniform point on `S^n` embedded in `R^3`.
pub fn uniform_point<R: Rng>(n: usize, r: &mut R) -> [f64; 3] {
    loop {
        let mut v = [rng::normal(r), rng::normal(r), 0.0];
        if n == 2 {
            v[2] = rng::normal(r);
        }
        let s = dot(&v, &v).sqrt();
        if s > 1e-12 {
            return [v[0] / s, v[1] / s, v[2] / s];
        }
    }
}

/// Spatial hash of accepted points (both lifts in the projective case).
struct Buckets {
    cell: f64,
    // Squared chord of the separation distance.
    chord2: f64,
    map: HashMap<[i32; 3], Vec<u32>>,
    lifts: Vec<[f64; 3]>,
}

impl Buckets {
    fn new(epsilon: f64) -> Self {
        let chord = 2.0 * epsilon.sin();
        Buckets { cell: chord, chord2: chord * chord, map: HashMap::new(), lifts: Vec::new() }
    }

    fn key(&self, p: &[f64; 3]) -> [i32; 3] {
        [(p[0] / self.cell).floor() as i32, (p[1] / self.cell).floor() as i32, (p[2] / self.cell).floor() as i32]
    }

    /// Lifts in the cells within `reach` cells of `p`'s cell.
    fn within<'a>(&'a self, p: &[f64; 3], reach: i32) -> impl Iterator<Item = &'a [f64; 3]> + 'a {
        let k = self.key(p);
        let w = 2 * reach + 1;
        (0..w * w * w).flat_map(move |i| {
            let d = [i % w - reach, (i / w) % w - reach, i / (w * w) - reach];
            self.map
                .get(&[k[0] + d[0], k[1] + d[1], k[2] + d[2]])
                .into_iter()
                .flatten()
                .map(move |&j| &self.lifts[j as usize])
        })
    }

    fn neighbours<'a>(&'a self, p: &[f64; 3]) -> impl Iterator<Item = &'a [f64; 3]> + 'a {
        self.within(p, 1)
    }

    /// True when `p` is farther than the separation from every lift. The
    /// chord comparison carries a relative slack of 1e-12 toward rejection.
    fn admissible(&self, p: &[f64; 3]) -> bool {
        let lim = self.chord2 * (1.0 + 1e-12);
        self.neighbours(p).all(|q| {
            let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
            dot(&d, &d) > lim
        })
    }

    fn insert(&mut self, p: [f64; 3]) {
        let k = self.key(&p);
        self.map.entry(k).or_default().push(self.lifts.len() as u32);
        self.lifts.push(p);
    }
}

struct Builder {
    manifold: Manifold,
    buckets: Buckets,
    points: Vec<[f64; 3]>,
}

impl Builder {
    fn try_insert(&mut self, p: [f64; 3]) -> bool {
        if !self.buckets.admissible(&p) {
            return false;
        }
        if self.manifold.is_projective() {
            let c = canonical(p);
            self.buckets.insert(c);
            self.buckets.insert(neg(&c));
            self.points.push(c);
        } else {
            self.buckets.insert(p);
            self.points.push(p);
        }
        true
    }

    /// Candidate corners of uncovered regions around lift `i`.
    fn corner_candidates(&self, i: usize, radius: f64) -> Vec<[f64; 3]> {
        let p = self.buckets.lifts[i];
        let c = radius.cos();
        let mut out = Vec::new();
        if self.manifold.dim() == 1 {
            let (s, cs) = radius.sin_cos();
            for sg in [1.0, -1.0] {
                out.push([p[0] * cs - sg * p[1] * s, sg * p[0] * s + p[1] * cs, 0.0]);
            }
            return out;
        }
        // Circles of radius r around p and q meet only when d(p, q) < 2r,
        // a chord under two cells.
        for q in self.buckets.within(&p, 2) {
            let pq = dot(&p, q);
            if pq >= 1.0 - 1e-15 || pq <= -1.0 + 1e-15 {
                continue;
            }
            let a = c / (1.0 + pq);
            let x = cross(&p, q);
            let x2 = dot(&x, &x);
            let rad = 1.0 - a * a * 2.0 * (1.0 + pq);
            if rad < 0.0 {
                continue;
            }
            let b = (rad / x2).sqrt();
            for sg in [1.0, -1.0] {
                let v = [
                    a * (p[0] + q[0]) + sg * b * x[0],
                    a * (p[1] + q[1]) + sg * b * x[1],
                    a * (p[2] + q[2]) + sg * b * x[2],
                ];
                let s = dot(&v, &v).sqrt();
                out.push([v[0] / s, v[1] / s, v[2] / s]);
            }
        }
        out
    }

    /// One pass over all lifts trying circle-intersection corners.
    fn fill_pass(&mut self, epsilon: f64) -> usize {
        let radius = 2.0 * epsilon * (1.0 + 1e-9);
        let mut inserted = 0;
        let mut i = 0;
        while i < self.buckets.lifts.len() {
            for cand in self.corner_candidates(i, radius) {
                if self.try_insert(cand) {
                    inserted += 1;
                }
            }
            i += 1;
        }
        inserted
    }
}

/// Greedy maximal `2 eps`-separated set.
pub fn greedy_separated_set(manifold: Manifold, epsilon: f64, seed: u64) -> Result<SeparatedSet> {
    greedy_separated_set_with(manifold, epsilon, seed, PackingOptions::default())
}

pub fn greedy_separated_set_with(
    manifold: Manifold,
    epsilon: f64,
    seed: u64,
    opts: PackingOptions,
) -> Result<SeparatedSet> {
    manifold.validate()?;
    if !(epsilon > 0.0 && epsilon < PI / 8.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, pi/8), got {epsilon}")));
    }
    if opts.batch == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let n = manifold.dim();
    let mut b = Builder { manifold, buckets: Buckets::new(epsilon), points: Vec::new() };
    let mut stream = 0u64;
    let mut random_batches = 0;
    while random_batches < opts.max_batches {
        let mut r = rng::stream(seed, Domain::Packing, stream);
        stream += 1;
        random_batches += 1;
        let mut inserted = 0;
        for _ in 0..opts.batch {
            if b.try_insert(uniform_point(n, &mut r)) {
                inserted += 1;
            }
        }
        if inserted == 0 {
            break;
        }
    }
    let mut filled = 0;
    loop {
        loop {
            let k = b.fill_pass(epsilon);
            filled += k;
            if k == 0 {
                break;
            }
        }
        // Certificate batch; any admissible point is inserted and the
        // holes are revisited.
        let mut r = rng::stream(seed, Domain::Packing, stream);
        stream += 1;
        let mut inserted = 0;
        for _ in 0..opts.batch {
            if b.try_insert(uniform_point(n, &mut r)) {
                inserted += 1;
            }
        }
        if inserted == 0 {
            break;
        }
        filled += inserted;
    }
    Ok(SeparatedSet {
        manifold,
        epsilon,
        points: b.points,
        random_batches,
        filled_holes: filled,
        certificate_batch: opts.batch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringCheck {
    pub samples: usize,
    pub uncovered: usize,
    /// Largest distance from a sample to the set.
    pub max_distance: f64,
}

impl CoveringCheck {
    pub fn passed(&self) -> bool {
        self.uncovered == 0
    }
}

/// Checks that `samples` fresh uniform points all lie within `2 eps` of the
/// set.
pub fn covering_check(set: &SeparatedSet, samples: usize, seed: u64) -> CoveringCheck {
    let n = set.manifold.dim();
    let mut buckets = Buckets::new(set.epsilon);
    for p in &set.points {
        buckets.insert(*p);
        if set.manifold.is_projective() {
            buckets.insert(neg(p));
        }
    }
    let chunk = 10_000usize;
    let parts: Vec<(usize, f64)> = (0..samples.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, Domain::Misc, c as u64);
            let mut uncovered = 0;
            let mut worst = 0.0f64;
            for _ in 0..chunk.min(samples - c * chunk) {
                let x = uniform_point(n, &mut r);
                let best = buckets.neighbours(&x).map(|q| dot(&x, q)).fold(-1.0f64, f64::max);
                let d = best.clamp(-1.0, 1.0).acos();
                worst = worst.max(d);
                if d > 2.0 * set.epsilon {
                    uncovered += 1;
                }
            }
            (uncovered, worst)
        })
        .collect();
    CoveringCheck {
        samples,
        uncovered: parts.iter().map(|p| p.0).sum(),
        max_distance: parts.iter().map(|p| p.1).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackingStats {
    pub manifold: Manifold,
    pub epsilon: f64,
    pub count: usize,
    /// `eps^n N`.
    pub normalized: f64,
    pub bound: f64,
    pub ceiling: f64,
    pub covering: CoveringCheck,
}

/// Greedy sets for decreasing `eps`, with the normalized counts.
pub fn packing_sweep(manifold: Manifold, epsilons: &[f64], seed: u64) -> Result<Vec<PackingStats>> {
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("epsilon values must be strictly decreasing"));
    }
    let n = manifold.dim() as i32;
    epsilons
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let set = greedy_separated_set(manifold, eps, seed.wrapping_add(k as u64))?;
            let covering = covering_check(&set, 100_000, seed ^ 0x5eed_0000 ^ k as u64);
            Ok(PackingStats {
                manifold,
                epsilon: eps,
                count: set.len(),
                normalized: eps.powi(n) * set.len() as f64,
                bound: manifold.packing_bound(),
                ceiling: manifold.packing_ceiling(),
                covering,
            })
        })
        .collect()
}
