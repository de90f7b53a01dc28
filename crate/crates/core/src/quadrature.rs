//! Adaptive Gauss–Kronrod (7/15) integration and fixed Gauss–Legendre rules.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator { abs_tol: 1e-10, rel_tol: 1e-10, max_intervals: 2000 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error).then(o.a.total_cmp(&self.a))
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    let value = k * h;
    let error = ((k - g) * h).abs();
    Piece { a, b, value, error }
}

impl Integrator {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Integrator { abs_tol, rel_tol, ..Default::default() }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Quadrature> {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integral over `[points[0], points[last]]`, with the interior points
    /// used as initial subdivision breaks (kinks, peaks).
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<Quadrature> {
        if points.len() < 2 || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("quadrature needs at least two finite break points"));
        }
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("quadrature break points must be sorted"));
        }
        let mut heap: BinaryHeap<Piece> = points
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| gk15(&f, w[0], w[1]))
            .collect();
        if heap.is_empty() {
            return Ok(Quadrature { value: 0.0, error: 0.0, intervals: 0 });
        }
        loop {
            let (value, error) = totals(&heap);
            if !value.is_finite() {
                return Err(Error::numerical("non-finite integrand value", None));
            }
            let tol = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= tol {
                return Ok(Quadrature { value, error, intervals: heap.len() });
            }
            if heap.len() >= self.max_intervals {
                return Err(Error::numerical(
                    format!("quadrature did not converge: error {error:.3e} > {tol:.3e}"),
                    Some(value),
                ));
            }
            let worst = heap.pop().expect("non-empty heap");
            let m = 0.5 * (worst.a + worst.b);
            if m <= worst.a || m >= worst.b {
                return Err(Error::numerical("interval too small to subdivide", Some(value)));
            }
            heap.push(gk15(&f, worst.a, m));
            heap.push(gk15(&f, m, worst.b));
        }
    }

    /// Integral over `[a, +inf)` through the substitution `x = a + t/(1-t)`.
    pub fn integrate_to_infinity<F: Fn(f64) -> f64>(&self, f: F, a: f64) -> Result<Quadrature> {
        let g = |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            let v = f(a + t / s) / (s * s);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        self.integrate(g, 0.0, 1.0)
    }
}

fn totals(heap: &BinaryHeap<Piece>) -> (f64, f64) {
    // Sum in a fixed order so results do not depend on heap layout.
    let mut pieces: Vec<&Piece> = heap.iter().collect();
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let v: Vec<f64> = pieces.iter().map(|p| p.value).collect();
    let e: Vec<f64> = pieces.iter().map(|p| p.error).collect();
    (crate::special::pairwise_sum(&v), crate::special::pairwise_sum(&e))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, exact for degree `2n-1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 0 {
                break;
            }
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
