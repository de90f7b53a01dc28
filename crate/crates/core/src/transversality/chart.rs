//! Fast evaluation of sections on a tensor grid of the affine chart.
//!
//! Grid points are given in rescaled coordinates `y` (the ball `|y| < R`);
//! the section is evaluated at `x = y / sqrt(d)` in the chart `X_0 = 1`,
//! trivialized by the unit-norm frame so values are pointwise norms.

use crate::curves2d::SquareGrid;
use crate::ensembles::HomogeneousPolynomial;
use crate::error::{Error, Result};

/// Tensor grid over `[-R, R]^n`, `n` in {1, 2}, with a mask for `|y| < R`.
#[derive(Debug, Clone)]
pub struct ChartGrid {
    pub n: usize,
    pub radius: f64,
    pub cells: usize,
    pub axis: Vec<f64>,
    /// Rescaling `x = y * scale`.
    pub scale: f64,
    pub inside: Vec<bool>,
}

/// Values and Euclidean chart-gradient norms at every grid point.
#[derive(Debug, Clone)]
pub struct ChartField {
    pub values: Vec<f64>,
    pub grad_norms: Vec<f64>,
}

impl ChartField {
    /// Largest `|value|` over the masked points.
    pub fn sup_abs(&self, mask: &[bool]) -> f64 {
        self.values.iter().zip(mask).filter(|(_, m)| **m).map(|(v, _)| v.abs()).fold(0.0, f64::max)
    }

    pub fn sup_grad(&self, mask: &[bool]) -> f64 {
        self.grad_norms.iter().zip(mask).filter(|(_, m)| **m).map(|(v, _)| *v).fold(0.0, f64::max)
    }
}

impl ChartGrid {
    /// `cells` cells per side over the ball of rescaled radius `radius`, for
    /// sections of degree `d`.
    pub fn new(n: usize, radius: f64, cells: usize, d: u32) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::invalid(format!("chart grids support n = 1, 2, got {n}")));
        }
        if cells < 2 || !(radius > 0.0) || d == 0 {
            return Err(Error::invalid("chart grid needs cells >= 2, radius > 0 and d >= 1"));
        }
        let m = cells + 1;
        let axis: Vec<f64> = (0..m).map(|i| -radius + 2.0 * radius * i as f64 / cells as f64).collect();
        let inside = match n {
            1 => axis.iter().map(|y| y.abs() < radius).collect(),
            _ => {
                let mut v = Vec::with_capacity(m * m);
                for j in 0..m {
                    for i in 0..m {
                        v.push(axis[i] * axis[i] + axis[j] * axis[j] < radius * radius);
                    }
                }
                v
            }
        };
        Ok(ChartGrid { n, radius, cells, axis, scale: 1.0 / (d as f64).sqrt(), inside })
    }

    pub fn len(&self) -> usize {
        self.axis.len().pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Rescaled coordinates of point `k`.
    pub fn point(&self, k: usize) -> Vec<f64> {
        let m = self.axis.len();
        match self.n {
            1 => vec![self.axis[k]],
            _ => vec![self.axis[k % m], self.axis[k / m]],
        }
    }

    /// The same grid as a planar contour grid (`n = 2`).
    pub fn square(&self) -> Result<SquareGrid> {
        SquareGrid::new(self.axis.len(), -self.radius, self.radius)
    }

    /// Evaluates `q` (section of degree `d`, `n + 1` variables).
    pub fn evaluate(&self, q: &HomogeneousPolynomial) -> Result<ChartField> {
        if q.nvars() != self.n + 1 {
            return Err(Error::invalid("polynomial does not match the chart dimension"));
        }
        let d = q.degree() as usize;
        let xs: Vec<f64> = self.axis.iter().map(|y| y * self.scale).collect();
        let m = xs.len();
        // powers[i][k] = xs[i]^k
        let mut powers = vec![0.0; m * (d + 1)];
        for (i, &x) in xs.iter().enumerate() {
            let row = &mut powers[i * (d + 1)..(i + 1) * (d + 1)];
            row[0] = 1.0;
            for k in 1..=d {
                row[k] = row[k - 1] * x;
            }
        }
        let pw = |i: usize, k: usize| powers[i * (d + 1) + k];
        let df = d as f64;
        match self.n {
            1 => {
                let mut c = vec![0.0; d + 1];
                for (coef, e) in q.coeffs().iter().zip(q.basis().iter()) {
                    c[e[1] as usize] = *coef;
                }
                let mut values = Vec::with_capacity(m);
                let mut grads = Vec::with_capacity(m);
                for (i, &x) in xs.iter().enumerate() {
                    let mut v = 0.0;
                    let mut dv = 0.0;
                    for k in 0..=d {
                        v += c[k] * pw(i, k);
                        if k > 0 {
                            dv += k as f64 * c[k] * pw(i, k - 1);
                        }
                    }
                    let r2 = 1.0 + x * x;
                    let w = r2.powf(-df / 2.0);
                    values.push(v * w);
                    grads.push(((dv - df * x * v / r2) * w).abs());
                }
                Ok(ChartField { values, grad_norms: grads })
            }
            _ => {
                // c[a1][a2], a1 + a2 <= d, stored densely.
                let mut c = vec![0.0; (d + 1) * (d + 1)];
                for (coef, e) in q.coeffs().iter().zip(q.basis().iter()) {
                    c[e[1] as usize * (d + 1) + e[2] as usize] = *coef;
                }
                // b[a1][j] = sum_a2 c[a1][a2] x_j^a2 and its x2-derivative.
                let mut b = vec![0.0; (d + 1) * m];
                let mut b2 = vec![0.0; (d + 1) * m];
                for a1 in 0..=d {
                    for j in 0..m {
                        let (mut s, mut s2) = (0.0, 0.0);
                        for a2 in 0..=d - a1 {
                            let cc = c[a1 * (d + 1) + a2];
                            s += cc * pw(j, a2);
                            if a2 > 0 {
                                s2 += a2 as f64 * cc * pw(j, a2 - 1);
                            }
                        }
                        b[a1 * m + j] = s;
                        b2[a1 * m + j] = s2;
                    }
                }
                let mut values = vec![0.0; m * m];
                let mut grads = vec![0.0; m * m];
                for j in 0..m {
                    for i in 0..m {
                        let (mut v, mut v1, mut v2) = (0.0, 0.0, 0.0);
                        for a1 in 0..=d {
                            let p = pw(i, a1);
                            v += p * b[a1 * m + j];
                            v2 += p * b2[a1 * m + j];
                            if a1 > 0 {
                                v1 += a1 as f64 * pw(i, a1 - 1) * b[a1 * m + j];
                            }
                        }
                        let (x1, x2) = (xs[i], xs[j]);
                        let r2 = 1.0 + x1 * x1 + x2 * x2;
                        let w = r2.powf(-df / 2.0);
                        let g1 = (v1 - df * x1 * v / r2) * w;
                        let g2 = (v2 - df * x2 * v / r2) * w;
                        values[j * m + i] = v * w;
                        grads[j * m + i] = (g1 * g1 + g2 * g2).sqrt();
                    }
                }
                Ok(ChartField { values, grad_norms: grads })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{EnsembleSpec, Sampler};
    use crate::fubini::chart_value_and_gradient;

    #[test]
    fn matches_pointwise_chart_evaluation() {
        for (n, d) in [(1usize, 9u32), (2, 7), (2, 30)] {
            let q = Sampler::new(EnsembleSpec::kostlan(n + 1, d, 4)).unwrap().sample(1);
            let g = ChartGrid::new(n, 2.0, 10, d).unwrap();
            let f = g.evaluate(&q).unwrap();
            for k in 0..g.len() {
                let x: Vec<f64> = g.point(k).iter().map(|y| y * g.scale).collect();
                let (s, grad) = chart_value_and_gradient(&q, &x);
                let gn = grad.iter().map(|t| t * t).sum::<f64>().sqrt();
                assert!((f.values[k] - s).abs() < 1e-10 * (1.0 + s.abs()), "n={n} d={d}");
                assert!((f.grad_norms[k] - gn).abs() < 1e-9 * (1.0 + gn));
            }
        }
    }

    #[test]
    fn mask_is_the_open_ball() {
        let g = ChartGrid::new(2, 1.0, 4, 3).unwrap();
        let inside = g.inside.iter().filter(|b| **b).count();
        // Points (0,0), (±0.5,0), (0,±0.5), (±0.5,±0.5).
        assert_eq!(inside, 9);
        assert!(ChartGrid::new(3, 1.0, 4, 3).is_err());
    }
}
