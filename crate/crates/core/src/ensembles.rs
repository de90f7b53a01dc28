//! Gaussian homogeneous polynomial ensembles.
//!
//! Coefficients are stored densely. For homogeneous polynomials in
//! `X_0..X_n` the monomials are listed in lexicographic order with `alpha_0`
//! descending, so `X_0^d` comes first. Affine polynomials in `y_1..y_n` reuse
//! the same list through `beta -> (k - |beta|, beta)`, which makes their order
//! graded (constant term first) and lets homogenization copy coefficients as
//! a prefix.

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::special::ln_factorial;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Number of monomials of degree `degree` in `nvars` variables.
pub fn monomial_count(nvars: usize, degree: u32) -> usize {
    if nvars == 0 {
        return usize::from(degree == 0);
    }
    binomial(degree as u64 + nvars as u64 - 1, nvars as u64 - 1) as usize
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Exponent table of all degree-`degree` monomials in `nvars` variables.
#[derive(Debug)]
pub struct MonomialBasis {
    nvars: usize,
    degree: u32,
    exps: Vec<u32>,
    raise: OnceLock<Vec<u32>>,
}

type BasisCache = Mutex<HashMap<(usize, u32), Arc<MonomialBasis>>>;

fn cache() -> &'static BasisCache {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl MonomialBasis {
    /// Shared basis for `(nvars, degree)`.
    pub fn get(nvars: usize, degree: u32) -> Arc<MonomialBasis> {
        let mut c = cache().lock().expect("basis cache poisoned");
        c.entry((nvars, degree))
            .or_insert_with(|| Arc::new(MonomialBasis::build(nvars, degree)))
            .clone()
    }

    fn build(nvars: usize, degree: u32) -> MonomialBasis {
        let mut exps = Vec::with_capacity(monomial_count(nvars, degree) * nvars);
        let mut cur = vec![0u32; nvars];
        fn rec(i: usize, rem: u32, cur: &mut Vec<u32>, out: &mut Vec<u32>) {
            let n = cur.len();
            if i + 1 == n {
                cur[i] = rem;
                out.extend_from_slice(cur);
                return;
            }
            for a in (0..=rem).rev() {
                cur[i] = a;
                rec(i + 1, rem - a, cur, out);
            }
        }
        if nvars > 0 {
            rec(0, degree, &mut cur, &mut exps);
        }
        MonomialBasis { nvars, degree, exps, raise: OnceLock::new() }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        if self.nvars == 0 {
            0
        } else {
            self.exps.len() / self.nvars
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exponent(&self, i: usize) -> &[u32] {
        &self.exps[i * self.nvars..(i + 1) * self.nvars]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.exps.chunks_exact(self.nvars.max(1))
    }

    /// Position of `alpha` in the list. `alpha` must have total degree
    /// `self.degree` and length `self.nvars`.
    pub fn rank(&self, alpha: &[u32]) -> usize {
        rank_of(alpha)
    }

    /// `raise()[i * nvars + j]` is the rank of `exponent(i) + e_j` in the
    /// basis of degree `degree + 1`.
    pub fn raise(&self) -> &[u32] {
        self.raise.get_or_init(|| {
            let mut out = Vec::with_capacity(self.exps.len());
            let mut a = vec![0u32; self.nvars];
            for e in self.iter() {
                for j in 0..self.nvars {
                    a.copy_from_slice(e);
                    a[j] += 1;
                    out.push(rank_of(&a) as u32);
                }
            }
            out
        })
    }
}

fn rank_of(alpha: &[u32]) -> usize {
    let n = alpha.len();
    let mut rem: u32 = alpha.iter().sum();
    let mut r = 0usize;
    for (i, &a) in alpha.iter().enumerate().take(n.saturating_sub(1)) {
        let v = (n - 1 - i) as u64;
        if rem > a {
            r += binomial((rem - a - 1) as u64 + v, v) as usize;
        }
        rem -= a;
    }
    r
}

/// Serialized form shared by polynomial types.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialRepr {
    pub nvars: usize,
    pub degree: u32,
    pub coeffs: Vec<f64>,
}

/// Homogeneous polynomial of degree `d` in `nvars = n + 1` variables.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct HomogeneousPolynomial {
    basis: Arc<MonomialBasis>,
    coeffs: Vec<f64>,
}

impl TryFrom<PolynomialRepr> for HomogeneousPolynomial {
    type Error = Error;
    fn try_from(r: PolynomialRepr) -> Result<Self> {
        HomogeneousPolynomial::new(r.nvars, r.degree, r.coeffs)
    }
}

impl From<HomogeneousPolynomial> for PolynomialRepr {
    fn from(p: HomogeneousPolynomial) -> Self {
        PolynomialRepr { nvars: p.nvars(), degree: p.degree(), coeffs: p.coeffs }
    }
}

impl PartialEq for HomogeneousPolynomial {
    fn eq(&self, o: &Self) -> bool {
        self.nvars() == o.nvars() && self.degree() == o.degree() && self.coeffs == o.coeffs
    }
}

impl HomogeneousPolynomial {
    pub fn new(nvars: usize, degree: u32, coeffs: Vec<f64>) -> Result<Self> {
        if nvars == 0 {
            return Err(Error::invalid("a homogeneous polynomial needs at least one variable"));
        }
        let basis = MonomialBasis::get(nvars, degree);
        if coeffs.len() != basis.len() {
            return Err(Error::invalid(format!(
                "expected {} coefficients for nvars={nvars}, degree={degree}, got {}",
                basis.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(HomogeneousPolynomial { basis, coeffs })
    }

    pub fn zero(nvars: usize, degree: u32) -> Self {
        let basis = MonomialBasis::get(nvars, degree);
        let coeffs = vec![0.0; basis.len()];
        HomogeneousPolynomial { basis, coeffs }
    }

    /// The monomial `X^alpha`.
    pub fn monomial(alpha: &[u32]) -> Self {
        let d = alpha.iter().sum();
        let mut p = Self::zero(alpha.len(), d);
        let r = p.basis.rank(alpha);
        p.coeffs[r] = 1.0;
        p
    }

    pub fn nvars(&self) -> usize {
        self.basis.nvars()
    }

    pub fn degree(&self) -> u32 {
        self.basis.degree()
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coefficient(&self, alpha: &[u32]) -> f64 {
        self.coeffs[self.basis.rank(alpha)]
    }

    /// Power tables `t[j][k] = v_j^k` for `k <= d`.
    fn powers(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let d = self.degree() as usize;
        v.iter()
            .map(|&x| {
                let mut t = Vec::with_capacity(d + 1);
                let mut p = 1.0;
                for _ in 0..=d {
                    t.push(p);
                    p *= x;
                }
                t
            })
            .collect()
    }

    pub fn evaluate(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.nvars(), "point dimension mismatch");
        let t = self.powers(v);
        let mut s = 0.0;
        for (c, e) in self.coeffs.iter().zip(self.basis.iter()) {
            if *c == 0.0 {
                continue;
            }
            let mut m = *c;
            for (j, &a) in e.iter().enumerate() {
                m *= t[j][a as usize];
            }
            s += m;
        }
        s
    }

    /// Value and Euclidean gradient at `v`.
    pub fn value_and_gradient(&self, v: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(v.len(), self.nvars(), "point dimension mismatch");
        let n = self.nvars();
        let t = self.powers(v);
        let mut s = 0.0;
        let mut g = vec![0.0; n];
        for (c, e) in self.coeffs.iter().zip(self.basis.iter()) {
            if *c == 0.0 {
                continue;
            }
            let mut m = *c;
            for (j, &a) in e.iter().enumerate() {
                m *= t[j][a as usize];
            }
            s += m;
            for k in 0..n {
                let a = e[k] as usize;
                if a == 0 {
                    continue;
                }
                let mut mk = *c * a as f64;
                for (j, &b) in e.iter().enumerate() {
                    let b = if j == k { b as usize - 1 } else { b as usize };
                    mk *= t[j][b];
                }
                g[k] += mk;
            }
        }
        (s, g)
    }

    /// Value at a complex point `re + i im`, returned as `(re, im)`.
    pub fn evaluate_complex(&self, re: &[f64], im: &[f64]) -> (f64, f64) {
        let d = self.degree() as usize;
        let t: Vec<Vec<(f64, f64)>> = re
            .iter()
            .zip(im)
            .map(|(&a, &b)| {
                let mut row = Vec::with_capacity(d + 1);
                let mut p = (1.0, 0.0);
                for _ in 0..=d {
                    row.push(p);
                    p = (p.0 * a - p.1 * b, p.0 * b + p.1 * a);
                }
                row
            })
            .collect();
        let (mut sr, mut si) = (0.0, 0.0);
        for (c, e) in self.coeffs.iter().zip(self.basis.iter()) {
            if *c == 0.0 {
                continue;
            }
            let mut m = (*c, 0.0);
            for (j, &a) in e.iter().enumerate() {
                let p = t[j][a as usize];
                m = (m.0 * p.0 - m.1 * p.1, m.0 * p.1 + m.1 * p.0);
            }
            sr += m.0;
            si += m.1;
        }
        (sr, si)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = self.clone();
        p.coeffs.iter_mut().for_each(|c| *c *= s);
        p
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        if self.nvars() != other.nvars() || self.degree() != other.degree() {
            return Err(Error::invalid("polynomial shapes differ"));
        }
        let mut p = self.clone();
        p.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += s * b);
        Ok(p)
    }

    /// Product with the linear form `sum_j l_j X_j`.
    pub fn mul_linear(&self, l: &[f64]) -> Self {
        let n = self.nvars();
        assert_eq!(l.len(), n);
        let mut out = Self::zero(n, self.degree() + 1);
        let raise = self.basis.raise();
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for j in 0..n {
                if l[j] != 0.0 {
                    out.coeffs[raise[i * n + j] as usize] += c * l[j];
                }
            }
        }
        out
    }

    /// `v -> self(A v)` for an `nvars x nvars` matrix given by rows.
    ///
    /// Uses nested Horner on the lexicographic block structure, so the
    /// cost is about `d^(nvars)` operations rather than a sum over
    /// multinomial expansions.
    pub fn compose_linear(&self, a: &[Vec<f64>]) -> Result<Self> {
        let n = self.nvars();
        if a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("composition matrix must be nvars x nvars"));
        }
        let d = self.degree();
        let last = &a[n - 1];
        let mut powers = Vec::with_capacity(d as usize + 1);
        let mut p = Self::monomial(&vec![0; n]);
        for _ in 0..=d {
            let next = p.mul_linear(last);
            powers.push(p);
            p = next;
        }
        Ok(compose_rec(&self.coeffs, n, d, a, &powers, n))
    }

    /// `<P, Q>` in the orthogonal-invariant inner product that makes
    /// `X^alpha / w_alpha` orthonormal.
    pub fn kostlan_inner(&self, other: &Self) -> Result<f64> {
        if self.nvars() != other.nvars() || self.degree() != other.degree() {
            return Err(Error::invalid("polynomial shapes differ"));
        }
        let w2 = kostlan_weights_sq(self.nvars(), self.degree());
        Ok(self.coeffs.iter().zip(&other.coeffs).zip(&w2).map(|((a, b), w)| a * b / w).sum())
    }

    pub fn kostlan_norm(&self) -> f64 {
        self.kostlan_inner(self).expect("same shape").sqrt()
    }

    /// Restriction to the affine chart `X_0 = 1`.
    pub fn dehomogenize(&self) -> AffinePolynomial {
        AffinePolynomial { basis: self.basis.clone(), coeffs: self.coeffs.clone() }
    }
}

fn compose_rec(
    coeffs: &[f64],
    nv: usize,
    m: u32,
    forms: &[Vec<f64>],
    powers_last: &[HomogeneousPolynomial],
    out_nvars: usize,
) -> HomogeneousPolynomial {
    if nv == 1 {
        return powers_last[m as usize].scale(coeffs[0]);
    }
    if coeffs.iter().all(|c| *c == 0.0) {
        return HomogeneousPolynomial::zero(out_nvars, m);
    }
    let mut acc: Option<HomogeneousPolynomial> = None;
    let mut offset = 0;
    for a in (0..=m).rev() {
        let sz = monomial_count(nv - 1, m - a);
        let s = compose_rec(&coeffs[offset..offset + sz], nv - 1, m - a, &forms[1..], powers_last, out_nvars);
        offset += sz;
        acc = Some(match acc {
            None => s,
            Some(prev) => {
                let mut t = prev.mul_linear(&forms[0]);
                t.coeffs.iter_mut().zip(&s.coeffs).for_each(|(x, y)| *x += y);
                t
            }
        });
    }
    acc.expect("at least one block")
}

/// Affine polynomial of degree at most `k` in `n` variables `y_1..y_n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct AffinePolynomial {
    // Basis of the homogenization in n + 1 variables; the first exponent
    // is the homogenizing slack and is ignored on evaluation.
    basis: Arc<MonomialBasis>,
    coeffs: Vec<f64>,
}

impl TryFrom<PolynomialRepr> for AffinePolynomial {
    type Error = Error;
    fn try_from(r: PolynomialRepr) -> Result<Self> {
        AffinePolynomial::new(r.nvars, r.degree, r.coeffs)
    }
}

impl From<AffinePolynomial> for PolynomialRepr {
    fn from(p: AffinePolynomial) -> Self {
        PolynomialRepr { nvars: p.nvars(), degree: p.degree(), coeffs: p.coeffs }
    }
}

impl AffinePolynomial {
    pub fn new(nvars: usize, degree: u32, coeffs: Vec<f64>) -> Result<Self> {
        let h = HomogeneousPolynomial::new(nvars + 1, degree, coeffs)?;
        Ok(h.dehomogenize())
    }

    /// Build from `(coefficient, exponent)` terms; the degree is the largest
    /// total degree present.
    pub fn from_terms(nvars: usize, terms: &[(f64, Vec<u32>)]) -> Result<Self> {
        if terms.iter().any(|(_, e)| e.len() != nvars) {
            return Err(Error::invalid("term exponent length differs from nvars"));
        }
        let degree = terms.iter().map(|(_, e)| e.iter().sum::<u32>()).max().unwrap_or(0);
        let basis = MonomialBasis::get(nvars + 1, degree);
        let mut coeffs = vec![0.0; basis.len()];
        let mut full = vec![0u32; nvars + 1];
        for (c, e) in terms {
            full[0] = degree - e.iter().sum::<u32>();
            full[1..].copy_from_slice(e);
            coeffs[basis.rank(&full)] += c;
        }
        Ok(AffinePolynomial { basis, coeffs })
    }

    pub fn nvars(&self) -> usize {
        self.basis.nvars() - 1
    }

    pub fn degree(&self) -> u32 {
        self.basis.degree()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Terms as `(coefficient, exponent of y)`, in storage order.
    pub fn terms(&self) -> impl Iterator<Item = (f64, &[u32])> {
        self.coeffs.iter().zip(self.basis.iter()).map(|(c, e)| (*c, &e[1..]))
    }

    pub fn evaluate(&self, y: &[f64]) -> f64 {
        self.value_and_gradient(y).0
    }

    pub fn value_and_gradient(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let n = self.nvars();
        assert_eq!(y.len(), n);
        let mut s = 0.0;
        let mut g = vec![0.0; n];
        for (c, e) in self.terms() {
            if c == 0.0 {
                continue;
            }
            let mut m = c;
            for (j, &a) in e.iter().enumerate() {
                m *= y[j].powi(a as i32);
            }
            s += m;
            for k in 0..n {
                if e[k] == 0 {
                    continue;
                }
                let mut mk = c * e[k] as f64;
                for (j, &a) in e.iter().enumerate() {
                    let a = if j == k { a - 1 } else { a };
                    mk *= y[j].powi(a as i32);
                }
                g[k] += mk;
            }
        }
        (s, g)
    }

    /// Homogenization to degree `d >= degree`.
    pub fn homogenize(&self, d: u32) -> Result<HomogeneousPolynomial> {
        if d < self.degree() {
            return Err(Error::invalid(format!("target degree {d} below polynomial degree {}", self.degree())));
        }
        let mut h = HomogeneousPolynomial::zero(self.nvars() + 1, d);
        // Graded order makes the lower-degree list a prefix of the higher one.
        h.coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        Ok(h)
    }
}

/// Squared Kostlan weight for `alpha` (length `n + 1`, total degree `d`).
fn ln_kostlan_weight_sq(alpha: &[u32]) -> f64 {
    let n = alpha.len() as u64 - 1;
    let d: u64 = alpha.iter().map(|&a| a as u64).sum();
    ln_factorial(d + n) - ln_factorial(n) - alpha.iter().map(|&a| ln_factorial(a as u64)).sum::<f64>()
}

/// `sqrt((d + n)! / (n! prod alpha_i!))`, the standard deviation scale of
/// the coefficient of `X^alpha` in the Kostlan ensemble.
pub fn kostlan_weight(n: usize, d: u32, alpha: &[u32]) -> Result<f64> {
    if alpha.len() != n + 1 {
        return Err(Error::invalid(format!("multi-index has {} entries, expected {}", alpha.len(), n + 1)));
    }
    if alpha.iter().sum::<u32>() != d {
        return Err(Error::invalid("multi-index degree differs from d"));
    }
    Ok((0.5 * ln_kostlan_weight_sq(alpha)).exp())
}

fn kostlan_weights_sq(nvars: usize, d: u32) -> Vec<f64> {
    MonomialBasis::get(nvars, d).iter().map(|a| ln_kostlan_weight_sq(a).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Kostlan,
    Kac,
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kostlan" => Ok(EnsembleKind::Kostlan),
            "kac" => Ok(EnsembleKind::Kac),
            other => Err(Error::invalid(format!("unknown ensemble kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnsembleKind::Kostlan => "kostlan",
            EnsembleKind::Kac => "kac",
        })
    }
}

/// Ensemble description. `nvars = n + 1` homogeneous variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub nvars: usize,
    pub degree: u32,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn kostlan(nvars: usize, degree: u32, seed: u64) -> Self {
        EnsembleSpec { kind: EnsembleKind::Kostlan, nvars, degree, seed }
    }

    pub fn kac(degree: u32, seed: u64) -> Self {
        EnsembleSpec { kind: EnsembleKind::Kac, nvars: 2, degree, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nvars < 2 {
            return Err(Error::invalid("ensembles need n >= 1, i.e. nvars >= 2"));
        }
        if self.degree < 1 {
            return Err(Error::invalid("degree must be at least 1"));
        }
        if self.kind == EnsembleKind::Kac && self.nvars != 2 {
            return Err(Error::invalid("the Kac ensemble is defined for one variable only"));
        }
        Ok(())
    }

    /// Standard deviation scale `w_alpha` of every coefficient, in storage
    /// order. Each coefficient is `w_alpha * N(0, 1/2)`.
    pub fn weights(&self) -> Vec<f64> {
        match self.kind {
            EnsembleKind::Kostlan => kostlan_weights_sq(self.nvars, self.degree).iter().map(|w| w.sqrt()).collect(),
            EnsembleKind::Kac => vec![1.0; monomial_count(self.nvars, self.degree)],
        }
    }
}

/// Weights cached for repeated sampling from one ensemble.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: EnsembleSpec,
    basis: Arc<MonomialBasis>,
    weights: Vec<f64>,
}

impl Sampler {
    pub fn new(spec: EnsembleSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Sampler { spec, basis: MonomialBasis::get(spec.nvars, spec.degree), weights: spec.weights() })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Draw `index` of the ensemble's stream family. The same `(seed, index)`
    /// always gives the same polynomial.
    pub fn sample(&self, index: u64) -> HomogeneousPolynomial {
        let mut r = rng::stream(self.spec.seed, Domain::Polynomial, index);
        let coeffs = self.weights.iter().map(|w| w * rng::half_normal_variance(&mut r)).collect();
        HomogeneousPolynomial { basis: self.basis.clone(), coeffs }
    }
}

/// One-shot sampling; prefer [`Sampler`] in loops.
pub fn sample_polynomial(spec: &EnsembleSpec, index: u64) -> Result<HomogeneousPolynomial> {
    Ok(Sampler::new(*spec)?.sample(index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn compensated_eval(p: &HomogeneousPolynomial, v: &[f64]) -> (f64, f64) {
        // Neumaier summation of exactly rounded products, plus the absolute
        // term sum used to scale the error bound.
        let mut s = 0.0f64;
        let mut c = 0.0f64;
        let mut abs = 0.0;
        for (coef, e) in p.coeffs().iter().zip(p.basis().iter()) {
            let mut m = *coef;
            for (j, &a) in e.iter().enumerate() {
                for _ in 0..a {
                    m *= v[j];
                }
            }
            abs += m.abs();
            let t = s + m;
            if s.abs() >= m.abs() {
                c += (s - t) + m;
            } else {
                c += (m - t) + s;
            }
            s = t;
        }
        (s + c, abs)
    }

    #[test]
    fn counts_and_order() {
        assert_eq!(monomial_count(3, 2), 6);
        let b = MonomialBasis::get(3, 2);
        let list: Vec<Vec<u32>> = b.iter().map(|e| e.to_vec()).collect();
        assert_eq!(list, vec![vec![2, 0, 0], vec![1, 1, 0], vec![1, 0, 1], vec![0, 2, 0], vec![0, 1, 1], vec![0, 0, 2]]);
        for (i, e) in b.iter().enumerate() {
            assert_eq!(b.rank(e), i);
        }
        let b = MonomialBasis::get(4, 7);
        assert_eq!(b.len(), monomial_count(4, 7));
        for (i, e) in b.iter().enumerate() {
            assert_eq!(b.rank(e), i);
        }
    }

    #[test]
    fn weights_examples() {
        assert!((kostlan_weight(1, 2, &[1, 1]).unwrap() - 6f64.sqrt()).abs() < 1e-12);
        assert!((kostlan_weight(2, 3, &[1, 1, 1]).unwrap() - 60f64.sqrt()).abs() < 1e-12);
        assert!(kostlan_weight(1, 2, &[1, 2]).is_err());
    }

    #[test]
    fn affine_graded_order_and_homogenize() {
        // 3 - y1 + 2 y1 y2 + y2^2
        let p = AffinePolynomial::from_terms(2, &[(3.0, vec![0, 0]), (-1.0, vec![1, 0]), (2.0, vec![1, 1]), (1.0, vec![0, 2])])
            .unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.coeffs()[0], 3.0);
        let y = [0.3, -1.2];
        let direct = 3.0 - 0.3 + 2.0 * 0.3 * -1.2 + 1.44;
        assert!((p.evaluate(&y) - direct).abs() < 1e-14);
        let h = p.homogenize(5).unwrap();
        let t = 1.7;
        let v = [t, t * y[0], t * y[1]];
        assert!((h.evaluate(&v) - t.powi(5) * direct).abs() < 1e-11);
        assert!(p.homogenize(1).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = Sampler::new(EnsembleSpec::kostlan(3, 6, 11)).unwrap();
        let p = s.sample(0);
        let v = [0.4, -0.7, 0.2];
        let (_, g) = p.value_and_gradient(&v);
        for k in 0..3 {
            let h = 1e-6;
            let mut a = v;
            let mut b = v;
            a[k] += h;
            b[k] -= h;
            let fd = (p.evaluate(&a) - p.evaluate(&b)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-5 * (1.0 + g[k].abs()));
        }
        // Euler identity.
        let (val, g) = p.value_and_gradient(&v);
        let e: f64 = v.iter().zip(&g).map(|(a, b)| a * b).sum();
        assert!((e - 6.0 * val).abs() < 1e-10 * val.abs().max(1.0));
    }

    #[test]
    fn evaluation_against_compensated_oracle() {
        let s = Sampler::new(EnsembleSpec::kostlan(3, 12, 5)).unwrap();
        let mut r = rng::stream(9, Domain::Misc, 0);
        for i in 0..200 {
            let p = s.sample(i);
            let v: Vec<f64> = (0..3).map(|_| rng::normal(&mut r)).collect();
            let (exact, abs) = compensated_eval(&p, &v);
            assert!((p.evaluate(&v) - exact).abs() <= 1e-12 * abs);
        }
    }

    #[test]
    fn complex_evaluation_on_real_axis() {
        let s = Sampler::new(EnsembleSpec::kostlan(2, 5, 1)).unwrap();
        let p = s.sample(3);
        let (re, im) = p.evaluate_complex(&[0.3, 1.1], &[0.0, 0.0]);
        assert!((re - p.evaluate(&[0.3, 1.1])).abs() < 1e-12);
        assert_eq!(im, 0.0);
        // (X0 + i X1)^2 at (1, i) style check: X0 X1 at (1, i) is i.
        let q = HomogeneousPolynomial::monomial(&[1, 1]);
        let (re, im) = q.evaluate_complex(&[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!((re, im), (0.0, 1.0));
    }

    #[test]
    fn serde_roundtrip_and_validation() {
        let p = Sampler::new(EnsembleSpec::kostlan(2, 3, 1)).unwrap().sample(0);
        let js = serde_json::to_string(&p).unwrap();
        let q: HomogeneousPolynomial = serde_json::from_str(&js).unwrap();
        assert_eq!(p, q);
        assert!(serde_json::from_str::<HomogeneousPolynomial>(r#"{"nvars":2,"degree":3,"coeffs":[1,2]}"#).is_err());
    }

    #[test]
    fn sampled_coefficient_variances() {
        let s = Sampler::new(EnsembleSpec::kostlan(3, 4, 2)).unwrap();
        let n = 20_000;
        let mut acc = vec![0.0; s.weights().len()];
        for i in 0..n {
            let p = s.sample(i);
            for (a, c) in acc.iter_mut().zip(p.coeffs()) {
                *a += c * c;
            }
        }
        for (a, w) in acc.iter().zip(s.weights()) {
            let var = a / n as f64;
            let target = 0.5 * w * w;
            // Relative standard error of a chi-square mean is sqrt(2/n) ~ 0.01.
            assert!((var / target - 1.0).abs() < 0.05, "{var} vs {target}");
        }
    }

    #[test]
    fn kostlan_inner_orthonormal_basis() {
        let b = MonomialBasis::get(3, 3);
        for e in b.iter() {
            let w = kostlan_weight(2, 3, e).unwrap();
            let p = HomogeneousPolynomial::monomial(e).scale(w);
            assert!((p.kostlan_norm() - 1.0).abs() < 1e-12);
        }
    }

    fn rotation(theta: f64, phi: f64, psi: f64) -> Vec<Vec<f64>> {
        let rz = |t: f64| [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]];
        let rx = |t: f64| [[1.0, 0.0, 0.0], [0.0, t.cos(), -t.sin()], [0.0, t.sin(), t.cos()]];
        let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
            let mut c = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        c[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
            c
        };
        let m = mul(mul(rz(theta), rx(phi)), rz(psi));
        m.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn composition_is_pointwise_and_invariant_distribution() {
        let a = rotation(0.4, 1.1, -0.3);
        let s = Sampler::new(EnsembleSpec::kostlan(3, 7, 3)).unwrap();
        let p = s.sample(1);
        let q = p.compose_linear(&a).unwrap();
        let v = [0.2, -0.5, 0.9];
        let av: Vec<f64> = a.iter().map(|r| r.iter().zip(&v).map(|(x, y)| x * y).sum()).collect();
        assert!((q.evaluate(&v) - p.evaluate(&av)).abs() < 1e-11);
        // The rotated ensemble has the same law: compare the coefficient of a
        // fixed monomial against its predicted normal law with a KS test.
        let alpha = [2u32, 3, 2];
        let w = kostlan_weight(2, 7, &alpha).unwrap();
        let xs: Vec<f64> = (0..3000).map(|i| s.sample(i).compose_linear(&a).unwrap().coefficient(&alpha) / w).collect();
        let normal = statrs::distribution::Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        use statrs::distribution::ContinuousCDF;
        let d = crate::stats::ks_statistic(&xs, |x| normal.cdf(x));
        assert!(crate::stats::ks_p_value(d, xs.len()) > 0.001, "KS d={d}");
    }

    #[test]
    fn compose_large_degree_is_fast_enough() {
        let a = rotation(0.1, 0.2, 0.3);
        let p = Sampler::new(EnsembleSpec::kostlan(3, 60, 3)).unwrap().sample(0);
        let q = p.compose_linear(&a).unwrap();
        assert!((q.kostlan_norm() / p.kostlan_norm() - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn kostlan_inner_rotation_invariant(t in -3.0f64..3.0, f in -3.0f64..3.0, g in -3.0f64..3.0, i in 0u64..1000) {
            let a = rotation(t, f, g);
            let s = Sampler::new(EnsembleSpec::kostlan(3, 5, 77)).unwrap();
            let p = s.sample(i);
            let q = s.sample(i + 1000);
            let lhs = p.compose_linear(&a).unwrap().kostlan_inner(&q.compose_linear(&a).unwrap()).unwrap();
            let rhs = p.kostlan_inner(&q).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + p.kostlan_norm() * q.kostlan_norm()));
        }

        #[test]
        fn rank_roundtrip(nv in 1usize..5, d in 0u32..9, pick in 0usize..10_000) {
            let b = MonomialBasis::get(nv, d);
            let i = pick % b.len();
            prop_assert_eq!(b.rank(b.exponent(i)), i);
        }
    }
}
