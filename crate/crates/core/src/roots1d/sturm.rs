//! Exact Sturm counting over big integers.
//!
//! Every `f64` is a dyadic rational, so scaling all coefficients by a common
//! power of two gives an integer polynomial with exactly the same roots. The
//! Sturm chain is built from sign-corrected pseudo-remainders and divided by
//! positive contents, so no step rounds.

use crate::error::{Error, Result};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, Zero};

type Poly = Vec<BigInt>;

fn decompose(x: f64) -> (i64, i32) {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    if exp == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1i64 << 52)), exp - 1075)
    }
}

fn to_integer_poly(a: &[f64]) -> Result<Poly> {
    if a.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("coefficients must be finite"));
    }
    let parts: Vec<(i64, i32)> = a.iter().map(|&c| decompose(c)).collect();
    let emin = parts.iter().filter(|(m, _)| *m != 0).map(|(_, e)| *e).min().unwrap_or(0);
    Ok(parts
        .iter()
        .map(|&(m, e)| if m == 0 { BigInt::zero() } else { BigInt::from(m) << ((e - emin) as usize) })
        .collect())
}

fn trim(p: &mut Poly) {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn is_zero(p: &Poly) -> bool {
    p.iter().all(|c| c.is_zero())
}

fn derivative(p: &Poly) -> Poly {
    let mut d: Poly = p.iter().enumerate().skip(1).map(|(k, c)| c * BigInt::from(k)).collect();
    if d.is_empty() {
        d.push(BigInt::zero());
    }
    d
}

/// A positive multiple of the remainder of `a` by `b`.
fn signed_prem(a: &Poly, b: &Poly) -> Poly {
    let db = b.len() - 1;
    let lb = b[db].clone();
    let mut r = a.clone();
    trim(&mut r);
    let mut steps = 0u32;
    while !is_zero(&r) && r.len() > db {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        for c in r.iter_mut() {
            *c *= &lb;
        }
        for i in 0..=db {
            r[i + dr - db] -= &lr * &b[i];
        }
        r.pop();
        trim(&mut r);
        steps += 1;
    }
    if lb.is_negative() && steps % 2 == 1 {
        for c in r.iter_mut() {
            *c = -c.clone();
        }
    }
    r
}

fn primitive(mut p: Poly) -> Poly {
    let g = p.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
    if !g.is_zero() && g != BigInt::from(1) {
        for c in p.iter_mut() {
            *c = c.div_floor(&g);
        }
    }
    p
}

fn sign(x: &BigInt) -> i32 {
    match x.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

fn variations(signs: impl Iterator<Item = i32>) -> usize {
    let mut last = 0;
    let mut v = 0;
    for s in signs.filter(|s| *s != 0) {
        if last != 0 && s != last {
            v += 1;
        }
        last = s;
    }
    v
}

/// Number of distinct real roots of `sum a_k t^k`.
pub fn sturm_count(a: &[f64]) -> Result<usize> {
    let mut p0 = to_integer_poly(a)?;
    trim(&mut p0);
    if is_zero(&p0) {
        return Err(Error::invalid("the zero polynomial has no finite root count"));
    }
    if p0.len() == 1 {
        return Ok(0);
    }
    let p0 = primitive(p0);
    let p1 = primitive(derivative(&p0));
    let mut chain = vec![p0, p1];
    loop {
        let n = chain.len();
        let r = signed_prem(&chain[n - 2], &chain[n - 1]);
        if is_zero(&r) {
            break;
        }
        let neg: Poly = r.into_iter().map(|c| -c).collect();
        chain.push(primitive(neg));
    }
    let at_pos = variations(chain.iter().map(|p| sign(p.last().expect("non-empty"))));
    let at_neg = variations(chain.iter().map(|p| {
        let s = sign(p.last().expect("non-empty"));
        if (p.len() - 1) % 2 == 1 {
            -s
        } else {
            s
        }
    }));
    Ok(at_neg - at_pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_cases() {
        assert_eq!(sturm_count(&[1.0, 0.0, 1.0]).unwrap(), 0);
        assert_eq!(sturm_count(&[0.0, -1.0, 0.0, 1.0]).unwrap(), 3);
        // (t - 1)^2 (t + 2) = t^3 - 3t + 2
        assert_eq!(sturm_count(&[2.0, -3.0, 0.0, 1.0]).unwrap(), 2);
        assert_eq!(sturm_count(&[5.0]).unwrap(), 0);
        assert!(sturm_count(&[0.0, 0.0]).is_err());
        // Trailing zeros are ignored.
        assert_eq!(sturm_count(&[-1.0, 0.0, 1.0, 0.0]).unwrap(), 2);
    }

    #[test]
    fn wide_dynamic_range() {
        // (t - 1e-8)(t - 1)(t + 1e6)
        let r = [1e-8, 1.0, -1e6];
        let a = [-r[0] * r[1] * r[2], r[0] * r[1] + r[0] * r[2] + r[1] * r[2], -(r[0] + r[1] + r[2]), 1.0];
        assert_eq!(sturm_count(&a).unwrap(), 3);
    }

    #[test]
    fn decompose_roundtrip() {
        for &x in &[1.0, -0.375, 1e-310, 3.5e200, -7.0] {
            let (m, e) = decompose(x);
            assert_eq!(m as f64 * 2f64.powi(e), x);
        }
    }
}
