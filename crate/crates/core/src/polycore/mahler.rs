//! Mahler measure and the height comparisons built on it.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use super::poly::IntPoly;
use super::roots::{certified_roots_f64, complex_roots};
use crate::error::{domain, Result};

/// Mahler measure with a certified enclosure derived from the root radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mahler {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

fn accumulate(lead: f64, roots: impl Iterator<Item = (f64, f64, usize)>) -> Mahler {
    let (mut v, mut lo, mut hi) = (lead, lead, lead);
    for (modulus, radius, mult) in roots {
        for _ in 0..mult {
            v *= modulus.max(1.0);
            lo *= (modulus - radius).max(1.0);
            hi *= (modulus + radius).max(1.0);
        }
    }
    // Products of at most a handful of factors: a few ulps of slack.
    let slack = 1.0 + 64.0 * f64::EPSILON;
    Mahler {
        value: v,
        lower: lo / slack,
        upper: hi * slack,
    }
}

/// `M(P) = |a_d| prod max(1, |alpha_i|)`, roots certified within `tol`.
pub fn mahler_measure_enclosure(p: &IntPoly, tol: f64) -> Result<Mahler> {
    if p.is_zero() {
        return domain("Mahler measure of the zero polynomial");
    }
    let lead = p.leading().unwrap().abs().to_f64().unwrap_or(f64::INFINITY);
    if p.degree() == 0 {
        return Ok(Mahler {
            value: lead,
            lower: lead,
            upper: lead,
        });
    }
    let roots = complex_roots(p, tol)?;
    Ok(accumulate(
        lead,
        roots.iter().map(|r| (r.value().norm(), r.radius, r.multiplicity)),
    ))
}

pub fn mahler_measure(p: &IntPoly, tol: f64) -> Result<f64> {
    Ok(mahler_measure_enclosure(p, tol)?.value)
}

/// Double-precision route for small square-free inputs. `None` means the
/// roots could not be certified and the exact route should be used.
pub fn mahler_measure_f64(c: &[f64], tol: f64) -> Option<Mahler> {
    let d = c.iter().rposition(|&a| a != 0.0)?;
    let c = &c[..=d];
    let lead = c[d].abs();
    if d == 0 {
        return Some(Mahler {
            value: lead,
            lower: lead,
            upper: lead,
        });
    }
    let roots = certified_roots_f64(c, tol)?;
    Some(accumulate(lead, roots.iter().map(|(z, r)| (z.norm(), *r, 1))))
}

/// `binom(d, floor(d/2))^-1 H(P)` and `sqrt(d+1) H(P)`.
pub fn mahler_bounds(p: &IntPoly) -> Result<(f64, f64)> {
    let h = p.height()?.to_f64().unwrap_or(f64::INFINITY);
    let d = p.degree();
    Ok((h / central_binomial(d), ((d + 1) as f64).sqrt() * h))
}

/// `binom(d, floor(d/2))` as a float.
pub fn central_binomial(d: usize) -> f64 {
    let k = d / 2;
    (0..k).fold(1.0, |acc, i| acc * (d - i) as f64 / (i + 1) as f64).round()
}

/// `H(P1 ... Pk) / (H(P1) ... H(Pk))`.
pub fn product_height_ratio(ps: &[IntPoly]) -> Result<f64> {
    if ps.is_empty() {
        return domain("product_height_ratio needs at least one polynomial");
    }
    let mut prod = IntPoly::constant(1);
    let mut heights = BigInt::one();
    for p in ps {
        heights *= p.height()?;
        prod = &prod * p;
    }
    let ratio = BigRational::new(prod.height()?, heights);
    Ok(ratio.to_f64().unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    #[test]
    fn mahler_examples() {
        let m = mahler_measure(&p(&[-1, 1]), 1e-9).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        let (lo, hi) = mahler_bounds(&p(&[-1, 1])).unwrap();
        assert!(lo <= m && m <= hi && (hi - 2f64.sqrt()).abs() < 1e-15);
        assert!((mahler_measure(&p(&[-2, 0, 2]), 1e-9).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(mahler_measure(&p(&[5]), 1e-9).unwrap(), 5.0);
        assert!(mahler_measure(&IntPoly::zero(), 1e-9).is_err());
    }

    #[test]
    fn mahler_of_x2_minus_x_minus_1_is_golden_ratio() {
        let m = mahler_measure(&p(&[-1, -1, 1]), 1e-12).unwrap();
        assert!((m - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_is_tight_for_binomial_power() {
        // (X + 1)^4: M = 1, H = 6 = binom(4, 2).
        let f = p(&[1, 4, 6, 4, 1]);
        let m = mahler_measure_enclosure(&f, 1e-9).unwrap();
        let (lo, _) = mahler_bounds(&f).unwrap();
        assert_eq!(lo, 1.0);
        assert!(m.lower <= 1.0 && 1.0 <= m.upper);
    }

    #[test]
    fn central_binomials() {
        assert_eq!(central_binomial(0), 1.0);
        assert_eq!(central_binomial(1), 1.0);
        assert_eq!(central_binomial(4), 6.0);
        assert_eq!(central_binomial(5), 10.0);
    }

    #[test]
    fn product_height_examples() {
        assert_eq!(product_height_ratio(&[p(&[0, 1]), p(&[0, 1])]).unwrap(), 1.0);
        assert_eq!(product_height_ratio(&[p(&[1, 1]), p(&[-1, 1])]).unwrap(), 1.0);
        assert_eq!(product_height_ratio(&[p(&[1, 2]), p(&[1, 3])]).unwrap(), 1.0);
    }
}
