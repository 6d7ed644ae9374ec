//! Resultants and discriminants through exact Sylvester determinants.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::poly::IntPoly;
use crate::error::{domain, Result};

/// Sylvester matrix of `p` (degree m) and `q` (degree n), size m+n.
/// Rows hold coefficients from the leading term down.
pub fn sylvester_matrix(p: &IntPoly, q: &IntPoly) -> Vec<Vec<BigInt>> {
    let m = p.degree();
    let n = q.degree();
    let size = m + n;
    let mut rows = Vec::with_capacity(size);
    for shift in 0..n {
        let mut row = vec![BigInt::zero(); size];
        for (k, c) in p.coeffs().iter().rev().enumerate() {
            row[shift + k] = c.clone();
        }
        rows.push(row);
    }
    for shift in 0..m {
        let mut row = vec![BigInt::zero(); size];
        for (k, c) in q.coeffs().iter().rev().enumerate() {
            row[shift + k] = c.clone();
        }
        rows.push(row);
    }
    rows
}

/// Fraction-free Gaussian elimination (Bareiss). Every intermediate
/// division is exact, so the result is the exact integer determinant.
pub fn bareiss_determinant(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let mut sign = 1i32;
    let mut prev = BigInt::from(1);
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// Res(p, q) as the Sylvester determinant. Both inputs must be nonzero.
pub fn resultant(p: &IntPoly, q: &IntPoly) -> BigInt {
    bareiss_determinant(sylvester_matrix(p, q))
}

impl IntPoly {
    /// Discriminant at the actual degree d:
    /// `(-1)^(d(d-1)/2) Res(P, P') / a_d`. Degree one returns 1.
    pub fn discriminant(&self) -> Result<BigInt> {
        if self.is_zero() {
            return domain("discriminant of the zero polynomial");
        }
        let d = self.degree();
        if d == 0 {
            return domain("discriminant of a constant polynomial");
        }
        if d == 1 {
            return Ok(BigInt::from(1));
        }
        let res = resultant(self, &self.derivative());
        let lead = self.leading().unwrap();
        debug_assert!((&res % lead).is_zero());
        let q = res / lead;
        Ok(if (d * (d - 1) / 2) % 2 == 1 { -q } else { q })
    }

    /// Discriminant taken as a form of formal degree `n >= deg P`.
    /// For `deg P = n - 1` this is `a_{n-1}^2 D(P)`; lower degrees give 0.
    pub fn discriminant_at_degree(&self, n: usize) -> Result<BigInt> {
        let d = self.degree();
        if n < d {
            return domain(format!("formal degree {n} below actual degree {d}"));
        }
        if n == d {
            return self.discriminant();
        }
        if n == d + 1 && d >= 1 {
            let lead = self.leading().unwrap();
            return Ok(lead * lead * self.discriminant()?);
        }
        if n == 1 && d == 0 && !self.is_zero() {
            return Ok(BigInt::from(1));
        }
        Ok(BigInt::zero())
    }
}

/// Closed-form discriminant for degree <= 3, on machine integers
/// (constant term first). Degree 0 returns `None`.
///
/// Used by the enumeration hot loops; agrees with the Sylvester route.
#[inline]
pub fn discriminant_small(c: &[i64]) -> Option<i128> {
    let deg = c.iter().rposition(|&v| v != 0)?;
    match deg {
        0 => None,
        1 => Some(1),
        2 => {
            let (a0, a1, a2) = (c[0] as i128, c[1] as i128, c[2] as i128);
            Some(a1 * a1 - 4 * a2 * a0)
        }
        3 if c.iter().all(|v| v.abs() < 1 << 12) => {
            // Every term stays below 2^54.
            let (d, cc, b, a) = (c[0], c[1], c[2], c[3]);
            Some(
                (b * b * cc * cc - 4 * a * cc * cc * cc - 4 * b * b * b * d - 27 * a * a * d * d
                    + 18 * a * b * cc * d) as i128,
            )
        }
        3 => {
            let (d, cc, b, a) = (c[0] as i128, c[1] as i128, c[2] as i128, c[3] as i128);
            Some(
                b * b * cc * cc - 4 * a * cc * cc * cc - 4 * b * b * b * d - 27 * a * a * d * d
                    + 18 * a * b * cc * d,
            )
        }
        _ => None,
    }
}

/// |D| as f64, for threshold comparisons in the classification predicates.
pub fn abs_f64(x: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    x.abs().to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(p(&[1, 1, 1]).discriminant().unwrap(), BigInt::from(-3));
        assert_eq!(p(&[0, -1, 0, 1]).discriminant().unwrap(), BigInt::from(4));
        assert_eq!(p(&[3, 2]).discriminant().unwrap(), BigInt::from(1));
        assert!(p(&[5]).discriminant().is_err());
        assert!(IntPoly::zero().discriminant().is_err());
    }

    #[test]
    fn quadratic_matches_b2_minus_4ac() {
        for a in -4..=4i64 {
            for b in -4..=4i64 {
                for c in -4..=4i64 {
                    if a == 0 {
                        continue;
                    }
                    let d = p(&[c, b, a]).discriminant().unwrap();
                    assert_eq!(d, BigInt::from(b * b - 4 * a * c));
                }
            }
        }
    }

    #[test]
    fn depressed_cubic_formula() {
        // X^3 + pX + q has D = -4p^3 - 27q^2.
        for pp in -6..=6i64 {
            for q in -6..=6i64 {
                let d = p(&[q, pp, 0, 1]).discriminant().unwrap();
                assert_eq!(d, BigInt::from(-4 * pp.pow(3) - 27 * q * q));
            }
        }
    }

    #[test]
    fn closed_forms_match_sylvester() {
        let mut seen = 0;
        for a3 in -3..=3i64 {
            for a2 in -3..=3i64 {
                for a1 in -3..=3i64 {
                    for a0 in -3..=3i64 {
                        let c = [a0, a1, a2, a3];
                        let poly = IntPoly::from_i64(&c);
                        if poly.degree() == 0 {
                            assert!(discriminant_small(&c).is_none());
                            continue;
                        }
                        let exact = poly.discriminant().unwrap();
                        assert_eq!(BigInt::from(discriminant_small(&c).unwrap()), exact);
                        seen += 1;
                    }
                }
            }
        }
        assert!(seen > 2000);
    }

    #[test]
    fn zero_iff_repeated_root() {
        // (X-1)^2 (X+2)
        let f = &(&p(&[-1, 1]) * &p(&[-1, 1])) * &p(&[2, 1]);
        assert!(f.discriminant().unwrap().is_zero());
        let g = &(&p(&[-1, 1]) * &p(&[1, 1])) * &p(&[2, 1]);
        assert!(!g.discriminant().unwrap().is_zero());
    }

    #[test]
    fn formal_degree_discriminant() {
        // X^2 + X + 1 seen as a cubic: a_2^2 * D = -3.
        assert_eq!(p(&[1, 1, 1]).discriminant_at_degree(3).unwrap(), BigInt::from(-3));
        assert_eq!(p(&[1, 2, 3]).discriminant_at_degree(3).unwrap(), BigInt::from(9 * (4 - 12)));
        assert_eq!(p(&[1, 1]).discriminant_at_degree(3).unwrap(), BigInt::zero());
        // Homogeneous formula evaluated with a_3 = 0 agrees.
        assert_eq!(
            BigInt::from(discriminant_small(&[1, 2, 3, 0]).unwrap()),
            p(&[1, 2, 3]).discriminant().unwrap()
        );
    }

    #[test]
    fn bareiss_small_matrices() {
        let m = vec![
            vec![BigInt::from(0), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(0)],
        ];
        assert_eq!(bareiss_determinant(m), BigInt::from(-1));
        let m = vec![
            vec![BigInt::from(2), BigInt::from(3), BigInt::from(1)],
            vec![BigInt::from(4), BigInt::from(1), BigInt::from(5)],
            vec![BigInt::from(6), BigInt::from(2), BigInt::from(7)],
        ];
        // 2(7-10) - 3(28-30) + 1(8-6) = -6 + 6 + 2
        assert_eq!(bareiss_determinant(m), BigInt::from(2));
    }
}
