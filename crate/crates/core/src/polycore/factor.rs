//! Rational-root factorization for degree <= 3.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::poly::IntPoly;
use crate::error::{domain, Result};

/// `linear * quadratic` equals the factored cubic exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorPair {
    pub linear: IntPoly,
    pub quadratic: IntPoly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CubicFactorization {
    Reducible(FactorPair),
    Irreducible,
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = BigInt::from(1);
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            let q = &n / &d;
            if q != d {
                large.push(q);
            }
            small.push(d.clone());
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// The rational roots `p/q` (lowest terms, `q > 0`) of `f`, ordered by
/// denominator, then by |p|, positive before negative.
pub fn rational_roots(f: &IntPoly) -> Vec<(BigInt, BigInt)> {
    let mut out = Vec::new();
    if f.degree() == 0 {
        return out;
    }
    let a0 = f.coeff(0);
    if a0.is_zero() {
        out.push((BigInt::zero(), BigInt::from(1)));
        // Remaining roots come from f / X.
        let rest = IntPoly::new(f.coeffs()[1..].to_vec());
        out.extend(rational_roots(&rest).into_iter().filter(|(p, _)| !p.is_zero()));
        return out;
    }
    let lead = f.leading().unwrap().clone();
    for q in divisors(&lead) {
        for p in divisors(&a0) {
            if !p.gcd(&q).eq(&BigInt::from(1)) {
                continue;
            }
            for p in [p.clone(), -p] {
                if f.eval_homogeneous(&p, &q).is_zero() {
                    out.push((p, q.clone()));
                }
            }
        }
    }
    out
}

/// Splits a cubic into an integer linear factor (primitive, positive
/// leading coefficient) and a quadratic cofactor, when a rational root
/// exists. A zero root is preferred, so `X^3 - X` splits as `X (X^2 - 1)`.
pub fn factor_cubic(f: &IntPoly) -> Result<CubicFactorization> {
    if f.degree() != 3 {
        return domain(format!("factor_cubic needs degree 3, got degree {}", f.degree()));
    }
    let Some((p, q)) = rational_roots(f).into_iter().next() else {
        return Ok(CubicFactorization::Irreducible);
    };
    let linear = IntPoly::linear_from_root(&p, &q);
    let quadratic = f.div_exact(&linear).expect("Gauss: primitive linear factor divides");
    Ok(CubicFactorization::Reducible(FactorPair { linear, quadratic }))
}

/// Irreducibility over Q for degree 1..=3.
pub fn is_irreducible(f: &IntPoly) -> Result<bool> {
    match f.degree() {
        1 => Ok(true),
        2 if !f.is_zero() => {
            let d = f.discriminant()?;
            Ok(!is_square(&d))
        }
        3 => Ok(rational_roots(f).is_empty()),
        d => domain(format!("irreducibility test defined for degree 1..=3, got {d}")),
    }
}

fn is_square(d: &BigInt) -> bool {
    if d.is_negative() {
        return false;
    }
    let r = d.sqrt();
    &r * &r == *d
}

/// Divisor lists for 1..=max, used by the enumeration hot loops.
#[derive(Debug, Clone)]
pub struct DivisorTable {
    lists: Vec<Vec<i64>>,
}

impl DivisorTable {
    pub fn new(max: usize) -> Self {
        let mut lists = vec![Vec::new(); max + 1];
        for d in 1..=max {
            for m in (d..=max).step_by(d) {
                lists[m].push(d as i64);
            }
        }
        DivisorTable { lists }
    }

    pub fn max(&self) -> usize {
        self.lists.len() - 1
    }

    pub fn get(&self, n: i64) -> &[i64] {
        &self.lists[n.unsigned_abs() as usize]
    }
}

/// Machine-integer rational-root test for `a0 + a1 X + a2 X^2 + a3 X^3`,
/// `a3 != 0`, coefficients bounded by the table size.
#[inline]
pub fn cubic_has_rational_root(c: &[i64; 4], table: &DivisorTable) -> bool {
    let [a0, a1, a2, a3] = *c;
    if a0 == 0 {
        return true;
    }
    // A rational root reduces to a root mod any prime not dividing a3.
    if a3 % 2 != 0 && a0 % 2 != 0 && (a0 + a1 + a2 + a3) % 2 != 0 {
        return false;
    }
    if a3 % 3 != 0 {
        let at = |x: i64| (a0 + x * (a1 + x * (a2 + x * a3))) % 3 != 0;
        if at(0) && at(1) && at(-1) {
            return false;
        }
    }
    if c.iter().all(|v| v.abs() < 1 << 12) {
        for &q in table.get(a3) {
            let (q2, q3) = (q * q, q * q * q);
            for &p in table.get(a0) {
                let (p2, p3) = (p * p, p * p * p);
                let even = a2 * p2 * q + a0 * q3;
                let odd = a3 * p3 + a1 * p * q2;
                if even + odd == 0 || even - odd == 0 {
                    return true;
                }
            }
        }
        return false;
    }
    let (a0, a1, a2, a3) = (a0 as i128, a1 as i128, a2 as i128, a3 as i128);
    for &q in table.get(c[3]) {
        let q = q as i128;
        let (q2, q3) = (q * q, q * q * q);
        for &p in table.get(c[0]) {
            let p = p as i128;
            let (p2, p3) = (p * p, p * p * p);
            // Even and odd parts of the homogenized value at ±p/q.
            let even = a2 * p2 * q + a0 * q3;
            let odd = a3 * p3 + a1 * p * q2;
            if even + odd == 0 || even - odd == 0 {
                return true;
            }
        }
    }
    false
}

/// Irreducibility of a polynomial of degree 1..=3 on machine integers.
#[inline]
pub fn is_irreducible_small(c: &[i64; 4], table: &DivisorTable) -> bool {
    match c.iter().rposition(|&v| v != 0) {
        Some(3) => !cubic_has_rational_root(c, table),
        Some(2) => {
            let d = c[1] as i128 * c[1] as i128 - 4 * c[2] as i128 * c[0] as i128;
            if d < 0 {
                return true;
            }
            let r = (d as u128).sqrt() as i128;
            r * r != d
        }
        Some(1) => true,
        _ => false,
    }
}

/// Machine-size view of a small polynomial, padded to four coefficients.
pub fn to_small_cubic(f: &IntPoly) -> Option<[i64; 4]> {
    if f.degree() > 3 {
        return None;
    }
    let mut c = [0i64; 4];
    for (i, v) in f.coeffs().iter().enumerate() {
        c[i] = v.to_i64()?;
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    #[test]
    fn factor_examples() {
        let CubicFactorization::Reducible(fp) = factor_cubic(&p(&[0, -1, 0, 1])).unwrap() else {
            panic!("X^3 - X is reducible")
        };
        assert_eq!(fp.linear, p(&[0, 1]));
        assert_eq!(fp.quadratic, p(&[-1, 0, 1]));

        assert_eq!(
            factor_cubic(&p(&[-2, 0, 0, 1])).unwrap(),
            CubicFactorization::Irreducible
        );

        let CubicFactorization::Reducible(fp) = factor_cubic(&p(&[1, 3, 3, 2])).unwrap() else {
            panic!("2X^3 + 3X^2 + 3X + 1 is reducible")
        };
        assert_eq!(fp.linear, p(&[1, 2]));
        assert_eq!(fp.quadratic, p(&[1, 1, 1]));
        assert!(factor_cubic(&p(&[1, 1])).is_err());
    }

    #[test]
    fn irreducibility_examples() {
        assert!(is_irreducible(&p(&[1, 0, 1])).unwrap());
        assert!(!is_irreducible(&p(&[-4, 0, 1])).unwrap());
        assert!(is_irreducible(&p(&[-2, 0, 0, 1])).unwrap());
        assert!(is_irreducible(&p(&[3, 2])).unwrap());
        assert!(is_irreducible(&p(&[5])).is_err());
    }

    #[test]
    fn factorization_multiplies_back() {
        for a3 in [-3i64, -1, 2, 4] {
            for a2 in -4..=4 {
                for a1 in -4..=4 {
                    for a0 in -4..=4 {
                        let f = p(&[a0, a1, a2, a3]);
                        if let CubicFactorization::Reducible(fp) = factor_cubic(&f).unwrap() {
                            assert_eq!(&fp.linear * &fp.quadratic, f);
                            assert!(fp.linear.leading().unwrap().is_positive());
                            assert!(fp.linear.content() == BigInt::from(1));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn fast_test_matches_exact_test() {
        let table = DivisorTable::new(16);
        for a3 in -6..=6i64 {
            for a2 in -6..=6i64 {
                for a1 in -6..=6i64 {
                    for a0 in -6..=6i64 {
                        let c = [a0, a1, a2, a3];
                        let f = IntPoly::from_i64(&c);
                        if f.degree() == 0 {
                            assert!(!is_irreducible_small(&c, &table));
                            continue;
                        }
                        assert_eq!(is_irreducible_small(&c, &table), is_irreducible(&f).unwrap(), "{f}");
                    }
                }
            }
        }
    }
}
