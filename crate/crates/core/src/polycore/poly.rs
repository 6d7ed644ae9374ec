//! Dense univariate polynomials with arbitrary-precision integer coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, LabError, Result};

/// Integer polynomial `a0 + a1 X + ... + ad X^d`, stored constant term first.
///
/// The coefficient vector never carries trailing zeros, so the degree is
/// always the actual degree. The zero polynomial is the empty vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::new(vec![c.into()])
    }

    /// The monomial `X`.
    pub fn x() -> Self {
        Self::from_i64(&[0, 1])
    }

    /// `q X - p`, the integer linear polynomial vanishing at `p/q`.
    pub fn linear_from_root(p: &BigInt, q: &BigInt) -> Self {
        Self::new(vec![-p.clone(), q.clone()])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Coefficient of `X^i` (zero past the degree).
    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Actual degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    /// H(P) = max |a_i|.
    pub fn height(&self) -> Result<BigInt> {
        if self.is_zero() {
            return domain("height of the zero polynomial");
        }
        Ok(self.coeffs.iter().map(|c| c.abs()).max().unwrap())
    }

    pub fn derivative(&self) -> IntPoly {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Value at the rational `num/den` scaled by `den^d`, computed exactly.
    pub fn eval_homogeneous(&self, num: &BigInt, den: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        let mut den_pow = BigInt::one();
        // Horner over the homogenised form sum a_i num^i den^(d-i).
        for (k, c) in self.coeffs.iter().rev().enumerate() {
            if k > 0 {
                den_pow = &den_pow * den;
            }
            acc = acc * num + c * &den_pow;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| {
            acc * z + c.to_f64().unwrap_or(f64::NAN)
        })
    }

    /// Q(X) = P(X + m) through the closed binomial form
    /// `b_k = sum_{j>=k} C(j,k) a_j m^(j-k)`.
    pub fn translate(&self, m: &BigInt) -> IntPoly {
        let d = self.coeffs.len();
        if d == 0 {
            return IntPoly::zero();
        }
        let mut powers = Vec::with_capacity(d);
        powers.push(BigInt::one());
        for i in 1..d {
            let next = &powers[i - 1] * m;
            powers.push(next);
        }
        let mut out = Vec::with_capacity(d);
        for k in 0..d {
            let mut binom = BigInt::one(); // C(k, k)
            let mut b = BigInt::zero();
            for j in k..d {
                if j > k {
                    // C(j, k) = C(j-1, k) * j / (j - k)
                    binom = binom * BigInt::from(j) / BigInt::from(j - k);
                }
                b += &binom * &self.coeffs[j] * &powers[j - k];
            }
            out.push(b);
        }
        IntPoly::new(out)
    }

    /// Both sides of H(P(X+m)) <= (1+|m|)^deg H(P).
    pub fn translated_height_bound(&self, m: &BigInt) -> Result<(BigInt, BigInt)> {
        let h = self.height()?;
        let lhs = self.translate(m).height()?;
        let base = BigInt::one() + m.abs();
        let bound = num_traits::pow(base, self.degree()) * h;
        Ok((lhs, bound))
    }

    /// gcd of the coefficients (non-negative; zero for the zero polynomial).
    pub fn content(&self) -> BigInt {
        self.coeffs
            .iter()
            .fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Divides out the content and makes the leading coefficient positive.
    pub fn primitive_part(&self) -> IntPoly {
        if self.is_zero() {
            return IntPoly::zero();
        }
        let mut g = self.content();
        if self.leading().unwrap().is_negative() {
            g = -g;
        }
        IntPoly::new(self.coeffs.iter().map(|c| c / &g).collect())
    }

    pub fn scale(&self, k: &BigInt) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Pseudo-remainder `lc(d)^k * p mod d`.
    pub fn pseudo_rem(&self, d: &IntPoly) -> IntPoly {
        self.pseudo_rem_with_power(d).0
    }

    /// Pseudo-remainder together with the exponent `k` of the leading
    /// coefficient of `d` that multiplied `self`.
    pub fn pseudo_rem_with_power(&self, d: &IntPoly) -> (IntPoly, u32) {
        assert!(!d.is_zero(), "pseudo-division by zero polynomial");
        let dd = d.degree();
        let lc = d.leading().unwrap().clone();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (self.clone(), 0);
        }
        let steps = r.len() - dd;
        let mut k = 0;
        for _ in 0..steps {
            let rd = r.len() - 1;
            if rd < dd {
                break;
            }
            let top = r[rd].clone();
            for c in r.iter_mut() {
                *c *= &lc;
            }
            k += 1;
            for (i, dc) in d.coeffs.iter().enumerate() {
                r[rd - dd + i] -= &top * dc;
            }
            r.pop();
            while r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
            if r.is_empty() {
                break;
            }
        }
        (IntPoly::new(r), k)
    }

    /// Exact quotient over the integers, if `d` divides `self` in Z[X].
    pub fn div_exact(&self, d: &IntPoly) -> Option<IntPoly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(IntPoly::zero());
        }
        let dd = d.degree();
        if self.degree() < dd {
            return None;
        }
        let lc = d.leading().unwrap();
        let mut r = self.coeffs.clone();
        let mut q = vec![BigInt::zero(); self.degree() - dd + 1];
        for k in (0..q.len()).rev() {
            let top = &r[k + dd];
            let (qk, rem) = top.div_rem(lc);
            if !rem.is_zero() {
                return None;
            }
            for (i, dc) in d.coeffs.iter().enumerate() {
                r[k + i] -= &qk * dc;
            }
            q[k] = qk;
        }
        if r.iter().all(|c| c.is_zero()) {
            Some(IntPoly::new(q))
        } else {
            None
        }
    }

    /// Primitive gcd with positive leading coefficient (primitive PRS).
    pub fn gcd(&self, other: &IntPoly) -> IntPoly {
        let (mut a, mut b) = if self.degree() >= other.degree() {
            (self.primitive_part(), other.primitive_part())
        } else {
            (other.primitive_part(), self.primitive_part())
        };
        if b.is_zero() {
            return a;
        }
        loop {
            let r = a.pseudo_rem(&b);
            if r.is_zero() {
                return b.primitive_part();
            }
            if r.degree() == 0 {
                return IntPoly::constant(1);
            }
            a = b;
            b = r.primitive_part();
        }
    }

    /// Yun's square-free decomposition of the primitive part:
    /// returns `(factor, multiplicity)` with every factor square-free,
    /// pairwise coprime and of positive degree.
    pub fn squarefree_decomposition(&self) -> Vec<(IntPoly, usize)> {
        let f = self.primitive_part();
        if f.degree() == 0 {
            return Vec::new();
        }
        let fp = f.derivative();
        let a0 = f.gcd(&fp);
        let mut b = f.div_exact(&a0).expect("gcd divides f");
        let mut c = fp.div_exact(&a0).expect("gcd divides f'");
        let mut d = &c - &b.derivative();
        let mut out = Vec::new();
        let mut i = 1;
        loop {
            let a = b.gcd(&d);
            if a.degree() > 0 {
                out.push((a.clone(), i));
            }
            b = b.div_exact(&a).expect("gcd divides b");
            if b.degree() == 0 {
                break;
            }
            c = d.div_exact(&a).expect("gcd divides d");
            d = &c - &b.derivative();
            i += 1;
        }
        out
    }

    /// Square-free part, primitive with positive leading coefficient.
    pub fn squarefree_part(&self) -> IntPoly {
        let f = self.primitive_part();
        if f.degree() == 0 {
            return f;
        }
        let g = f.gcd(&f.derivative());
        f.div_exact(&g).expect("gcd divides f")
    }

    /// Coefficients as f64 when every coefficient (and every coefficient
    /// of the first two derivatives) is exactly representable.
    pub fn to_f64_exact(&self) -> Option<Vec<f64>> {
        const LIMIT: i64 = 1 << 50;
        self.coeffs
            .iter()
            .map(|c| {
                let v = c.to_i64()?;
                (v.abs() <= LIMIT).then_some(v as f64)
            })
            .collect()
    }

    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.coeffs.iter().map(|c| c.to_i64()).collect()
    }

    pub fn to_f64_lossy(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::INFINITY))
            .collect()
    }
}

impl Add for &IntPoly {
    type Output = IntPoly;
    fn add(self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &IntPoly {
    type Output = IntPoly;
    fn sub(self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &IntPoly {
    type Output = IntPoly;
    fn mul(self, rhs: &IntPoly) -> IntPoly {
        if self.is_zero() || rhs.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }
}

impl Neg for &IntPoly {
    type Output = IntPoly;
    fn neg(self) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

/// Serialized in the text format, e.g. `"-2 0 0 1"`.
impl serde::Serialize for IntPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for IntPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for IntPoly {
    /// The `a0 a1 ... ad` text format; the zero polynomial prints as `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for IntPoly {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let coeffs = s
            .split_whitespace()
            .map(|tok| {
                tok.parse::<BigInt>()
                    .map_err(|_| LabError::Parse(format!("bad coefficient `{tok}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if coeffs.is_empty() {
            return Err(LabError::Parse("empty polynomial".into()));
        }
        Ok(IntPoly::new(coeffs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    #[test]
    fn height_examples() {
        assert_eq!(p(&[5, -2, 0, 3]).height().unwrap(), BigInt::from(5));
        assert_eq!(p(&[0, 1]).height().unwrap(), BigInt::from(1));
        assert_eq!(p(&[7, 0, -7]).height().unwrap(), BigInt::from(7));
        assert!(matches!(IntPoly::zero().height(), Err(LabError::Domain(_))));
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let q = p(&[1, 2, 0, 0]);
        assert_eq!(q.degree(), 1);
        assert_eq!(q.coeffs().len(), 2);
    }

    #[test]
    fn translate_examples() {
        assert_eq!(p(&[0, 0, 1]).translate(&BigInt::from(1)), p(&[1, 2, 1]));
        let q = p(&[3, -1, 4, 1, -5]);
        assert_eq!(q.translate(&BigInt::zero()), q);
        assert_eq!(p(&[0, 0, 0, 1]).translate(&BigInt::from(2)), p(&[8, 12, 6, 1]));
    }

    #[test]
    fn translated_height_examples() {
        let (h, b) = p(&[0, 0, 0, 1]).translated_height_bound(&BigInt::from(1)).unwrap();
        assert_eq!((h, b), (BigInt::from(3), BigInt::from(8)));
        let q = p(&[-5, 0, 5]);
        let (h, b) = q.translated_height_bound(&BigInt::from(-2)).unwrap();
        // 5(X-2)^2 - 5 = 5X^2 - 20X + 15
        assert_eq!(h, BigInt::from(20));
        assert_eq!(b, BigInt::from(45));
        let (h, b) = q.translated_height_bound(&BigInt::zero()).unwrap();
        assert_eq!(h, b);
    }

    #[test]
    fn text_format_round_trip() {
        let q: IntPoly = "3 0 -2 5".parse().unwrap();
        assert_eq!(q, p(&[3, 0, -2, 5]));
        assert_eq!(q.to_string(), "3 0 -2 5");
        assert!("1 x 2".parse::<IntPoly>().is_err());
        assert!("".parse::<IntPoly>().is_err());
    }

    #[test]
    fn exact_division_and_gcd() {
        let a = p(&[-1, 0, 1]); // X^2 - 1
        let b = p(&[1, 1]); // X + 1
        assert_eq!(a.div_exact(&b), Some(p(&[-1, 1])));
        assert_eq!(a.div_exact(&p(&[1, 2])), None);
        let g = (&a * &p(&[3, 1])).gcd(&(&a * &p(&[-7, 2])));
        assert_eq!(g, a);
    }

    #[test]
    fn squarefree_decomposition_of_powers() {
        // (X+1)^3 (X-2)^2 X
        let f = &(&(&p(&[1, 1]) * &p(&[1, 1])) * &p(&[1, 1])) * &(&(&p(&[-2, 1]) * &p(&[-2, 1])) * &p(&[0, 1]));
        let dec = f.squarefree_decomposition();
        assert_eq!(dec, vec![(p(&[0, 1]), 1), (p(&[-2, 1]), 2), (p(&[1, 1]), 3)]);
        assert_eq!(f.squarefree_part(), &(&p(&[0, 1]) * &p(&[-2, 1])) * &p(&[1, 1]));
    }

    #[test]
    fn homogeneous_evaluation() {
        // 2X^2 - 3 at 3/2: (2*9/4 - 3) * 4 = 6
        let q = p(&[-3, 0, 2]);
        assert_eq!(q.eval_homogeneous(&BigInt::from(3), &BigInt::from(2)), BigInt::from(6));
    }
}
