//! Exact real-root isolation over the integers.
//!
//! Points are `f64` values, read as the dyadic rationals they denote, so
//! every bracket endpoint is an exact rational. Signs are evaluated in
//! big-integer arithmetic; Sturm sequences certify the root counts.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::poly::IntPoly;

/// Decomposes a finite `f64` into `(m, k)` with `x = m / 2^k`, `k >= 0`.
pub fn dyadic_parts(x: f64) -> (BigInt, u32) {
    assert!(x.is_finite(), "non-finite dyadic point");
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let tz = mant.trailing_zeros() as i64;
    let mant = mant >> tz;
    let e = e + tz;
    let m = BigInt::from(mant) * sign;
    if e >= 0 {
        (m << (e as usize), 0)
    } else {
        (m, (-e) as u32)
    }
}

/// Exact sign of `f(x)` for integer coefficients and a dyadic point.
pub fn sign_at(f: &[BigInt], x: f64) -> Ordering {
    if f.is_empty() {
        return Ordering::Equal;
    }
    let (m, k) = dyadic_parts(x);
    // sum a_i m^i 2^(k(d-i)), Horner from the top.
    let mut acc = f[f.len() - 1].clone();
    for (steps, c) in f.iter().rev().skip(1).enumerate() {
        let shift = (k as usize) * (steps + 1);
        acc = acc * &m + (c << shift);
    }
    acc.sign_ordering()
}

trait SignOrdering {
    fn sign_ordering(&self) -> Ordering;
}

impl SignOrdering for BigInt {
    fn sign_ordering(&self) -> Ordering {
        if self.is_zero() {
            Ordering::Equal
        } else if self.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
}

/// Sturm sequence f, f', -rem(f, f'), ... scaled by positive factors only.
pub fn sturm_sequence(f: &IntPoly) -> Vec<IntPoly> {
    let mut seq = vec![f.clone()];
    if f.degree() == 0 {
        return seq;
    }
    seq.push(f.derivative());
    loop {
        let n = seq.len();
        let (a, b) = (&seq[n - 2], &seq[n - 1]);
        if b.degree() == 0 {
            break;
        }
        let (r, k) = a.pseudo_rem_with_power(b);
        if r.is_zero() {
            break;
        }
        // lc(b)^k r = (positive) * rem; the Sturm step wants -rem.
        let lc_neg_odd = b.leading().unwrap().is_negative() && k % 2 == 1;
        let mut next = if lc_neg_odd { r } else { -&r };
        let content = next.content();
        if !content.is_one() {
            next = IntPoly::new(next.coeffs().iter().map(|c| c / &content).collect());
        }
        seq.push(next);
    }
    seq
}

fn variations(seq: &[IntPoly], x: f64) -> usize {
    let mut count = 0;
    let mut last = Ordering::Equal;
    for p in seq {
        let s = sign_at(p.coeffs(), x);
        if s == Ordering::Equal {
            continue;
        }
        if last != Ordering::Equal && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Closed bracket `[lo, hi]` holding exactly one real root (possibly `lo == hi`).
pub type Bracket = (f64, f64);

/// Isolates every real root of `f` in the closed interval `[lo, hi]` and
/// refines each to a bracket of width at most `max_width` (or to adjacent
/// doubles). Brackets are returned sorted and pairwise disjoint.
pub fn isolate_real_roots(f: &IntPoly, lo: f64, hi: f64, max_width: f64) -> Vec<Bracket> {
    assert!(lo <= hi);
    if f.is_zero() || f.degree() == 0 {
        return Vec::new();
    }
    let sf = f.squarefree_part();
    let seq = sturm_sequence(&sf);
    let coeffs = sf.coeffs();
    let mut out = Vec::new();
    if sign_at(coeffs, lo) == Ordering::Equal {
        out.push((lo, lo));
    }
    if lo == hi {
        return out;
    }
    // Work list of half-open (a, b] intervals with known variation counts.
    let mut stack = vec![(lo, hi, variations(&seq, lo), variations(&seq, hi))];
    let mut found = Vec::new();
    while let Some((a, b, va, vb)) = stack.pop() {
        let count = va.saturating_sub(vb);
        if count == 0 {
            continue;
        }
        if count == 1 {
            found.push(refine_single(coeffs, &seq, a, b, max_width));
            continue;
        }
        let m = midpoint(a, b);
        if m <= a || m >= b {
            // Cannot split further in double precision; keep as a cluster.
            found.push((a, b));
            continue;
        }
        let vm = variations(&seq, m);
        stack.push((a, m, va, vm));
        stack.push((m, b, vm, vb));
    }
    found.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    out.extend(found);
    out
}

fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) * 0.5
}

/// One root in (a, b]: shrink until the width target holds.
fn refine_single(f: &[BigInt], seq: &[IntPoly], a: f64, b: f64, max_width: f64) -> Bracket {
    let sb = sign_at(f, b);
    if sb == Ordering::Equal {
        return (b, b);
    }
    let (mut a, mut b) = (a, b);
    let mut sa = sign_at(f, a);
    // If a is itself a root it lies outside (a, b]; move a inward with Sturm counts.
    while sa == Ordering::Equal {
        let m = midpoint(a, b);
        if m <= a || m >= b {
            return (a, b);
        }
        let vm = variations(seq, m);
        let vb = variations(seq, b);
        if vm > vb {
            a = m;
        } else {
            b = m;
        }
        sa = sign_at(f, a);
        if sign_at(f, b) == Ordering::Equal {
            return (b, b);
        }
    }
    // Sign change on [a, b] now brackets the unique root.
    if let Some(br) = newton_probe(f, a, b, sa, max_width) {
        return br;
    }
    while b - a > max_width {
        let m = midpoint(a, b);
        if m <= a || m >= b {
            break;
        }
        match sign_at(f, m) {
            Ordering::Equal => return (m, m),
            s if s == sa => a = m,
            _ => b = m,
        }
    }
    (a, b)
}

/// Floating Newton guess followed by an exact two-point sign check.
fn newton_probe(f: &[BigInt], a: f64, b: f64, sa: Ordering, max_width: f64) -> Option<Bracket> {
    use num_traits::ToPrimitive;
    let fc: Vec<f64> = f.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
    if fc.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let mut x = midpoint(a, b);
    for _ in 0..60 {
        let (v, dv) = horner_with_derivative(&fc, x);
        if dv == 0.0 || !v.is_finite() {
            break;
        }
        let nx = x - v / dv;
        if !(nx > a && nx < b) {
            break;
        }
        if nx == x {
            break;
        }
        x = nx;
    }
    if sign_at(f, x) == Ordering::Equal {
        return Some((x, x));
    }
    let mut h = (x.abs().max(f64::MIN_POSITIVE)) * 4.0 * f64::EPSILON;
    while h <= max_width * 0.5 {
        let l = (x - h).max(a);
        let r = (x + h).min(b);
        let sl = sign_at(f, l);
        let sr = sign_at(f, r);
        if sl == Ordering::Equal {
            return Some((l, l));
        }
        if sr == Ordering::Equal {
            return Some((r, r));
        }
        if sl == sa && sr != sa {
            return Some((l, r));
        }
        h *= 16.0;
    }
    None
}

pub(crate) fn horner_with_derivative(c: &[f64], x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut dv = 0.0;
    for &a in c.iter().rev() {
        dv = dv * x + v;
        v = v * x + a;
    }
    (v, dv)
}

/// Number of distinct real roots of `f` in `(a, b]`.
pub fn count_real_roots(f: &IntPoly, a: f64, b: f64) -> usize {
    if f.degree() == 0 {
        return 0;
    }
    let sf = f.squarefree_part();
    let seq = sturm_sequence(&sf);
    variations(&seq, a).saturating_sub(variations(&seq, b))
}

/// A generous bound on the modulus of every complex root (Cauchy).
pub fn cauchy_bound(f: &IntPoly) -> f64 {
    use num_traits::ToPrimitive;
    let lead = f.leading().map(|c| c.abs().to_f64().unwrap()).unwrap_or(1.0);
    let m = f
        .coeffs()
        .iter()
        .rev()
        .skip(1)
        .map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    1.0 + m / lead
}

/// An exact polynomial for `P(x) - level` with a dyadic `level`:
/// returns `2^k P - m` where `level = m / 2^k`.
pub fn shifted_integer_poly(p: &IntPoly, level: f64) -> IntPoly {
    let (m, k) = dyadic_parts(level);
    let scale = BigInt::one() << (k as usize);
    let mut c = p.scale(&scale).coeffs().to_vec();
    if c.is_empty() {
        c.push(BigInt::zero());
    }
    c[0] -= m;
    IntPoly::new(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    #[test]
    fn dyadic_decomposition_is_exact() {
        for &x in &[0.0, 1.0, -0.375, 1e-300, 3.0e20, 0.1, -7.5] {
            let (m, k) = dyadic_parts(x);
            let back = num_rational::BigRational::new(m, BigInt::one() << (k as usize));
            assert_eq!(back, num_rational::BigRational::from_float(x).unwrap());
        }
    }

    #[test]
    fn exact_sign_evaluation() {
        let f = p(&[-1, 0, 2]); // 2x^2 - 1
        assert_eq!(sign_at(f.coeffs(), 0.5), Ordering::Less);
        assert_eq!(sign_at(f.coeffs(), 0.75), Ordering::Greater);
        let g = p(&[-1, 8]);
        assert_eq!(sign_at(g.coeffs(), 0.125), Ordering::Equal);
    }

    #[test]
    fn isolates_quadratic_roots() {
        let r = isolate_real_roots(&p(&[-1, 0, 1]), -2.0, 2.0, 1e-12);
        assert_eq!(r.len(), 2);
        assert!(r[0].0 <= -1.0 && -1.0 <= r[0].1);
        assert!(r[1].0 <= 1.0 && 1.0 <= r[1].1);
        assert!(isolate_real_roots(&p(&[1, 0, 1]), -5.0, 5.0, 1e-12).is_empty());
    }

    #[test]
    fn cube_root_of_two_by_bisection_oracle() {
        // Oracle: plain f64 bisection of x^3 - 2 on [1, 2].
        let (mut a, mut b) = (1.0f64, 2.0f64);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if m * m * m - 2.0 < 0.0 {
                a = m
            } else {
                b = m
            }
        }
        let r = isolate_real_roots(&p(&[-2, 0, 0, 1]), -3.0, 3.0, 1e-9);
        assert_eq!(r.len(), 1);
        assert!(r[0].1 - r[0].0 <= 1e-9);
        assert!((0.5 * (r[0].0 + r[0].1) - a).abs() < 1e-9);
        assert!((a - 1.259921).abs() < 1e-6);
    }

    #[test]
    fn repeated_and_endpoint_roots() {
        // (x - 1/2)^2 (x + 1/4): roots at dyadic points.
        let f = &(&p(&[-1, 2]) * &p(&[-1, 2])) * &p(&[1, 4]);
        let r = isolate_real_roots(&f, -0.5, 0.5, 1e-12);
        assert_eq!(r, vec![(-0.25, -0.25), (0.5, 0.5)]);
        assert_eq!(count_real_roots(&f, -1.0, 1.0), 2);
    }

    #[test]
    fn close_roots_are_separated() {
        // (1000x - 1)(1001x - 1)
        let f = &p(&[-1, 1000]) * &p(&[-1, 1001]);
        let r = isolate_real_roots(&f, 0.0, 1.0, 1e-12);
        assert_eq!(r.len(), 2);
        assert!(r[0].1 < r[1].0);
    }

    #[test]
    fn sturm_sign_convention_negative_leading() {
        let f = p(&[6, -11, 6, -1]); // -(x-1)(x-2)(x-3)
        assert_eq!(count_real_roots(&f, 0.0, 10.0), 3);
        assert_eq!(count_real_roots(&f, 1.5, 10.0), 2);
    }

    #[test]
    fn shifted_poly_is_exact() {
        let f = shifted_integer_poly(&p(&[0, 4]), 0.5); // 2*4x - 1
        assert_eq!(f, p(&[-1, 8]));
    }
}
