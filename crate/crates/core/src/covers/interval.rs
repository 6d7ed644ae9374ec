//! Finite unions of closed real intervals with dyadic endpoints.
//!
//! Endpoints are `f64` values taken as the exact dyadic rationals they
//! represent. Construction merges overlapping and touching pieces, so the
//! stored intervals are sorted, pairwise disjoint and separated by gaps.
//! Open and half-open ends are stored closed; this changes no measure.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::polycore::realroots::dyadic_parts;

/// The reference interval `[-1/2, 1/2)`.
pub const UNIT_LO: f64 = -0.5;
pub const UNIT_HI: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambient {
    /// `I = [-1/2, 1/2)`.
    Unit,
    Real,
}

impl Ambient {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Ambient::Unit => (UNIT_LO, UNIT_HI),
            Ambient::Real => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
    ambient: Ambient,
}

/// `a + b` rounded toward `+inf`.
pub fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    // Two-sum: a + b = s + e exactly.
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    if e > 0.0 {
        s.next_up()
    } else {
        s
    }
}

/// `a - b` rounded toward `-inf`.
pub fn sub_down(a: f64, b: f64) -> f64 {
    let s = a - b;
    if !s.is_finite() {
        return s;
    }
    let nb = -b;
    let bb = s - a;
    let e = (a - (s - bb)) + (nb - bb);
    if e < 0.0 {
        s.next_down()
    } else {
        s
    }
}

/// Merges sorted-or-not closed intervals into a disjoint sorted list.
pub fn normalize(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.retain(|&(a, b)| a <= b);
    v.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.partial_cmp(&y.1).unwrap()));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

pub fn dyadic_to_rational(x: f64) -> BigRational {
    let (m, k) = dyadic_parts(x);
    BigRational::new(m, BigInt::one() << (k as usize))
}

impl IntervalSet {
    pub fn empty(ambient: Ambient) -> Self {
        IntervalSet {
            intervals: Vec::new(),
            ambient,
        }
    }

    /// Builds a set from arbitrary closed intervals, clipped to the ambient.
    pub fn new(intervals: Vec<(f64, f64)>, ambient: Ambient) -> Self {
        let (lo, hi) = ambient.bounds();
        let clipped = intervals
            .into_iter()
            .map(|(a, b)| (a.max(lo), b.min(hi)))
            .collect();
        IntervalSet {
            intervals: normalize(clipped),
            ambient,
        }
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn component_count(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|&(_, b)| b < x);
        i < self.intervals.len() && self.intervals[i].0 <= x
    }

    /// Exact Lebesgue measure.
    pub fn measure(&self) -> BigRational {
        let mut total = BigRational::zero();
        for &(a, b) in &self.intervals {
            total += dyadic_to_rational(b) - dyadic_to_rational(a);
        }
        total
    }

    /// Measure rounded to the nearest double.
    pub fn measure_f64(&self) -> f64 {
        self.measure().to_f64().unwrap_or(f64::NAN)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut v = self.intervals.clone();
        v.extend_from_slice(&other.intervals);
        IntervalSet {
            intervals: normalize(v),
            ambient: self.wider_ambient(other),
        }
    }

    fn wider_ambient(&self, other: &IntervalSet) -> Ambient {
        if self.ambient == Ambient::Real || other.ambient == Ambient::Real {
            Ambient::Real
        } else {
            Ambient::Unit
        }
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let ambient = if self.ambient == Ambient::Unit || other.ambient == Ambient::Unit {
            Ambient::Unit
        } else {
            Ambient::Real
        };
        IntervalSet {
            intervals: intersect_sorted(&self.intervals, &other.intervals),
            ambient,
        }
    }

    /// Closed `delta`-neighbourhood intersected with the ambient; endpoints
    /// are rounded outward.
    pub fn enlarge(&self, delta: f64) -> IntervalSet {
        assert!(delta >= 0.0, "negative enlargement");
        let (lo, hi) = self.ambient.bounds();
        let v = self
            .intervals
            .iter()
            .map(|&(a, b)| (sub_down(a, delta).max(lo), add_up(b, delta).min(hi)))
            .collect();
        IntervalSet {
            intervals: normalize(v),
            ambient: self.ambient,
        }
    }

    /// Serialized as `[["p/q", "p/q"], ...]`.
    pub fn to_rational_strings(&self) -> Vec<[String; 2]> {
        self.intervals
            .iter()
            .map(|&(a, b)| [rational_string(a), rational_string(b)])
            .collect()
    }

    /// Parses the `p/q` form; endpoints that are not dyadic round outward.
    pub fn from_rational_strings(v: &[[String; 2]], ambient: Ambient) -> Result<IntervalSet> {
        let mut out = Vec::with_capacity(v.len());
        for [a, b] in v {
            out.push((parse_rational(a, false)?, parse_rational(b, true)?));
        }
        Ok(IntervalSet::new(out, ambient))
    }
}

/// Intersection of two sorted disjoint interval lists.
pub fn intersect_sorted(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo <= hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    // Touching pieces from different inputs may now abut.
    normalize(out)
}

pub fn rational_string(x: f64) -> String {
    let r = dyadic_to_rational(x);
    format!("{}/{}", r.numer(), r.denom())
}

fn parse_rational(s: &str, round_up: bool) -> Result<f64> {
    let bad = || LabError::Parse(format!("bad rational `{s}`"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    let r = BigRational::new(p, q);
    let x = r.to_f64().ok_or_else(bad)?;
    let back = dyadic_to_rational(x);
    Ok(if back == r {
        x
    } else if round_up {
        if back < r {
            x.next_up()
        } else {
            x
        }
    } else if back > r {
        x.next_down()
    } else {
        x
    })
}

/// Sum of lengths of sorted components, compensated in double precision.
pub fn length_sum(v: &[(f64, f64)]) -> f64 {
    let mut acc = NeumaierSum::default();
    for &(a, b) in v {
        acc.add(b - a);
    }
    acc.value()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ceil(len / ell)` decided exactly when the quotient is close to an integer.
pub fn ceil_ratio(len: f64, ell: f64) -> u64 {
    let q = len / ell;
    let k = q.ceil();
    if (q - q.round()).abs() > 1e-6 * q.max(1.0) {
        return k as u64;
    }
    let exact = dyadic_to_rational(len) / dyadic_to_rational(ell);
    exact.ceil().to_integer().abs().to_u64().unwrap_or(u64::MAX)
}

/// `ceil((b - a) / ell)` with the difference taken exactly.
pub fn ceil_span(a: f64, b: f64, ell: f64) -> u64 {
    let q = (b - a) / ell;
    if (q - q.round()).abs() > 1e-6 * q.max(1.0) {
        return q.ceil() as u64;
    }
    let exact = (dyadic_to_rational(b) - dyadic_to_rational(a)) / dyadic_to_rational(ell);
    exact.ceil().to_integer().abs().to_u64().unwrap_or(u64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_merges_touching() {
        let s = IntervalSet::new(vec![(0.25, 0.5), (-0.5, -0.25), (0.0, 0.25)], Ambient::Real);
        assert_eq!(s.intervals(), &[(-0.5, -0.25), (0.0, 0.5)]);
        assert_eq!(s.measure(), BigRational::new(3.into(), 4.into()));
    }

    #[test]
    fn enlarge_examples() {
        assert!(IntervalSet::empty(Ambient::Unit).enlarge(0.1).is_empty());
        let s = IntervalSet::new(vec![(0.0, 0.125)], Ambient::Real).enlarge(0.125);
        assert_eq!(s.intervals(), &[(-0.125, 0.25)]);
        let u = IntervalSet::new(vec![(0.4, 0.45)], Ambient::Unit).enlarge(0.25);
        assert_eq!(u.intervals()[0].1, 0.5);
    }

    #[test]
    fn outward_rounding() {
        let x = sub_down(0.1, 1e-20);
        assert!(x < 0.1);
        assert_eq!(sub_down(0.5, 0.25), 0.25);
        assert!(add_up(0.1, 1e-20) > 0.1);
    }

    #[test]
    fn rational_string_round_trip() {
        let s = IntervalSet::new(vec![(-0.375, 0.1)], Ambient::Unit);
        let text = s.to_rational_strings();
        assert_eq!(text[0][0], "-3/8");
        let back = IntervalSet::from_rational_strings(&text, Ambient::Unit).unwrap();
        assert_eq!(back, s);
        let third = IntervalSet::from_rational_strings(
            &[["-1/3".to_string(), "1/3".to_string()]],
            Ambient::Unit,
        )
        .unwrap();
        let (a, b) = third.intervals()[0];
        assert!(dyadic_to_rational(a) < BigRational::new((-1).into(), 3.into()));
        assert!(dyadic_to_rational(b) > BigRational::new(1.into(), 3.into()));
    }

    #[test]
    fn ceil_ratio_exact_at_integers() {
        assert_eq!(ceil_ratio(0.75, 0.25), 3);
        assert_eq!(ceil_ratio(0.75000001, 0.25), 4);
        assert_eq!(ceil_ratio(0.1, 0.1), 1);
    }

    #[test]
    fn contains_and_intersect() {
        let a = IntervalSet::new(vec![(-0.5, -0.25), (0.0, 0.25)], Ambient::Unit);
        let b = IntervalSet::new(vec![(-0.3, 0.1)], Ambient::Unit);
        assert!(a.contains(-0.25) && !a.contains(-0.1));
        assert_eq!(a.intersect(&b).intervals(), &[(-0.3, -0.25), (0.0, 0.1)]);
    }
}
