//! Finite-stage cover sums, critical-exponent brackets and box counts.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::covers::interval::dyadic_to_rational;
use crate::covers::{cover_block, CoverReport, CoverRequest, IntervalSet, UNIT_LO};
use crate::error::{LabError, Result};
use crate::fit::fit_line;
use crate::functions::DimensionFunction;

/// Behaviour of a sequence of terms judged from its log-linear slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converges,
    Diverges,
    Ambiguous,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Converges => "converges",
            Verdict::Diverges => "diverges",
            Verdict::Ambiguous => "ambiguous",
        }
    }

    /// `slope <= threshold - margin` converges, `>= threshold + margin` diverges.
    pub fn from_slope(slope: f64, threshold: f64, margin: f64) -> Verdict {
        if slope <= threshold - margin {
            Verdict::Converges
        } else if slope >= threshold + margin {
            Verdict::Diverges
        } else {
            Verdict::Ambiguous
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Default margin on the slope of `log2(g(ell_t) N_t)` against `t`.
pub const DEFAULT_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    CoverSum,
    BoxCount,
}

impl FromStr for EstimateMethod {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cover_sum" => Ok(EstimateMethod::CoverSum),
            "box_count" => Ok(EstimateMethod::BoxCount),
            _ => Err(LabError::Parse(format!("unknown estimate method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub s_low: f64,
    pub s_high: f64,
    pub method: EstimateMethod,
    pub t_range: (u32, u32),
    pub margin: f64,
}

impl DimensionEstimate {
    pub fn contains(&self, s: f64) -> bool {
        self.s_low <= s && s <= self.s_high
    }

    pub fn width(&self) -> f64 {
        self.s_high - self.s_low
    }
}

/// Partial cover sum over consecutive blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSum {
    pub sum: f64,
    pub t_first: u32,
    pub t_last: u32,
    pub last_term: f64,
    /// The last term is not small against the sum, so the unseen tail may matter.
    pub tail_flagged: bool,
}

/// `sum g(ell_t) N_t` over reports with consecutive `t >= t0`.
pub fn cover_sum(reports: &[CoverReport], g: &DimensionFunction, t0: u32) -> Result<CoverSum> {
    let first = reports.first().ok_or_else(|| LabError::Domain("cover_sum needs at least one report".into()))?;
    if first.t < t0 {
        return Err(LabError::Precondition(format!("first block t = {} lies below t0 = {t0}", first.t)));
    }
    if reports.windows(2).any(|w| w[1].t != w[0].t + 1) {
        return Err(LabError::Precondition("reports must cover consecutive blocks".into()));
    }
    let terms: Vec<f64> = reports.iter().map(|r| g.eval(r.ell) * r.count as f64).collect();
    let sum: f64 = terms.iter().sum();
    let last = *terms.last().unwrap();
    let growing = terms.len() >= 2 && last >= terms[terms.len() - 2] && last > 0.0;
    Ok(CoverSum {
        sum,
        t_first: first.t,
        t_last: reports.last().unwrap().t,
        last_term: last,
        tail_flagged: growing || last > 0.01 * sum,
    })
}

/// Slope of `log2(ell_t^s N_t)` against `t`.
pub fn term_slope(reports: &[CoverReport], s: f64) -> Result<f64> {
    let g = DimensionFunction::Power { s };
    let ts: Vec<f64> = reports.iter().map(|r| r.t as f64).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.log2_term(&g)).collect();
    Ok(fit_line(&ts, &ys)?.slope)
}

/// Verdict on `ell_t^s N_t` with the given margin.
pub fn classify_exponent(reports: &[CoverReport], s: f64, margin: f64) -> Result<Verdict> {
    Ok(Verdict::from_slope(term_slope(reports, s)?, 0.0, margin))
}

/// Bracket `[s_low, s_high]`: below `s_low` the terms grow, above
/// `s_high` they decay, in between the verdict is ambiguous.
pub fn critical_exponent_from_reports(reports: &[CoverReport], margin: f64, tolerance: f64) -> Result<DimensionEstimate> {
    if reports.len() < 2 {
        return Err(LabError::Ambiguous(format!(
            "a critical exponent needs at least two blocks, got {}",
            reports.len()
        )));
    }
    let class = |s: f64| classify_exponent(reports, s, margin);
    let mut s_max = 1.0;
    while class(s_max)? != Verdict::Converges {
        s_max *= 2.0;
        if s_max > 1024.0 {
            return Err(LabError::Ambiguous("terms do not decay for any s <= 1024".into()));
        }
    }
    // Monotonicity scan: diverges*, ambiguous*, converges*.
    let rank = |v: Verdict| match v {
        Verdict::Diverges => 0,
        Verdict::Ambiguous => 1,
        Verdict::Converges => 2,
    };
    let grid = 64;
    let mut prev = 0;
    let mut seen = Vec::with_capacity(grid + 1);
    for i in 0..=grid {
        let s = s_max * i as f64 / grid as f64;
        let r = rank(class(s)?);
        seen.push(format!("{s:.4}:{}", ["div", "amb", "conv"][r]));
        if r < prev {
            return Err(LabError::Ambiguous(format!(
                "classification is not monotone in s: {}",
                seen.join(" ")
            )));
        }
        prev = r;
    }
    let boundary = |target: usize| -> Result<f64> {
        // Smallest s whose rank reaches `target`.
        let (mut lo, mut hi) = (0.0, s_max);
        if rank(class(0.0)?) >= target {
            return Ok(0.0);
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if rank(class(mid)?) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    };
    let s_low = boundary(1)?;
    let s_high = boundary(2)?;
    if s_high - s_low > tolerance {
        return Err(LabError::Ambiguous(format!(
            "bracket [{s_low:.4}, {s_high:.4}] is wider than the tolerance {tolerance}"
        )));
    }
    Ok(DimensionEstimate {
        s_low,
        s_high,
        method: EstimateMethod::CoverSum,
        t_range: (reports[0].t, reports.last().unwrap().t),
        margin,
    })
}

/// Runs the pipeline over `t_range` and brackets the critical exponent.
pub fn critical_exponent(
    template: &CoverRequest,
    t_range: RangeInclusive<u32>,
    margin: f64,
    tolerance: f64,
) -> Result<(DimensionEstimate, Vec<CoverReport>)> {
    let g = DimensionFunction::Power { s: 1.0 };
    let reports = t_range
        .map(|t| cover_block(&template.with_t(t), &g))
        .collect::<Result<Vec<_>>>()?;
    let est = critical_exponent_from_reports(&reports, margin, tolerance)?;
    Ok((est, reports))
}

/// Box-counting estimate from per-block counts at each block's own scale:
/// slope of `log2(boxes_t)` over slope of `-log2(ell_t)`.
pub fn box_dimension(reports: &[CoverReport]) -> Result<DimensionEstimate> {
    if reports.len() < 2 {
        return Err(LabError::Ambiguous("box counting needs at least two blocks".into()));
    }
    let ts: Vec<f64> = reports.iter().map(|r| r.t as f64).collect();
    let nb: Vec<f64> = reports.iter().map(|r| (r.box_count as f64).log2()).collect();
    let sc: Vec<f64> = reports.iter().map(|r| -r.ell.log2()).collect();
    let s = fit_line(&ts, &nb)?.slope / fit_line(&ts, &sc)?.slope;
    Ok(DimensionEstimate {
        s_low: s,
        s_high: s,
        method: EstimateMethod::BoxCount,
        t_range: (reports[0].t, reports.last().unwrap().t),
        margin: 0.0,
    })
}

/// Number of grid boxes `[-1/2 + k w, -1/2 + (k+1) w)` of each width whose
/// interior meets the set; a one-point component meets one box. Exact.
pub fn box_count(set: &IntervalSet, scales: &[f64]) -> Result<Vec<u64>> {
    if scales.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(LabError::Domain("box widths must be positive".into()));
    }
    let origin = dyadic_to_rational(UNIT_LO);
    let ends: Vec<(BigRational, BigRational)> = set
        .intervals()
        .iter()
        .map(|&(a, b)| (dyadic_to_rational(a) - &origin, dyadic_to_rational(b) - &origin))
        .collect();
    let mut out = Vec::with_capacity(scales.len());
    for &w in scales {
        let w = dyadic_to_rational(w);
        let mut count: u64 = 0;
        let mut last: Option<BigInt> = None;
        for (a, b) in &ends {
            let first: BigInt = (a / &w).floor().to_integer();
            let end = if b > a {
                let c: BigInt = (b / &w).ceil().to_integer() - 1;
                c.max(first.clone())
            } else {
                first.clone()
            };
            let start = match &last {
                Some(l) if *l >= first => l + 1,
                _ => first,
            };
            if end >= start {
                let n: BigInt = &end - &start + 1;
                count += u64::try_from(n).unwrap_or(u64::MAX);
                last = Some(end);
            }
        }
        out.push(count);
    }
    Ok(out)
}

/// Rows `(s, t, log2 term)` for plotting term growth at several exponents.
pub fn term_curves(reports: &[CoverReport], exponents: &[f64]) -> Vec<(f64, u32, f64)> {
    let mut rows = Vec::new();
    for &s in exponents {
        let g = DimensionFunction::Power { s };
        for r in reports {
            rows.push((s, r.t, r.log2_term(&g)));
        }
    }
    rows
}

/// Exponent of the largest power of two dividing `k`; tiny helper for
/// aligned grids in tests.
pub fn two_adic(k: u64) -> u32 {
    if k == 0 {
        return 64;
    }
    let mut k = k;
    let mut e = 0;
    while k.is_even() {
        k >>= 1;
        e += 1;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::{Ambient, CoverRule};
    use crate::families::FamilyKind;

    fn report(t: u32, ell: f64, count: u64) -> CoverReport {
        CoverReport {
            t,
            rule: CoverRule::Derivative,
            n: 1,
            lambda: 0.0,
            c: 1.0,
            kind: FamilyKind::All,
            ell,
            delta: ell / 2.0,
            count,
            measure_before: 0.0,
            measure_after: 0.0,
            components_before: 0,
            components_after: 0,
            box_count: count,
            slabs: 1,
            fallbacks: 0,
            g: String::new(),
            term: 0.0,
            sigma: None,
            enlarged: None,
        }
    }

    #[test]
    fn cover_sum_examples() {
        let g = DimensionFunction::Power { s: 1.0 };
        let zeros: Vec<_> = (0..5).map(|t| report(t, 0.5f64.powi(t as i32), 0)).collect();
        assert_eq!(cover_sum(&zeros, &g, 0).unwrap().sum, 0.0);
        let geo: Vec<_> = (0..=9).map(|t| report(t, 0.5f64.powi(t as i32), 1 << t)).collect();
        let cs = cover_sum(&geo, &g, 0).unwrap();
        assert_eq!(cs.sum, 10.0);
        assert!(cs.tail_flagged);
        assert!(cover_sum(&[], &g, 0).is_err());
        assert!(cover_sum(&geo[1..], &g, 2).is_err());
    }

    #[test]
    fn bracket_for_exact_power_law() {
        // N_t = 2^(2t), ell_t = 2^(-3t): critical s = 2/3, band 0.4/3 wide.
        let reps: Vec<_> = (4..=9).map(|t| report(t, (-3.0 * t as f64).exp2(), 1 << (2 * t))).collect();
        let est = critical_exponent_from_reports(&reps, 0.2, 0.3).unwrap();
        assert!((est.s_low - 1.8 / 3.0).abs() < 1e-9 && (est.s_high - 2.2 / 3.0).abs() < 1e-9, "{est:?}");
        assert!(est.contains(2.0 / 3.0));
        assert!(critical_exponent_from_reports(&reps[..1], 0.2, 0.3).is_err());
        assert!(critical_exponent_from_reports(&reps, 0.2, 0.1).is_err());
        let bd = box_dimension(&reps).unwrap();
        assert!((bd.s_low - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn box_count_examples() {
        let s = IntervalSet::new(vec![(0.0, 0.25)], Ambient::Unit);
        assert_eq!(box_count(&s, &[1.0 / 16.0]).unwrap(), vec![4]);
        let e = IntervalSet::empty(Ambient::Unit);
        assert_eq!(box_count(&e, &[0.5, 0.25]).unwrap(), vec![0, 0]);
        let s = IntervalSet::new(vec![(-0.3, -0.2), (0.01, 0.011), (0.3, 0.3)], Ambient::Unit);
        let widths = [1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0];
        let c = box_count(&s, &widths).unwrap();
        assert!(c.windows(2).all(|w| w[0] >= w[1]), "{c:?}");
        assert_eq!(two_adic(48), 4);
    }
}
