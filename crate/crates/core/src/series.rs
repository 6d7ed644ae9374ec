//! Numeric convergence diagnostics for the series that decide the
//! Hausdorff measure: main sums, condensation, rescaling and constant
//! absorption, plus the reducible-cubic decoupling harness.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fit::fit_line;
use crate::functions::{ApproxFunction, DimensionFunction, LogLogTable};
use crate::measures::Verdict;
use crate::polycore::{factor_cubic, CubicFactorization, IntPoly};

/// Margin on the log-log term slope.
pub const SERIES_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub q: f64,
    pub ln_term: f64,
    /// `ln` of the partial sum up to `q`; stays finite where the sum overflows.
    pub ln_partial_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    pub checkpoints: Vec<Checkpoint>,
    /// Fitted slope of the log-term over the upper half of the checkpoints.
    pub slope: f64,
    pub threshold: f64,
    pub margin: f64,
    pub verdict: Verdict,
    /// Closed-form verdict, known for power-law inputs only.
    pub analytic: Option<Verdict>,
}

impl SeriesVerdict {
    pub const CSV_HEADER: &'static str = "series,q_max,slope,threshold,margin,verdict,analytic";

    pub fn csv_row(&self, label: &str) -> String {
        let q_max = self.checkpoints.last().map_or(0.0, |c| c.q);
        format!(
            "{label},{q_max:?},{:?},{:?},{:?},{},{}",
            self.slope,
            self.threshold,
            self.margin,
            self.verdict,
            self.analytic.map_or("", |v| v.name())
        )
    }
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn upper_half_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let start = xs.len() / 2;
    Ok(fit_line(&xs[start..], &ys[start..])?.slope)
}

/// `sum_{q=1}^{q_max} exp(ln_term(ln q))` with checkpoints at powers of two.
fn q_series(ln_term: impl Fn(f64) -> f64, q_max: u64, analytic: Option<Verdict>) -> Result<SeriesVerdict> {
    if q_max < 100 {
        return Err(LabError::Precondition(format!("q_max must be at least 100, got {q_max}")));
    }
    let mut acc = f64::NEG_INFINITY;
    let mut checkpoints = Vec::new();
    let mut next = 1u64;
    for q in 1..=q_max {
        let lt = ln_term((q as f64).ln());
        acc = ln_add(acc, lt);
        if q == next {
            checkpoints.push(Checkpoint {
                q: q as f64,
                ln_term: lt,
                ln_partial_sum: acc,
            });
            next *= 2;
        }
    }
    let xs: Vec<f64> = checkpoints.iter().map(|c| c.q.ln()).collect();
    let ys: Vec<f64> = checkpoints.iter().map(|c| c.ln_term).collect();
    let slope = upper_half_slope(&xs, &ys)?;
    Ok(SeriesVerdict {
        checkpoints,
        slope,
        threshold: -1.0,
        margin: SERIES_MARGIN,
        verdict: Verdict::from_slope(slope, -1.0, SERIES_MARGIN),
        analytic,
    })
}

/// p-series verdict for `q^e`.
pub fn p_series_verdict(e: f64) -> Verdict {
    if e < -1.0 {
        Verdict::Converges
    } else {
        Verdict::Diverges
    }
}

/// Term exponent `exponent - s(w + 1)` when both functions are power laws.
pub fn term_exponent(psi: &ApproxFunction, g: &DimensionFunction, exponent: f64) -> Option<f64> {
    Some(exponent - g.exponent()? * (psi.exponent()? + 1.0))
}

fn ln_main_term(psi: &ApproxFunction, g: &DimensionFunction, exponent: f64, c: f64, lq: f64) -> f64 {
    g.ln_eval_ln(psi.ln_eval(c * lq.exp()) - lq) + exponent * lq
}

/// `sum g(psi(q)/q) q^exponent`.
pub fn main_series(psi: &ApproxFunction, g: &DimensionFunction, exponent: f64, q_max: u64) -> Result<SeriesVerdict> {
    rescaled_series(psi, g, exponent, 1.0, q_max)
}

/// `sum g(psi(c q)/q) q^exponent`.
pub fn rescaled_series(
    psi: &ApproxFunction,
    g: &DimensionFunction,
    exponent: f64,
    c: f64,
    q_max: u64,
) -> Result<SeriesVerdict> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(LabError::Domain(format!("rescaling constant must be positive, got {c}")));
    }
    let analytic = term_exponent(psi, g, exponent).map(p_series_verdict);
    q_series(|lq| ln_main_term(psi, g, exponent, c, lq), q_max, analytic)
}

/// `sum_t g(psi(2^t)/2^t) 2^{t(exponent+1)}`, judged by the slope of
/// `log2 term` against `t` around zero.
pub fn dyadic_series(psi: &ApproxFunction, g: &DimensionFunction, exponent: f64, t_max: u32) -> Result<SeriesVerdict> {
    if t_max < 8 {
        return Err(LabError::Precondition(format!("t_max must be at least 8, got {t_max}")));
    }
    let ln2 = std::f64::consts::LN_2;
    let mut acc = f64::NEG_INFINITY;
    let mut checkpoints = Vec::new();
    for t in 0..=t_max {
        let lq = t as f64 * ln2;
        let lt = ln_main_term(psi, g, exponent, 1.0, lq) + lq;
        acc = ln_add(acc, lt);
        checkpoints.push(Checkpoint {
            q: (t as f64).exp2(),
            ln_term: lt,
            ln_partial_sum: acc,
        });
    }
    let xs: Vec<f64> = (0..=t_max).map(|t| t as f64).collect();
    let ys: Vec<f64> = checkpoints.iter().map(|c| c.ln_term / ln2).collect();
    let slope = upper_half_slope(&xs, &ys)?;
    let analytic = term_exponent(psi, g, exponent).map(|e| if e + 1.0 < 0.0 { Verdict::Converges } else { Verdict::Diverges });
    Ok(SeriesVerdict {
        checkpoints,
        slope,
        threshold: 0.0,
        margin: SERIES_MARGIN,
        verdict: Verdict::from_slope(slope, 0.0, SERIES_MARGIN),
        analytic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub first: SeriesVerdict,
    pub second: SeriesVerdict,
    pub agree: bool,
}

fn pair(first: SeriesVerdict, second: SeriesVerdict) -> PairVerdict {
    let agree = first.verdict == second.verdict;
    PairVerdict { first, second, agree }
}

/// The `q`-indexed series (up to `2^t_max`) against its dyadic condensation.
pub fn condensation_pair(psi: &ApproxFunction, g: &DimensionFunction, exponent: f64, t_max: u32) -> Result<PairVerdict> {
    let dyadic = dyadic_series(psi, g, exponent, t_max)?;
    let q = main_series(psi, g, exponent, 1u64 << t_max)?;
    Ok(pair(q, dyadic))
}

pub fn rescale_equivalence(
    psi: &ApproxFunction,
    g: &DimensionFunction,
    exponent: f64,
    c1: f64,
    c2: f64,
    q_max: u64,
) -> Result<PairVerdict> {
    if !(c1 > 0.0 && c1 <= c2) {
        return Err(LabError::Precondition(format!("need 0 < c1 <= c2, got c1={c1}, c2={c2}")));
    }
    Ok(pair(
        rescaled_series(psi, g, exponent, c1, q_max)?,
        rescaled_series(psi, g, exponent, c2, q_max)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Absorption {
    /// `S_c = sum g(c q^{-w-1}) q^h`.
    pub s_c: SeriesVerdict,
    /// `S = sum g(q^{-w-1}) q^{h+eps}`.
    pub s: SeriesVerdict,
    /// `S` converging never comes with `S_c` diverging.
    pub implication_holds: bool,
    /// `S` does not converge, so the implication says nothing.
    pub vacuous: bool,
}

pub fn constant_absorption(g: &DimensionFunction, w: f64, h: f64, c: f64, eps: f64, q_max: u64) -> Result<Absorption> {
    if !(c > 0.0 && h > 0.0 && eps > 0.0 && w > 0.0) {
        return Err(LabError::Precondition("c, h, eps and w must be positive".into()));
    }
    let analytic = |k: f64| g.exponent().map(|s| p_series_verdict(k - s * (w + 1.0)));
    let lc = c.ln();
    let s_c = q_series(|lq| g.ln_eval_ln(lc - (w + 1.0) * lq) + h * lq, q_max, analytic(h))?;
    let s = q_series(|lq| g.ln_eval_ln(-(w + 1.0) * lq) + (h + eps) * lq, q_max, analytic(h + eps))?;
    let vacuous = s.verdict != Verdict::Converges;
    let implication_holds = vacuous || s_c.verdict != Verdict::Diverges;
    Ok(Absorption {
        s_c,
        s,
        implication_holds,
        vacuous,
    })
}

/// `0 < 2 lambda < 1 - log_H psi(H)` at `H`.
pub fn lambda_coupling_holds(lambda: f64, psi: &ApproxFunction, h: f64) -> bool {
    h > 1.0 && 0.0 < 2.0 * lambda && 2.0 * lambda < 1.0 - psi.ln_eval(h) / h.ln()
}

/// The coupling checked at both ends of each dyadic block `[2^t, 2^{t+1})`.
pub fn lambda_coupling_per_block(lambda: f64, psi: &ApproxFunction, ts: &[u32]) -> Vec<(u32, bool)> {
    ts.iter()
        .map(|&t| {
            let lo = (t.max(1) as f64).exp2();
            (t, lambda_coupling_holds(lambda, psi, lo) && lambda_coupling_holds(lambda, psi, 2.0 * lo))
        })
        .collect()
}

/// Per-sample result of [`reducible_decoupling_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecouplingRow {
    pub x: f64,
    pub h_max: i64,
    /// Reducible cubics with `|P(x)| <= H(P)^-w`.
    pub qualifying: u64,
    /// Max over those `P` of `min_i |P_i(x)| H(P_i)^w`.
    pub constant: f64,
    /// How often the linear (resp. quadratic) factor attained the minimum.
    pub linear_hits: u64,
    pub quadratic_hits: u64,
}

/// For reducible cubics `P = P1 P2` with `H(P) <= h_max` and
/// `|P(x)| <= H(P)^-w`, measures the smallest `c` such that some factor
/// has `|P_i(x)| <= c H(P_i)^-w`.
pub fn reducible_decoupling_check(w: f64, x_samples: &[f64], h_max: i64) -> Result<Vec<DecouplingRow>> {
    if !(w > 0.0) || h_max < 1 {
        return Err(LabError::Domain("need w > 0 and h_max >= 1".into()));
    }
    x_samples.iter().map(|&x| decoupling_row(w, x, h_max)).collect()
}

fn height_f64(p: &IntPoly) -> f64 {
    p.coeffs().iter().map(crate::polycore::discriminant::abs_f64).fold(0.0, f64::max)
}

fn decoupling_row(w: f64, x: f64, h_max: i64) -> Result<DecouplingRow> {
    let mut row = DecouplingRow {
        x,
        h_max,
        qualifying: 0,
        constant: 0.0,
        linear_hits: 0,
        quadratic_hits: 0,
    };
    let (x2, x3) = (x * x, x * x * x);
    for a3 in -h_max..=h_max {
        if a3 == 0 {
            continue;
        }
        for a2 in -h_max..=h_max {
            for a1 in -h_max..=h_max {
                let r = a3 as f64 * x3 + a2 as f64 * x2 + a1 as f64 * x;
                // |P(x)| <= 1 leaves at most two constant terms.
                let lo = (-r - 1.0).ceil() as i64;
                let hi = (-r + 1.0).floor() as i64;
                for a0 in lo.max(-h_max)..=hi.min(h_max) {
                    let h = a0.abs().max(a1.abs()).max(a2.abs()).max(a3.abs());
                    let bound = (h as f64).powf(-w);
                    if (r + a0 as f64).abs() > bound {
                        continue;
                    }
                    let p = IntPoly::from_i64(&[a0, a1, a2, a3]);
                    let CubicFactorization::Reducible(pair) = factor_cubic(&p)? else {
                        continue;
                    };
                    row.qualifying += 1;
                    let c1 = pair.linear.eval_f64(x).abs() * height_f64(&pair.linear).powf(w);
                    let c2 = pair.quadratic.eval_f64(x).abs() * height_f64(&pair.quadratic).powf(w);
                    if c1 <= c2 {
                        row.linear_hits += 1;
                    } else {
                        row.quadratic_hits += 1;
                    }
                    row.constant = row.constant.max(c1.min(c2));
                }
            }
        }
    }
    Ok(row)
}

/// One entry of a series battery; `expected` is the p-series verdict of
/// the tail exponent when it is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryCase {
    pub psi: ApproxFunction,
    pub g: DimensionFunction,
    pub exponent: f64,
    pub expected: Option<Verdict>,
}

impl BatteryCase {
    /// Tail exponent of the terms: last table slope for `psi`, first table
    /// slope for `g` (its argument tends to zero).
    pub fn tail_exponent(&self) -> f64 {
        let w = match &self.psi {
            ApproxFunction::PowerLaw { w } => *w,
            ApproxFunction::Custom { table } => -table.end_slopes().1,
        };
        let s = match &self.g {
            DimensionFunction::Power { s } => *s,
            DimensionFunction::Custom { table } => table.end_slopes().0,
        };
        self.exponent - s * (w + 1.0)
    }
}

/// `q_max` of the battery: the upper half of the checkpoints starts at
/// `2^8`, beyond every table node even after rescaling by `1/10`.
pub const BATTERY_Q_MAX: u64 = 1 << 16;
pub const BATTERY_T_MAX: u32 = 16;

fn table(nodes: &[(f64, f64)]) -> LogLogTable {
    LogLogTable::new(nodes.iter().map(|n| n.0).collect(), nodes.iter().map(|n| n.1).collect()).unwrap()
}

/// Power-law triples kept at least 0.15 away from the critical line,
/// plus custom tables whose nodes all lie below 16.
pub fn standard_battery() -> Vec<BatteryCase> {
    let mut cases = Vec::new();
    for w in [1.0, 2.0, 3.0, 5.0] {
        for s in [0.25, 0.5, 0.75, 1.0] {
            for exponent in [1.0, 2.0, 3.0] {
                let e: f64 = exponent - s * (w + 1.0);
                if (e + 1.0).abs() < 0.15 {
                    continue;
                }
                cases.push(BatteryCase {
                    psi: ApproxFunction::PowerLaw { w },
                    g: DimensionFunction::Power { s },
                    exponent,
                    expected: Some(p_series_verdict(e)),
                });
            }
        }
    }
    let psis = [
        table(&[(1.0, 1.0), (4.0, 0.1), (16.0, 1e-4)]),
        table(&[(1.0, 0.5), (2.0, 0.4), (8.0, 0.01), (16.0, 0.001)]),
        table(&[(1.0, 1.0), (16.0, 16f64.powf(-1.5))]),
    ];
    let gs = [
        DimensionFunction::Power { s: 0.5 },
        DimensionFunction::Power { s: 0.8 },
        DimensionFunction::Custom {
            table: table(&[(1e-12, 1e-6), (1e-3, 0.05), (1.0, 1.0)]),
        },
    ];
    for t in &psis {
        for g in &gs {
            for exponent in [1.0, 2.0, 3.0] {
                let mut case = BatteryCase {
                    psi: ApproxFunction::Custom { table: t.clone() },
                    g: g.clone(),
                    exponent,
                    expected: None,
                };
                let e = case.tail_exponent();
                if (e + 1.0).abs() < 0.15 {
                    continue;
                }
                case.expected = Some(p_series_verdict(e));
                cases.push(case);
            }
        }
    }
    cases
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psi(w: f64) -> ApproxFunction {
        ApproxFunction::power(w).unwrap()
    }

    fn g(s: f64) -> DimensionFunction {
        DimensionFunction::power(s).unwrap()
    }

    #[test]
    fn main_series_examples() {
        let v = main_series(&psi(5.0), &g(2.0 / 3.0), 3.0, 1 << 12).unwrap();
        assert_eq!(v.analytic, Some(Verdict::Diverges));
        assert!((v.slope + 1.0).abs() < 1e-9);
        assert_eq!(v.verdict, Verdict::Ambiguous);
        let v = main_series(&psi(5.0), &g(0.7), 3.0, 1 << 12).unwrap();
        assert_eq!((v.verdict, v.analytic), (Verdict::Converges, Some(Verdict::Converges)));
        let v = main_series(&psi(2.0), &g(0.0), 0.0, 1000).unwrap();
        assert_eq!(v.verdict, Verdict::Diverges);
        // Constant terms: the partial sum at q = 512 is 512.
        assert!((v.checkpoints.last().unwrap().ln_partial_sum - 512f64.ln()).abs() < 1e-9);
        assert!(main_series(&psi(2.0), &g(0.5), 1.0, 99).is_err());
    }

    #[test]
    fn condensation_examples() {
        let p = condensation_pair(&psi(5.0), &g(0.7), 3.0, 16).unwrap();
        assert!(p.agree && p.first.verdict == Verdict::Converges);
        let p = condensation_pair(&psi(1.0), &g(0.1), 3.0, 16).unwrap();
        assert!(p.agree && p.first.verdict == Verdict::Diverges);
        assert!((p.second.slope - 3.8).abs() < 1e-9);
        assert!(condensation_pair(&psi(1.0), &g(0.1), 3.0, 7).is_err());
    }

    #[test]
    fn rescale_and_absorption_examples() {
        let r = rescale_equivalence(&psi(3.0), &g(0.5), 2.0, 0.5, 2.0, 1 << 14).unwrap();
        assert!(r.agree);
        assert!(rescale_equivalence(&psi(3.0), &g(0.5), 2.0, 2.0, 0.5, 1 << 14).is_err());
        let a = constant_absorption(&g(0.5), 5.0, 2.0, 10.0, 0.5, 1 << 14).unwrap();
        assert!(a.vacuous && a.implication_holds);
        let a = constant_absorption(&g(0.6), 5.0, 2.0, 10.0, 0.1, 1 << 14).unwrap();
        assert!(!a.vacuous && a.implication_holds);
        assert_eq!(a.s_c.verdict, Verdict::Converges);
    }

    #[test]
    fn battery_verdicts() {
        let cases = standard_battery();
        assert!(cases.len() >= 50, "{}", cases.len());
        for case in &cases {
            let v = main_series(&case.psi, &case.g, case.exponent, BATTERY_Q_MAX).unwrap();
            assert_eq!(Some(v.verdict), case.expected, "{case:?} slope {}", v.slope);
            let p = condensation_pair(&case.psi, &case.g, case.exponent, BATTERY_T_MAX).unwrap();
            assert!(p.agree, "{case:?}");
            for (c1, c2) in [(0.5, 2.0), (0.1, 10.0)] {
                let r = rescale_equivalence(&case.psi, &case.g, case.exponent, c1, c2, BATTERY_Q_MAX).unwrap();
                assert!(r.agree, "{case:?} at ({c1}, {c2})");
            }
        }
    }

    #[test]
    fn coupling() {
        assert!(lambda_coupling_holds(0.25, &psi(3.0), 16.0));
        assert!(!lambda_coupling_holds(0.0, &psi(3.0), 16.0));
        assert!(!lambda_coupling_holds(2.5, &psi(3.0), 16.0));
    }

    #[test]
    fn decoupling_examples() {
        // x = 1/4 is a root of 4X - 1, which divides many cubics.
        let rows = reducible_decoupling_check(3.0, &[0.25], 8).unwrap();
        assert!(rows[0].qualifying > 0);
        assert!(rows[0].linear_hits > 0);
        let rows = reducible_decoupling_check(3.0, &[0.5 * (5f64.sqrt() - 1.0) - 0.5], 1).unwrap();
        assert!(rows[0].constant.is_finite());
    }
}
