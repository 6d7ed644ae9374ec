//! Per-polynomial sets and the `B_n(Q, eps)` union.

use num_traits::{Signed, ToPrimitive};

use crate::covers::interval::{add_up, sub_down, Ambient, IntervalSet, UNIT_HI, UNIT_LO};
use crate::covers::pipeline::{Classifier, EtaRule, Sweep};
use crate::covers::sublevel::{sublevel_exact, PrefixKernel, BRACKET_WIDTH};
use crate::error::{LabError, Result};
use crate::families::{FamilySpec, DEFAULT_BUDGET};
use crate::functions::ApproxFunction;
use crate::polycore::{roots, IntPoly};

/// Lower bound on `|P'|` in `sigma_eps`.
pub const SLOPE_BOUND: f64 = 2.0;

/// `{x in [lo, hi] : |P(x)| <= eta, |P'(x)| >= kappa}`; the fast kernel
/// when it applies, the exact engine otherwise.
pub fn sublevel(p: &IntPoly, eta: f64, kappa: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    if let Some(c) = p.to_i64().filter(|c| c.len() <= 4 && c.len() >= 2) {
        if let Some(k) = PrefixKernel::new(&c, lo, hi, kappa) {
            let mut out = Vec::new();
            if k.level_set(c[0], eta, &mut out) {
                return out;
            }
        }
    }
    sublevel_exact(p, eta, kappa, lo, hi, BRACKET_WIDTH)
}

fn check_poly(p: &IntPoly) -> Result<()> {
    if p.is_zero() {
        return Err(LabError::Domain("the zero polynomial has no sublevel set".into()));
    }
    Ok(())
}

/// `{x in I : |P(x)| <= eps, |P'(x)| >= 2}`.
pub fn sigma_eps(p: &IntPoly, eps: f64) -> Result<IntervalSet> {
    check_poly(p)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(LabError::Domain(format!("eps must be positive, got {eps}")));
    }
    let v = sublevel(p, eps, SLOPE_BOUND, UNIT_LO, UNIT_HI);
    Ok(IntervalSet::new(v, Ambient::Unit))
}

/// `{x in I : |P(x)| <= psi(H(P))}`.
pub fn gamma_psi(p: &IntPoly, psi: &ApproxFunction) -> Result<IntervalSet> {
    check_poly(p)?;
    let h = p.height()?.to_f64().unwrap_or(f64::INFINITY);
    let v = sublevel(p, psi.eval(h), 0.0, UNIT_LO, UNIT_HI);
    Ok(IntervalSet::new(v, Ambient::Unit))
}

/// Family used by [`b_set`].
#[derive(Debug, Clone)]
pub struct BSetOptions {
    pub budget: u128,
    /// Class restriction; `None` takes every nonzero polynomial.
    /// Only `kind`, `lambda`, `c` and `disc_degree` are read.
    pub class: Option<FamilySpec>,
}

impl Default for BSetOptions {
    fn default() -> Self {
        BSetOptions {
            budget: DEFAULT_BUDGET,
            class: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BSet {
    pub set: IntervalSet,
    /// Exact measure rounded to the nearest double.
    pub measure: f64,
    /// Polynomials whose exact-engine fallback was used.
    pub fallbacks: u64,
}

/// Union of `sigma_eps(P)` over nonzero `P` with `deg P <= n`, `H(P) <= Q`.
pub fn b_set(n: usize, q: i64, eps: f64, opts: &BSetOptions) -> Result<BSet> {
    if n == 0 || q < 1 {
        return Err(LabError::Domain(format!("b_set needs n >= 1 and Q >= 1, got n={n}, Q={q}")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(LabError::Domain(format!("eps must be positive, got {eps}")));
    }
    let class = match &opts.class {
        None => Classifier::All,
        Some(spec) => {
            // A block whose upper height bound exceeds Q.
            let t = (64 - (q as u64).leading_zeros()).saturating_sub(1);
            let spec = FamilySpec { n, t, ..spec.clone() };
            spec.validate()?;
            Classifier::for_spec(&spec)
        }
    };
    let sweep = Sweep {
        n,
        cmax: q,
        h_min: 1,
        kappa: SLOPE_BOUND,
        eta: EtaRule::Constant(eps),
        class,
    };
    sweep.check_budget(opts.budget, &format!("reduce Q below {q}"))?;
    let out = sweep.run_slab(UNIT_LO, UNIT_HI)?;
    let set = IntervalSet::new(out.intervals.into_iter().flatten().collect(), Ambient::Unit);
    let measure = set.measure().to_f64().unwrap_or(f64::NAN);
    Ok(BSet {
        set,
        measure,
        fallbacks: out.fallbacks,
    })
}

/// `c H(P) |D(P)|^(-1/2) psi(H(P))`.
pub fn root_neighborhood_radius(p: &IntPoly, psi: &ApproxFunction, c: f64) -> Result<f64> {
    if p.degree() != 3 {
        return Err(LabError::Domain(format!("root neighbourhoods need a cubic, got degree {}", p.degree())));
    }
    let d = p.discriminant()?;
    if d.abs().to_f64() == Some(0.0) {
        return Err(LabError::Domain(format!("discriminant of {p} vanishes")));
    }
    let h = p.height()?.to_f64().unwrap_or(f64::INFINITY);
    let d = d.abs().to_f64().unwrap_or(f64::INFINITY);
    Ok(c * h / d.sqrt() * psi.eval(h))
}

/// Intervals of radius `r(P, psi)` about the real roots of a cubic,
/// clipped to `I`.
pub fn root_neighborhood_cover(p: &IntPoly, psi: &ApproxFunction, c: f64) -> Result<IntervalSet> {
    let r = root_neighborhood_radius(p, psi, c)?;
    let rs = roots(p, 1e-12)?;
    let v = rs
        .real()
        .map(|root| {
            let (a, b) = root.bracket.unwrap_or((root.re, root.re));
            (sub_down(a, r), add_up(b, r))
        })
        .collect();
    Ok(IntervalSet::new(v, Ambient::Unit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    fn approx(s: &IntervalSet, want: &[(f64, f64)]) -> bool {
        s.intervals().len() == want.len()
            && s.intervals().iter().zip(want).all(|(x, y)| (x.0 - y.0).abs() < 1e-12 && (x.1 - y.1).abs() < 1e-12)
    }

    #[test]
    fn sigma_examples() {
        let s = sigma_eps(&poly(&[0, 4]), 0.5).unwrap();
        assert!(approx(&s, &[(-0.125, 0.125)]), "{s:?}");
        assert!((s.measure_f64() - 0.25).abs() < 1e-12);
        assert!(sigma_eps(&poly(&[0, 1]), 0.5).unwrap().is_empty());
        let s = sigma_eps(&poly(&[-1, 0, 8]), 0.25).unwrap();
        let (a, b) = ((3.0f64 / 32.0).sqrt(), (5.0f64 / 32.0).sqrt());
        assert!(approx(&s, &[(-b, -a), (a, b)]), "{s:?}");
        assert!(sigma_eps(&IntPoly::zero(), 0.5).is_err());
        assert!(sigma_eps(&poly(&[0, 4]), 0.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        let one = ApproxFunction::Custom {
            table: crate::functions::LogLogTable { xs: vec![1.0, 2.0], ys: vec![1.0, 1.0] },
        };
        let s = gamma_psi(&poly(&[0, 2]), &one).unwrap();
        assert!(approx(&s, &[(-0.5, 0.5)]), "{s:?}");
        let inv = ApproxFunction::power(1.0).unwrap();
        assert!(gamma_psi(&poly(&[-2, 1]), &inv).unwrap().is_empty());
        let s = gamma_psi(&poly(&[0, 4]), &inv).unwrap();
        assert!(approx(&s, &[(-0.0625, 0.0625)]), "{s:?}");
    }

    #[test]
    fn b_set_block_zero_is_empty() {
        let b = b_set(1, 1, 0.1, &BSetOptions::default()).unwrap();
        assert!(b.set.is_empty());
        assert_eq!(b.measure, 0.0);
    }

    #[test]
    fn b_set_matches_brute_force_union() {
        let eps = 0.01;
        let b = b_set(2, 3, eps, &BSetOptions::default()).unwrap();
        let mut all = IntervalSet::empty(Ambient::Unit);
        for a2 in -3..=3 {
            for a1 in -3..=3 {
                for a0 in -3..=3i64 {
                    let p = poly(&[a0, a1, a2]);
                    if !p.is_zero() {
                        let s = IntervalSet::new(sublevel_exact(&p, eps, 2.0, -0.5, 0.5, BRACKET_WIDTH), Ambient::Unit);
                        all = all.union(&s);
                    }
                }
            }
        }
        assert!((b.measure - all.measure_f64()).abs() < 1e-10, "{} vs {}", b.measure, all.measure_f64());
        assert_eq!(b.set.component_count(), all.component_count());
    }

    #[test]
    fn root_cover_contains_sublevel_and_scales() {
        let p = poly(&[1, -7, 0, 9]);
        let psi = ApproxFunction::power(2.0).unwrap();
        let r = root_neighborhood_radius(&p, &psi, 1.0).unwrap();
        let half = ApproxFunction::Custom {
            table: crate::functions::LogLogTable { xs: vec![1.0, 9.0, 100.0], ys: vec![0.5, 0.5 / 81.0, 0.5e-4] },
        };
        let r2 = root_neighborhood_radius(&p, &half, 1.0).unwrap();
        assert!((r2 / r - 0.5).abs() < 1e-12);
        let cover = root_neighborhood_cover(&p, &psi, 1.0).unwrap();
        assert!(cover.component_count() <= 3);
        assert!(root_neighborhood_cover(&poly(&[0, 0, 0, 1]), &psi, 1.0).is_err());
        assert!(root_neighborhood_cover(&poly(&[0, 0, 1]), &psi, 1.0).is_err());
    }
}
