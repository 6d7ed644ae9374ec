use std::sync::OnceLock;

use dioplab::covers::{cover_block, Ambient, CoverReport, CoverRequest, CoverRule, IntervalSet};
use dioplab::families::{census, CensusPlan, FamilyKind, FamilySpec};
use dioplab::functions::{ApproxFunction, DimensionFunction};
use dioplab::lemmas::shift_by_composition;
use dioplab::measures::{classify_exponent, cover_sum, Verdict};
use dioplab::polycore::{mahler_measure, IntPoly};
use dioplab::series::p_series_verdict;
use num_bigint::BigInt;
use num_traits::Signed;
use proptest::prelude::*;

fn poly() -> impl Strategy<Value = IntPoly> {
    prop::collection::vec(-100i64..=100, 1..=6).prop_map(|c| IntPoly::from_i64(&c))
}

fn rank(v: Verdict) -> u8 {
    match v {
        Verdict::Diverges => 0,
        Verdict::Ambiguous => 1,
        Verdict::Converges => 2,
    }
}

fn reports() -> &'static [CoverReport] {
    static R: OnceLock<Vec<CoverReport>> = OnceLock::new();
    R.get_or_init(|| {
        let g = DimensionFunction::power(1.0).unwrap();
        let base = CoverRequest::new(
            FamilySpec::new(1, 0.0, 1.0, FamilyKind::All, 3),
            ApproxFunction::power(2.0).unwrap(),
            CoverRule::Derivative,
        );
        (3..=7).map(|t| cover_block(&base.with_t(t), &g).unwrap()).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn translation_is_invertible_and_matches_composition(p in poly(), m in -10i64..=10) {
        let mb = BigInt::from(m);
        let q = p.translate(&mb);
        prop_assert_eq!(&q, &shift_by_composition(&p, m));
        prop_assert_eq!(q.translate(&-mb), p.clone());
        prop_assert_eq!(q.degree(), p.degree());
    }

    #[test]
    fn translated_height_bound(p in poly(), m in -10i64..=10) {
        let q = p.translate(&BigInt::from(m));
        let bound = BigInt::from(1 + m.abs()).pow(p.degree() as u32) * p.height().unwrap();
        prop_assert!(q.height().unwrap() <= bound);
    }

    #[test]
    fn discriminant_is_translation_invariant(p in poly(), m in -5i64..=5) {
        prop_assume!(p.degree() >= 1);
        let q = p.translate(&BigInt::from(m));
        prop_assert_eq!(p.discriminant().unwrap(), q.discriminant().unwrap());
    }

    #[test]
    fn mahler_is_multiplicative(
        a in prop::collection::vec(-9i64..=9, 1..=4),
        b in prop::collection::vec(-9i64..=9, 1..=4),
    ) {
        let (p, q) = (IntPoly::from_i64(&a), IntPoly::from_i64(&b));
        prop_assume!(!p.is_zero() && !q.is_zero());
        let mp = mahler_measure(&p, 1e-9).unwrap();
        let mq = mahler_measure(&q, 1e-9).unwrap();
        let mpq = mahler_measure(&(&p * &q), 1e-9).unwrap();
        prop_assert!((mpq - mp * mq).abs() <= 1e-8 * mpq);
        // Mahler's bounds against the height.
        let h = p.height().unwrap();
        let h = h.abs().to_string().parse::<f64>().unwrap();
        let d = p.degree() as i32;
        prop_assert!(mp >= h * (1.0 / 2f64.powi(d)) * (1.0 - 1e-9) || d == 0);
        prop_assert!(mp <= h * ((d + 1) as f64).sqrt() * (1.0 + 1e-9));
    }

    #[test]
    fn cover_verdicts_are_monotone_in_s(s1 in 0.0f64..3.0, s2 in 0.0f64..3.0) {
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let a = classify_exponent(reports(), lo, 0.2).unwrap();
        let b = classify_exponent(reports(), hi, 0.2).unwrap();
        prop_assert!(rank(a) <= rank(b), "{lo}: {a:?}, {hi}: {b:?}");
    }

    #[test]
    fn cover_sum_decreases_in_s(s1 in 0.0f64..3.0, s2 in 0.0f64..3.0) {
        prop_assume!(s1 < s2);
        let a = cover_sum(reports(), &DimensionFunction::power(s1).unwrap(), 0).unwrap();
        let b = cover_sum(reports(), &DimensionFunction::power(s2).unwrap(), 0).unwrap();
        prop_assert!(b.sum <= a.sum);
    }

    #[test]
    fn series_verdicts_are_monotone(e1 in -3.0f64..1.0, e2 in -3.0f64..1.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        // A larger exponent of q makes the terms larger.
        prop_assert!(rank(p_series_verdict(hi)) <= rank(p_series_verdict(lo)));
    }

    #[test]
    fn interval_union_and_enlargement(
        v in prop::collection::vec((-0.5f64..0.5, 0.0f64..0.1), 0..20),
        w in prop::collection::vec((-0.5f64..0.5, 0.0f64..0.1), 0..20),
        delta in 0.0f64..0.05,
    ) {
        let mk = |v: &[(f64, f64)]| IntervalSet::new(v.iter().map(|&(a, l)| (a, (a + l).min(0.5))).collect(), Ambient::Unit);
        let (a, b) = (mk(&v), mk(&w));
        let u = a.union(&b);
        prop_assert!(u.measure_f64() <= a.measure_f64() + b.measure_f64() + 1e-12);
        prop_assert!(u.measure_f64() + 1e-12 >= a.measure_f64().max(b.measure_f64()));
        let i = a.intersect(&b);
        prop_assert!((u.measure_f64() + i.measure_f64() - a.measure_f64() - b.measure_f64()).abs() < 1e-9);
        let e = a.enlarge(delta);
        prop_assert!(e.measure_f64() + 1e-12 >= a.measure_f64());
        for &(x, _) in a.intervals() {
            prop_assert!(e.contains(x));
        }
    }
}

#[test]
fn sampled_class_fraction_tracks_exhaustive() {
    let spec = FamilySpec::new(3, 0.0, 1.0, FamilyKind::SmallDiscIrreducible, 4);
    let exact = census(&spec, CensusPlan::Exhaustive { budget: 1 << 30 }).unwrap();
    let sampled = census(&spec, CensusPlan::Sampled { sample_size: 200_000, seed: 11 }).unwrap();
    assert_eq!(exact.total_count, sampled.total_count);
    let z = (sampled.class_count - exact.class_count).abs() / sampled.class_stderr;
    assert!(z < 5.0, "class count z-score {z}");
    let z = (sampled.disc_sum - exact.disc_sum).abs() / sampled.stderr;
    assert!(z < 5.0, "disc_sum z-score {z}");
}
