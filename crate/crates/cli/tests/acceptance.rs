//! Acceptance battery: one PASS/FAIL line per criterion, exit status 1 if
//! any fails. Heavy; run with `cargo test --test acceptance`.

use std::path::Path;
use std::time::{Duration, Instant};

use dioplab::covers::{b_set, cover_block, sigma_eps, BSetOptions, CoverReport, CoverRequest, CoverRule};
use dioplab::families::{census, CensusPlan, FamilyKind, FamilySpec};
use dioplab::fit::fit_line;
use dioplab::functions::{ApproxFunction, DimensionFunction};
use dioplab::lemmas::{mahler_lemma, measure_threshold, ratio_sweep, translation_corpus};
use dioplab::measures::{box_dimension, critical_exponent_from_reports, DEFAULT_MARGIN};
use dioplab::series::{
    condensation_pair, main_series, rescale_equivalence, standard_battery, BATTERY_Q_MAX, BATTERY_T_MAX,
};
use dioplab::IntPoly;
use dioplab_cli::archive::Archive;
use dioplab_cli::{commands, schema, RunConfig};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// `sum a_i (x + m)^i` by repeated multiplication.
fn compose(p: &IntPoly, m: i64) -> IntPoly {
    let shift = IntPoly::from_i64(&[m, 1]);
    let mut power = IntPoly::from_i64(&[1]);
    let mut acc = IntPoly::zero();
    for a in p.coeffs() {
        acc = &acc + &power.scale(a);
        power = &power * &shift;
    }
    acc
}

fn translation() -> Outcome {
    let corpus = translation_corpus(2024, 1000);
    let bad = corpus
        .iter()
        .filter(|(p, m)| p.translate(&BigInt::from(*m)) != compose(p, *m))
        .count();
    outcome(bad == 0, format!("{} polynomials, {bad} violations", corpus.len()))
}

fn translated_height() -> Outcome {
    let corpus = translation_corpus(2024, 1000);
    let mut bad = 0;
    let mut worst = 0.0f64;
    for (p, m) in &corpus {
        let h = p.translate(&BigInt::from(*m)).height().unwrap();
        let bound = BigInt::from(1 + m.abs()).pow(p.degree() as u32) * p.height().unwrap();
        if h > bound {
            bad += 1;
        }
        worst = worst.max(h.to_string().parse::<f64>().unwrap() / bound.to_string().parse::<f64>().unwrap());
    }
    outcome(bad == 0, format!("{bad} violations, max H(P(x+m)) / bound = {worst:.4}"))
}

fn mahler() -> Outcome {
    let r = mahler_lemma(4, 20, 500, 7).unwrap();
    let c = |k: &str| r.constants.get(k).copied().unwrap_or(f64::NAN);
    outcome(
        r.passed,
        format!(
            "{} checks, {} violations; min M/lower {:.4}, max M/upper {:.4}, max multiplicativity error {:.2e}",
            r.checked,
            r.violations,
            c("min_m_over_lower_bound"),
            c("max_m_over_upper_bound"),
            c("max_multiplicativity_error"),
        ),
    )
}

fn b_set_measure() -> Outcome {
    let n = 2;
    let mut pass = true;
    let mut detail = Vec::new();
    for q in [17, 25, 33] {
        let start = Instant::now();
        let eps = 0.5 * measure_threshold(n, q);
        let b = b_set(n, q, eps, &BSetOptions::default()).unwrap();
        let bound = n as f64 * ((n + 2) as f64).exp2() * eps * (q as f64).powi(n as i32);
        let secs = start.elapsed();
        pass &= b.measure <= bound && secs < Duration::from_secs(120);
        detail.push(format!("Q={q}: {:.4e} <= {bound:.4e} ({:.1}s)", b.measure, secs.as_secs_f64()));
    }
    outcome(pass, detail.join("; "))
}

fn ratios() -> Outcome {
    let r = ratio_sweep(3, 25, 50).unwrap();
    let (dd, dx) = r.drift();
    let vals = [r.derivative_min, r.derivative_min_mid, r.distance_max, r.distance_max_mid];
    let finite = vals.iter().all(|v| v.is_finite() && *v > 0.0);
    outcome(
        finite && dd <= 0.1 && dx <= 0.1,
        format!(
            "{} cubics; derivative min {:.5} -> {:.5} (drift {dd:.3}), distance max {:.5} -> {:.5} (drift {dx:.3})",
            r.checked, r.derivative_min_mid, r.derivative_min, r.distance_max_mid, r.distance_max
        ),
    )
}

fn disc_sum() -> Outcome {
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for t in 3..=6 {
        let spec = FamilySpec::new(3, 0.0, 1.0, FamilyKind::SmallDiscIrreducible, t);
        let r = census(&spec, CensusPlan::Exhaustive { budget: 1 << 33 }).unwrap();
        ts.push(t as f64);
        ys.push(r.disc_sum.log2());
    }
    let slope = fit_line(&ts, &ys).unwrap().slope;
    let logs: Vec<String> = ys.iter().map(|y| format!("{y:.3}")).collect();
    outcome(
        (1.6..=2.4).contains(&slope),
        format!("exhaustive, log2 disc_sum = [{}], slope {slope:.4}", logs.join(", ")),
    )
}

fn count_slope(reports: &[CoverReport]) -> f64 {
    let ts: Vec<f64> = reports.iter().map(|r| r.t as f64).collect();
    let ys: Vec<f64> = reports.iter().map(|r| (r.count as f64).log2()).collect();
    fit_line(&ts, &ys).unwrap().slope
}

fn reports(template: &CoverRequest, ts: impl Iterator<Item = u32>) -> Vec<CoverReport> {
    let g = DimensionFunction::power(1.0).unwrap();
    ts.map(|t| cover_block(&template.with_t(t), &g).unwrap()).collect()
}

fn height_template() -> CoverRequest {
    CoverRequest::new(
        FamilySpec::new(3, 0.0, 1.0, FamilyKind::SmallDiscIrreducible, 3),
        ApproxFunction::power(5.0).unwrap(),
        CoverRule::Height,
    )
}

fn cover_counts(height: &[CoverReport]) -> Outcome {
    let template = CoverRequest::new(
        FamilySpec::new(2, 0.25, 1.0, FamilyKind::LargeDisc, 5),
        ApproxFunction::power(3.0).unwrap(),
        CoverRule::Derivative,
    );
    let derivative = reports(&template, 5..=7);
    let (a, b) = (count_slope(&derivative), count_slope(height));
    outcome(
        a <= 3.4 && b <= 4.4,
        format!("derivative rule t=5..7 slope {a:.4} (<= 3.4); height rule t=3..6 slope {b:.4} (<= 4.4)"),
    )
}

fn bracket(height: &[CoverReport]) -> Outcome {
    // Blocks 4..6: t=3 is pre-asymptotic (count slope 4.49 to t=4, then 4.21, 4.10).
    let tail: Vec<CoverReport> = height.iter().filter(|r| r.t >= 4).cloned().collect();
    let est = critical_exponent_from_reports(&tail, DEFAULT_MARGIN, 0.3).unwrap();
    let boxes = box_dimension(&tail).unwrap();
    let template = CoverRequest::new(
        FamilySpec::new(1, 0.0, 1.0, FamilyKind::All, 8),
        ApproxFunction::power(2.0).unwrap(),
        CoverRule::Derivative,
    );
    let line = reports(&template, 8..=12);
    let est1 = critical_exponent_from_reports(&line, DEFAULT_MARGIN, 0.3).unwrap();
    let target = 2.0 / 3.0;
    let band = boxes.s_low >= est.s_low - 0.2 && boxes.s_low <= est.s_high + 0.2;
    outcome(
        est.width() <= 0.3 && est.contains(target) && est1.contains(target),
        format!(
            "n=3 w=5 t=4..6: [{:.4}, {:.4}] width {:.4}, box estimate {:.4} (in band: {band}); n=1 w=2 t=8..12: [{:.4}, {:.4}]",
            est.s_low,
            est.s_high,
            est.width(),
            boxes.s_low,
            est1.s_low,
            est1.s_high
        ),
    )
}

fn series() -> Outcome {
    let cases = standard_battery();
    let (mut matched, mut known, mut cond, mut resc) = (0, 0, 0, 0);
    for c in &cases {
        let v = main_series(&c.psi, &c.g, c.exponent, BATTERY_Q_MAX).unwrap();
        if let Some(e) = c.expected {
            known += 1;
            matched += usize::from(e == v.verdict);
        }
        cond += usize::from(condensation_pair(&c.psi, &c.g, c.exponent, BATTERY_T_MAX).unwrap().agree);
        resc += usize::from(rescale_equivalence(&c.psi, &c.g, c.exponent, 0.5, 2.0, BATTERY_Q_MAX).unwrap().agree);
    }
    let n = cases.len();
    outcome(
        n >= 50 && matched == known && cond == n && resc == n,
        format!("{n} cases; numeric = analytic on {matched}/{known}; condensation {cond}/{n}; rescale {resc}/{n}"),
    )
}

fn grid_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let epsilons = [1.0, 0.1, 1e-2, 1e-3];
    let (mut points, mut inside, mut near, mut far) = (0u64, 0u64, 0u64, 0u64);
    for k in 0..100 {
        let mut c: Vec<i64> = (0..4).map(|_| rng.gen_range(-20..=20)).collect();
        while c[3] == 0 {
            c[3] = rng.gen_range(-20..=20);
        }
        let p = IntPoly::from_i64(&c);
        let dp = p.derivative();
        let eps = epsilons[k % epsilons.len()];
        let set = sigma_eps(&p, eps).unwrap();
        let ends: Vec<f64> = set.intervals().iter().flat_map(|&(a, b)| [a, b]).collect();
        for i in 0..100_000 {
            let x = -0.5 + i as f64 * 1e-5;
            let want = p.eval_f64(x).abs() <= eps && dp.eval_f64(x).abs() >= 2.0;
            points += 1;
            inside += u64::from(want);
            if want != set.contains(x) {
                if ends.iter().any(|e| (e - x).abs() <= 1e-4) {
                    near += 1;
                } else {
                    far += 1;
                }
            }
        }
    }
    outcome(
        far == 0,
        format!("{points} grid points, {inside} inside; disagreements: {near} within 1e-4 of an endpoint, {far} elsewhere"),
    )
}

fn cli_runs() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, &[(&str, &str)]); 7] = [
        ("enumerate", &[("n", "2"), ("t_range", "0..2")]),
        ("census", &[("t_range", "2..4"), ("mode", "sampled"), ("seed", "9")]),
        ("cover", &[("t_range", "2..4"), ("keep_sets", "true")]),
        ("estimate-dimension", &[("n", "1"), ("kind", "all"), ("psi", "w=2"), ("t_range", "6..8")]),
        ("b-set", &[("Q", "17")]),
        ("verify-lemma", &[("lemma", "L2.6"), ("seed", "4")]),
        ("series", &[]),
    ];
    let read = |d: &Path| {
        let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != "timing.json")
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    let (mut same, mut recomputed, mut files) = (0, 0, 0);
    let mut failures = Vec::new();
    for (i, (cmd, kv)) in runs.iter().enumerate() {
        let kv: Vec<(String, String)> = kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let dirs = [dir.path().join(format!("{i}a")), dir.path().join(format!("{i}b"))];
        for d in &dirs {
            let cfg = RunConfig::resolve(cmd, None, &kv).unwrap();
            commands::execute(cfg).unwrap().write(d).unwrap();
        }
        same += usize::from(read(&dirs[0]) == read(&dirs[1]));
        let reloaded = Archive::reload(&dirs[0]).unwrap();
        recomputed += usize::from(reloaded.verify_recompute(&dirs[0]).is_ok());
        files += read(&dirs[0]).len() + 1;
        failures.extend(schema::check_paths(&dirs).unwrap());
    }
    let n = runs.len();
    outcome(
        same == n && recomputed == n && failures.is_empty(),
        format!(
            "{n} commands: identical reruns {same}/{n}, bit-identical recompute {recomputed}/{n}, schema failures {} over {files} files",
            failures.len()
        ),
    )
}

fn main() {
    let mut all = true;
    let mut report = |id: u32, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed();
        let pass = o.pass && secs <= limit;
        all &= pass;
        println!(
            "criterion {id:>2}: {} ({:.1}s, limit {}s) {}",
            if pass { "PASS" } else { "FAIL" },
            secs.as_secs_f64(),
            limit.as_secs(),
            o.detail
        );
    };
    let min = |m: u64| Duration::from_secs(60 * m);
    report(1, Duration::from_secs(5), &mut translation);
    report(2, Duration::from_secs(5), &mut translated_height);
    report(3, min(2), &mut mahler);
    report(4, min(6), &mut b_set_measure);
    report(5, min(5), &mut ratios);
    report(6, min(15), &mut disc_sum);
    let start = Instant::now();
    let height = reports(&height_template(), 3..=6);
    let shared = start.elapsed();
    println!("height pipeline t=3..6 computed once in {:.1}s", shared.as_secs_f64());
    report(7, min(20) - shared, &mut || cover_counts(&height));
    report(8, min(20) - shared, &mut || bracket(&height));
    report(9, min(1), &mut series);
    report(10, min(2), &mut grid_oracle);
    report(11, min(10), &mut cli_runs);
    if !all {
        std::process::exit(1);
    }
}
