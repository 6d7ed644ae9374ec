//! Each command splits into `compute`, which produces raw parts, and
//! `derive`, a pure function of the config and the part texts. Archive
//! reloads call only `derive`.

use std::collections::BTreeMap;
use std::time::Instant;

use dioplab::covers::{b_set, cover_block, Ambient, BSetOptions, CoverReport, CoverRequest, CoverRule, IntervalSet};
use dioplab::families::{census, enumerate, sample, CensusPlan, CensusReport, EnumerateOptions, FamilySpec};
use dioplab::fit::fit_line;
use dioplab::functions::{ApproxFunction, DimensionFunction};
use dioplab::lemmas::{measure_threshold, verify_lemma, LemmaId, LemmaParams, LemmaReport};
use dioplab::measures::{box_dimension, cover_sum, critical_exponent_from_reports, Verdict};
use dioplab::series::{
    condensation_pair, main_series, p_series_verdict, rescale_equivalence, standard_battery, term_exponent,
    BatteryCase, PairVerdict, SeriesVerdict,
};
use dioplab::LabError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::archive::Archive;
use crate::config::RunConfig;
use crate::CliError;

pub const CENSUS_CSV: &str = "census.csv";
pub const CENSUS_JSON: &str = "census.json";
pub const COVER_CSV: &str = "cover_reports.csv";
pub const COVER_JSON: &str = "cover_reports.json";
pub const TERMS_CSV: &str = "terms.csv";
pub const BSET_JSON: &str = "bset.json";
pub const LEMMA_JSON: &str = "lemma_report.json";
pub const BATTERY_JSON: &str = "battery.json";
pub const SERIES_JSON: &str = "series.json";
pub const SERIES_CSV: &str = "series.csv";
pub const SERIES_TERMS_CSV: &str = "series_terms.csv";

pub const TERMS_HEADER: &str = "g,t,log2_term";
pub const SERIES_TERMS_HEADER: &str = "case,ln_q,ln_term";

pub fn series_csv_header() -> String {
    format!("case,{},expected", SeriesVerdict::CSV_HEADER)
}

/// Derived statistics plus plot-ready files and the exit code they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct Derived {
    pub value: Value,
    pub files: BTreeMap<String, String>,
    pub exit: i32,
}

impl Derived {
    fn ok(value: Value) -> Self {
        Derived {
            value,
            files: BTreeMap::new(),
            exit: 0,
        }
    }
}

type Parts = BTreeMap<String, String>;

pub fn execute(cfg: RunConfig) -> Result<Archive, CliError> {
    let start = Instant::now();
    let parts = match cfg.command.as_str() {
        "enumerate" => compute_census(&cfg, true)?,
        "census" => compute_census(&cfg, false)?,
        "cover" | "estimate-dimension" => compute_cover(&cfg)?,
        "b-set" => compute_b_set(&cfg)?,
        "verify-lemma" => compute_lemma(&cfg)?,
        "series" => compute_series(&cfg)?,
        other => return Err(CliError::Usage(format!("unknown command `{other}`"))),
    };
    let compute = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let mut archive = Archive::new(cfg, parts, None)?;
    let mut timing = BTreeMap::new();
    timing.insert("compute_seconds".to_string(), compute);
    timing.insert("derive_seconds".to_string(), start.elapsed().as_secs_f64());
    archive.timing = Some(timing);
    Ok(archive)
}

pub fn derive(cfg: &RunConfig, parts: &Parts) -> Result<Derived, CliError> {
    match cfg.command.as_str() {
        "enumerate" | "census" => derive_census(parts),
        "cover" => derive_cover(cfg, parts),
        "estimate-dimension" => derive_dimension(cfg, parts),
        "b-set" => derive_b_set(parts),
        "verify-lemma" => derive_lemma(parts),
        "series" => derive_series(parts),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn part<'a>(parts: &'a Parts, name: &str) -> Result<&'a str, CliError> {
    parts
        .get(name)
        .map(String::as_str)
        .ok_or_else(|| CliError::Usage(format!("archive lacks part `{name}`")))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("parts serialize");
    s.push('\n');
    s
}

fn family(cfg: &RunConfig, t: u32) -> Result<FamilySpec, CliError> {
    let spec = FamilySpec {
        n: cfg.get("n")?,
        lambda: cfg.get("lambda")?,
        c: cfg.get("c")?,
        kind: cfg.get("kind")?,
        t,
        disc_degree: cfg.get("disc_degree")?,
    };
    spec.validate()?;
    Ok(spec)
}

fn census_plan(cfg: &RunConfig, t: u32) -> Result<CensusPlan, CliError> {
    let budget: u128 = cfg.get("budget")?;
    let sample_size: u64 = cfg.get("samples")?;
    // One stream per block, reproducible from the run seed.
    let seed = cfg.get::<u64>("seed")?.wrapping_add(t as u64);
    Ok(match cfg.raw("mode").unwrap_or("auto") {
        "exhaustive" => CensusPlan::Exhaustive { budget },
        "sampled" => CensusPlan::Sampled { sample_size, seed },
        "auto" => CensusPlan::Auto {
            budget,
            sample_size,
            seed,
        },
        m => return Err(CliError::Usage(format!("bad value `{m}` for `mode`"))),
    })
}

fn compute_census(cfg: &RunConfig, list: bool) -> Result<Parts, CliError> {
    let mut reports = Vec::new();
    let mut parts = Parts::new();
    for t in cfg.t_range()? {
        let spec = family(cfg, t)?;
        let plan = census_plan(cfg, t)?;
        if list {
            let limit: u128 = cfg.get("list_limit")?;
            let exhaustive = match plan {
                CensusPlan::Exhaustive { .. } => true,
                CensusPlan::Sampled { .. } => false,
                CensusPlan::Auto { budget, .. } => spec.box_size() <= budget,
            };
            let mut text = String::new();
            if exhaustive {
                if spec.block_size() > limit {
                    return Err(LabError::Budget {
                        needed: spec.block_size(),
                        budget: limit,
                        advice: "raise list_limit or use census".into(),
                    }
                    .into());
                }
                let opts = EnumerateOptions {
                    budget: cfg.get("budget")?,
                    symmetric: false,
                };
                for p in enumerate(&spec, opts)? {
                    text.push_str(&p.to_string());
                    text.push('\n');
                }
            } else {
                let size = cfg.get::<usize>("samples")?.min(limit as usize);
                let seed = cfg.get::<u64>("seed")?.wrapping_add(t as u64);
                for p in sample(&spec, size, seed, 1e-6)? {
                    text.push_str(&p.to_string());
                    text.push('\n');
                }
            }
            parts.insert(format!("members_t{t}.txt"), text);
        }
        reports.push(census(&spec, plan)?);
    }
    let mut csv = format!("{}\n", CensusReport::CSV_HEADER);
    for r in &reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    parts.insert(CENSUS_CSV.into(), csv);
    parts.insert(CENSUS_JSON.into(), to_json(&reports));
    Ok(parts)
}

fn slope_of(ts: &[f64], ys: &[f64]) -> Option<f64> {
    fit_line(ts, ys).ok().map(|f| f.slope)
}

fn derive_census(parts: &Parts) -> Result<Derived, CliError> {
    let reports: Vec<CensusReport> = serde_json::from_str(part(parts, CENSUS_JSON)?)?;
    let ts: Vec<f64> = reports.iter().map(|r| r.t as f64).collect();
    let logs: Vec<f64> = reports.iter().map(|r| r.disc_sum.log2()).collect();
    let blocks: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "t": r.t,
                "total_count": r.total_count,
                "class_fraction": r.class_count / r.total_count as f64,
                "disc_sum": r.disc_sum,
                "mode": r.mode.to_string(),
            })
        })
        .collect();
    Ok(Derived::ok(json!({
        "blocks": blocks,
        "disc_sum_slope": slope_of(&ts, &logs),
        "total_count": reports.iter().map(|r| r.total_count).sum::<u64>(),
    })))
}

fn cover_request(cfg: &RunConfig, t: u32) -> Result<CoverRequest, CliError> {
    let spec = family(cfg, t)?;
    let psi: ApproxFunction = cfg.get("psi")?;
    let rule = match cfg.raw("rule").unwrap_or("auto") {
        "auto" => CoverRule::for_kind(spec.kind),
        r => r.parse::<CoverRule>()?,
    };
    let mut req = CoverRequest::new(spec, psi, rule);
    req.budget = cfg.get("budget")?;
    req.slab_target = cfg.get("slab_target")?;
    req.keep_sets = cfg.get("keep_sets")?;
    Ok(req)
}

fn report_g(cfg: &RunConfig) -> Result<DimensionFunction, CliError> {
    match cfg.raw("g") {
        Some(_) => cfg.get("g"),
        None => Ok(DimensionFunction::Power { s: 1.0 }),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SetsPart {
    pub t: u32,
    pub sigma: Vec<[String; 2]>,
    pub enlarged: Vec<[String; 2]>,
}

fn compute_cover(cfg: &RunConfig) -> Result<Parts, CliError> {
    let g = report_g(cfg)?;
    let mut reports = Vec::new();
    let mut parts = Parts::new();
    for t in cfg.t_range()? {
        let req = cover_request(cfg, t)?;
        let r = cover_block(&req, &g)?;
        if let (Some(s), Some(e)) = (&r.sigma, &r.enlarged) {
            let sets = SetsPart {
                t,
                sigma: s.to_rational_strings(),
                enlarged: e.to_rational_strings(),
            };
            parts.insert(format!("sets_t{t}.json"), to_json(&sets));
        }
        reports.push(r);
    }
    let mut csv = format!("{}\n", CoverReport::CSV_HEADER);
    for r in &reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    parts.insert(COVER_CSV.into(), csv);
    parts.insert(COVER_JSON.into(), to_json(&reports));
    Ok(parts)
}

fn terms_csv(reports: &[CoverReport], gs: &[DimensionFunction]) -> String {
    let mut s = format!("{TERMS_HEADER}\n");
    for g in gs {
        for r in reports {
            s.push_str(&format!("{g},{},{:?}\n", r.t, r.log2_term(g)));
        }
    }
    s
}

fn derive_cover(cfg: &RunConfig, parts: &Parts) -> Result<Derived, CliError> {
    let reports: Vec<CoverReport> = serde_json::from_str(part(parts, COVER_JSON)?)?;
    let g = report_g(cfg)?;
    let ts: Vec<f64> = reports.iter().map(|r| r.t as f64).collect();
    let counts: Vec<f64> = reports.iter().map(|r| (r.count as f64).log2()).collect();
    let expected = reports.first().map(|r| r.rule.count_exponent(r.n, r.lambda));
    let sum = match reports.first() {
        Some(r) => Some(cover_sum(&reports, &g, r.t)?),
        None => None,
    };
    let mut d = Derived::ok(json!({
        "g": g.to_string(),
        "count_slope": slope_of(&ts, &counts),
        "expected_count_exponent": expected,
        "cover_sum": sum,
        "box_dimension": box_dimension(&reports).ok().map(|e| e.s_low),
    }));
    d.files.insert(TERMS_CSV.into(), terms_csv(&reports, &[g]));
    Ok(d)
}

fn derive_dimension(cfg: &RunConfig, parts: &Parts) -> Result<Derived, CliError> {
    let reports: Vec<CoverReport> = serde_json::from_str(part(parts, COVER_JSON)?)?;
    let margin: f64 = cfg.get("margin")?;
    let tolerance: f64 = cfg.get("tolerance")?;
    let grid: Vec<DimensionFunction> = (0..=30).map(|i| DimensionFunction::Power { s: i as f64 * 0.05 }).collect();
    let files = BTreeMap::from([(TERMS_CSV.to_string(), terms_csv(&reports, &grid))]);
    let boxes = box_dimension(&reports).ok();
    match critical_exponent_from_reports(&reports, margin, tolerance) {
        Ok(est) => {
            let consistent = boxes
                .as_ref()
                .map(|b| b.s_low >= est.s_low - 0.2 && b.s_low <= est.s_high + 0.2);
            Ok(Derived {
                value: json!({
                    "estimate": est,
                    "box_count": boxes,
                    "box_within_band": consistent,
                }),
                files,
                exit: 0,
            })
        }
        Err(LabError::Ambiguous(msg)) => Ok(Derived {
            value: json!({ "ambiguous": msg, "box_count": boxes }),
            files,
            exit: 3,
        }),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BSetPart {
    pub n: usize,
    pub q: i64,
    pub eps: f64,
    pub fallbacks: u64,
    pub set: Vec<[String; 2]>,
}

fn compute_b_set(cfg: &RunConfig) -> Result<Parts, CliError> {
    let n: usize = cfg.get("n")?;
    let q: i64 = cfg.get("Q")?;
    let eps = match cfg.get_opt::<f64>("eps")? {
        Some(e) => e,
        None => 0.5 * measure_threshold(n, q),
    };
    let budget: u128 = cfg.get("budget")?;
    let b = b_set(n, q, eps, &BSetOptions { budget, class: None })?;
    let p = BSetPart {
        n,
        q,
        eps,
        fallbacks: b.fallbacks,
        set: b.set.to_rational_strings(),
    };
    Ok(Parts::from([(BSET_JSON.to_string(), to_json(&p))]))
}

fn derive_b_set(parts: &Parts) -> Result<Derived, CliError> {
    let p: BSetPart = serde_json::from_str(part(parts, BSET_JSON)?)?;
    let set = IntervalSet::from_rational_strings(&p.set, Ambient::Unit)?;
    let measure = set.measure_f64();
    let bound = p.n as f64 * ((p.n + 2) as f64).exp2() * p.eps * (p.q as f64).powi(p.n as i32);
    let applies = p.q > 4 * (p.n * p.n) as i64 && p.eps < measure_threshold(p.n, p.q);
    let within = measure <= bound;
    let mut d = Derived::ok(json!({
        "measure": measure,
        "bound": bound,
        "ratio": measure / bound,
        "components": set.component_count(),
        "lemma_applies": applies,
        "within_bound": within,
    }));
    if applies && !within {
        d.exit = 1;
    }
    Ok(d)
}

fn lemma_params(cfg: &RunConfig) -> Result<LemmaParams, CliError> {
    Ok(LemmaParams {
        seed: cfg.get("seed")?,
        corpus: cfg.get_opt("corpus")?,
        n: cfg.get_opt("n")?,
        h_max: cfg.get_opt("h_max")?,
        q: cfg.get_opt("Q")?,
        eps: cfg.get_opt("eps")?,
        w: cfg.get_opt("w")?,
        lambda: cfg.get_opt("lambda")?,
        t_max: cfg.get_opt("t_max")?,
        budget: cfg.get_opt("budget")?,
    })
}

fn compute_lemma(cfg: &RunConfig) -> Result<Parts, CliError> {
    let id: LemmaId = cfg
        .raw("lemma")
        .ok_or_else(|| CliError::Usage("verify-lemma needs a lemma id".into()))?
        .parse()
        .map_err(|e: LabError| CliError::Usage(e.to_string()))?;
    let report = verify_lemma(id, &lemma_params(cfg)?)?;
    Ok(Parts::from([(LEMMA_JSON.to_string(), to_json(&report))]))
}

fn derive_lemma(parts: &Parts) -> Result<Derived, CliError> {
    let r: LemmaReport = serde_json::from_str(part(parts, LEMMA_JSON)?)?;
    let mut d = Derived::ok(json!({
        "lemma": r.id,
        "passed": r.passed,
        "checked": r.checked,
        "violations": r.violations,
        "constants": r.constants,
    }));
    if !r.passed {
        d.exit = 1;
    }
    Ok(d)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub case: usize,
    pub main: SeriesVerdict,
    pub condensation: PairVerdict,
    pub rescale: PairVerdict,
}

fn battery(cfg: &RunConfig) -> Result<Vec<BatteryCase>, CliError> {
    match cfg.raw("battery").unwrap_or("standard") {
        "standard" => Ok(standard_battery()),
        "single" => {
            let psi: ApproxFunction = cfg.get("psi")?;
            let g: DimensionFunction = cfg.get("g")?;
            let exponent: f64 = cfg.get("exponent")?;
            let expected = term_exponent(&psi, &g, exponent).map(p_series_verdict);
            Ok(vec![BatteryCase {
                psi,
                g,
                exponent,
                expected,
            }])
        }
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read battery {path}: {e}")))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn compute_series(cfg: &RunConfig) -> Result<Parts, CliError> {
    let cases = battery(cfg)?;
    let q_max: u64 = cfg.get("q_max")?;
    let t_max: u32 = cfg.get("t_max")?;
    let (c1, c2): (f64, f64) = (cfg.get("c1")?, cfg.get("c2")?);
    let mut records = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        records.push(SeriesRecord {
            case: i,
            main: main_series(&case.psi, &case.g, case.exponent, q_max)?,
            condensation: condensation_pair(&case.psi, &case.g, case.exponent, t_max)?,
            rescale: rescale_equivalence(&case.psi, &case.g, case.exponent, c1, c2, q_max)?,
        });
    }
    let mut csv = format!("{}\n", series_csv_header());
    let mut terms = format!("{SERIES_TERMS_HEADER}\n");
    for (r, case) in records.iter().zip(&cases) {
        let expected = case.expected.map_or("", |v| v.name());
        let rows = [
            ("main", &r.main),
            ("condensed_q", &r.condensation.first),
            ("condensed_dyadic", &r.condensation.second),
            ("rescaled_c1", &r.rescale.first),
            ("rescaled_c2", &r.rescale.second),
        ];
        for (label, v) in rows {
            csv.push_str(&format!("{},{},{expected}\n", r.case, v.csv_row(label)));
        }
        for c in &r.main.checkpoints {
            terms.push_str(&format!("{},{:?},{:?}\n", r.case, c.q.ln(), c.ln_term));
        }
    }
    Ok(Parts::from([
        (BATTERY_JSON.to_string(), to_json(&cases)),
        (SERIES_JSON.to_string(), to_json(&records)),
        (SERIES_CSV.to_string(), csv),
        (SERIES_TERMS_CSV.to_string(), terms),
    ]))
}

fn derive_series(parts: &Parts) -> Result<Derived, CliError> {
    let cases: Vec<BatteryCase> = serde_json::from_str(part(parts, BATTERY_JSON)?)?;
    let records: Vec<SeriesRecord> = serde_json::from_str(part(parts, SERIES_JSON)?)?;
    if cases.len() != records.len() {
        return Err(CliError::Usage("battery and series parts disagree in length".into()));
    }
    let mut matches = 0;
    let mut mismatches = Vec::new();
    let mut ambiguous = 0;
    let known = cases.iter().filter(|c| c.expected.is_some()).count();
    for (c, r) in cases.iter().zip(&records) {
        match (c.expected, r.main.verdict) {
            (_, Verdict::Ambiguous) => ambiguous += 1,
            (Some(e), v) if e == v => matches += 1,
            (Some(_), _) => mismatches.push(r.case),
            (None, _) => {}
        }
    }
    let cond = records.iter().filter(|r| r.condensation.agree).count();
    let resc = records.iter().filter(|r| r.rescale.agree).count();
    let mut d = Derived::ok(json!({
        "cases": records.len(),
        "expected_known": known,
        "numeric_matches": matches,
        "numeric_mismatches": mismatches,
        "ambiguous": ambiguous,
        "condensation_agree": cond,
        "rescale_agree": resc,
    }));
    if !mismatches.is_empty() || cond != records.len() || resc != records.len() {
        d.exit = 1;
    }
    Ok(d)
}
