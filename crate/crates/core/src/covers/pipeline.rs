//! Block covers: the union `sigma(t)` of per-polynomial sublevel sets over
//! a dyadic family block, its enlargement, and the count of length-`ell`
//! intervals covering the enlargement.
//!
//! Large blocks do not fit in memory as a list of intervals, so the unit
//! interval is cut into slabs. Each slab is swept over every coefficient
//! prefix `(a_1..a_n)`, its intervals are sorted and merged, and the
//! merged components are streamed through the enlargement and counting
//! stages in increasing order. A component that reaches the right edge of
//! a slab stays open until the next slab is merged.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covers::interval::{add_up, ceil_span, sub_down, Ambient, IntervalSet, NeumaierSum, UNIT_HI, UNIT_LO};
use crate::covers::sublevel::{sublevel_exact, PrefixKernel, BRACKET_WIDTH, KERNEL_COEFF_LIMIT};
use crate::error::{LabError, Result};
use crate::families::{FamilyKind, FamilySpec, FastClassifier, DEFAULT_BUDGET};
use crate::functions::{ApproxFunction, DimensionFunction};
use crate::polycore::IntPoly;

/// Class predicate used inside a sweep.
#[derive(Debug, Clone)]
pub(crate) enum Classifier {
    All,
    Fast(FastClassifier),
    Exact(FamilySpec),
}

impl Classifier {
    pub(crate) fn for_spec(spec: &FamilySpec) -> Self {
        if spec.kind == FamilyKind::All {
            return Classifier::All;
        }
        match FastClassifier::new(spec) {
            Some(f) => Classifier::Fast(f),
            None => Classifier::Exact(spec.clone()),
        }
    }

    /// Cheap necessary condition checked before the sublevel set is built.
    #[inline]
    fn prefilter(&self, c: &[i64], h: i64) -> bool {
        match self {
            Classifier::Fast(f) => f.disc_member(c, h),
            _ => true,
        }
    }

    fn member(&self, c: &[i64], h: i64) -> Result<bool> {
        match self {
            Classifier::All => Ok(true),
            Classifier::Fast(f) => Ok(f.classify(c, h).member),
            Classifier::Exact(spec) => Ok(spec.classify(&IntPoly::from_i64(c))?.member),
        }
    }
}

/// Sublevel threshold as a function of the height.
#[derive(Debug, Clone)]
pub(crate) enum EtaRule {
    Constant(f64),
    /// `psi(H)` tabulated for `H = 0..=cmax`.
    ByHeight(Vec<f64>),
}

impl EtaRule {
    #[inline]
    fn at(&self, h: i64) -> f64 {
        match self {
            EtaRule::Constant(e) => *e,
            EtaRule::ByHeight(v) => v[h as usize],
        }
    }

    fn max(&self) -> f64 {
        match self {
            EtaRule::Constant(e) => *e,
            EtaRule::ByHeight(v) => v.iter().skip(1).cloned().fold(0.0, f64::max),
        }
    }
}

/// Everything a sweep over `|a_i| <= cmax`, `H >= h_min` needs.
#[derive(Debug, Clone)]
pub(crate) struct Sweep {
    pub n: usize,
    pub cmax: i64,
    pub h_min: i64,
    pub kappa: f64,
    pub eta: EtaRule,
    pub class: Classifier,
}

pub(crate) struct SlabOutput {
    /// One sorted-within-prefix list per partition.
    pub intervals: Vec<Vec<(f64, f64)>>,
    pub fallbacks: u64,
}

impl Sweep {
    fn uses_kernel(&self) -> bool {
        self.n <= 3 && self.cmax <= KERNEL_COEFF_LIMIT
    }

    /// Work units: prefixes when the kernel prunes `a_0`, full tuples otherwise.
    pub(crate) fn work(&self) -> u128 {
        let side = (2 * self.cmax + 1) as u128;
        let e = if self.uses_kernel() { self.n } else { self.n + 1 };
        side.saturating_pow(e as u32)
    }

    pub(crate) fn check_budget(&self, budget: u128, advice: &str) -> Result<()> {
        let needed = self.work();
        if needed > budget {
            return Err(LabError::Budget {
                needed,
                budget,
                advice: advice.to_string(),
            });
        }
        Ok(())
    }

    /// Partitions `(k, a_k)` of the canonical prefixes: top nonzero index
    /// `k >= 1` with `a_k > 0`. `(0, 0)` stands for the zero prefix.
    fn partitions(&self) -> Vec<(usize, i64)> {
        let mut parts = vec![(0, 0)];
        for k in (1..=self.n).rev() {
            for a in 1..=self.cmax {
                parts.push((k, a));
            }
        }
        parts
    }

    pub(crate) fn run_slab(&self, lo: f64, hi: f64) -> Result<SlabOutput> {
        let parts = self.partitions();
        let results: Vec<Result<(Vec<(f64, f64)>, u64)>> =
            parts.par_iter().map(|&part| self.run_partition(part, lo, hi)).collect();
        let mut intervals = Vec::with_capacity(results.len());
        let mut fallbacks = 0;
        for r in results {
            let (v, f) = r?;
            intervals.push(v);
            fallbacks += f;
        }
        Ok(SlabOutput { intervals, fallbacks })
    }

    fn run_partition(&self, (k, ak): (usize, i64), lo: f64, hi: f64) -> Result<(Vec<(f64, f64)>, u64)> {
        let mut out = Vec::new();
        let mut fallbacks = 0u64;
        let mut c = vec![0i64; self.n + 1];
        if k == 0 {
            // Constants: `a_0` and `-a_0` give the same set.
            for a0 in 1..=self.cmax {
                c[0] = a0;
                self.constant(&c, a0, lo, hi, &mut out)?;
            }
            return Ok((out, fallbacks));
        }
        c[k] = ak;
        for v in c.iter_mut().take(k).skip(1) {
            *v = -self.cmax;
        }
        let eta_max = self.eta.max();
        let mut tmp = Vec::new();
        loop {
            let hp = c[1..].iter().map(|v| v.abs()).max().unwrap();
            let kernel = if self.uses_kernel() { PrefixKernel::new(&c, lo, hi, self.kappa) } else { None };
            let (r0, r1) = match &kernel {
                Some(kn) => kn.a0_range(eta_max),
                None => (-self.cmax, self.cmax),
            };
            for a0 in r0.max(-self.cmax)..=r1.min(self.cmax) {
                let h = hp.max(a0.abs());
                if h < self.h_min {
                    continue;
                }
                c[0] = a0;
                if !self.class.prefilter(&c, h) {
                    continue;
                }
                let eta = self.eta.at(h);
                tmp.clear();
                let ok = match &kernel {
                    Some(kn) => kn.level_set(a0, eta, &mut tmp),
                    None => false,
                };
                if !ok {
                    if kernel.is_some() {
                        fallbacks += 1;
                    }
                    tmp = sublevel_exact(&IntPoly::from_i64(&c), eta, self.kappa, lo, hi, BRACKET_WIDTH);
                }
                if !tmp.is_empty() && self.class.member(&c, h)? {
                    out.extend_from_slice(&tmp);
                }
            }
            // Odometer over a_1..a_{k-1}.
            let mut i = 1;
            loop {
                if i >= k {
                    return Ok((out, fallbacks));
                }
                if c[i] < self.cmax {
                    c[i] += 1;
                    break;
                }
                c[i] = -self.cmax;
                i += 1;
            }
        }
    }

    fn constant(&self, c: &[i64], h: i64, lo: f64, hi: f64, out: &mut Vec<(f64, f64)>) -> Result<()> {
        if h < self.h_min {
            return Ok(());
        }
        let v = sublevel_exact(&IntPoly::from_i64(c), self.eta.at(h), self.kappa, lo, hi, BRACKET_WIDTH);
        if !v.is_empty() && self.class.member(c, h)? {
            out.extend(v);
        }
        Ok(())
    }

    /// Expected number of raw intervals over `[lo, hi]`, from a fixed
    /// pseudo-random sample of prefixes.
    fn pilot_estimate(&self, lo: f64, hi: f64, samples: usize) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut produced = 0usize;
        let mut c = vec![0i64; self.n + 1];
        let mut tmp = Vec::new();
        for _ in 0..samples {
            for v in c.iter_mut().skip(1) {
                *v = rng.gen_range(-self.cmax..=self.cmax);
            }
            if c[1..].iter().all(|&v| v == 0) {
                continue;
            }
            let hp = c[1..].iter().map(|v| v.abs()).max().unwrap();
            let kernel = PrefixKernel::new(&c, lo, hi, self.kappa);
            let (r0, r1) = match &kernel {
                Some(k) => k.a0_range(self.eta.max()),
                None => (-self.cmax, self.cmax),
            };
            for a0 in r0.max(-self.cmax)..=r1.min(self.cmax) {
                let h = hp.max(a0.abs());
                if h < self.h_min {
                    continue;
                }
                c[0] = a0;
                tmp.clear();
                let ok = kernel.as_ref().is_some_and(|k| k.level_set(a0, self.eta.at(h), &mut tmp));
                if !ok {
                    tmp = sublevel_exact(&IntPoly::from_i64(&c), self.eta.at(h), self.kappa, lo, hi, BRACKET_WIDTH);
                }
                produced += tmp.len();
            }
        }
        let prefixes = (2 * self.cmax + 1) as f64;
        // Canonical prefixes are half of the nonzero ones.
        Ok(produced as f64 / samples as f64 * prefixes.powi(self.n as i32) / 2.0)
    }
}

/// How sets, enlargements and interval lengths are chosen for a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverRule {
    /// `sigma_eps(P)` with `eps = psi(2^t)` and `|P'| >= 2`; enlarged by
    /// `2^-t eps` inside `I`; `ell = 2^(1-t) eps`.
    Derivative,
    /// `{|P| <= psi(H(P))}`; enlarged by `psi(2^t)/2^t` in the line;
    /// `ell = psi(2^t)/2^t`.
    Height,
}

impl CoverRule {
    pub fn name(self) -> &'static str {
        match self {
            CoverRule::Derivative => "derivative",
            CoverRule::Height => "height",
        }
    }

    /// Natural rule for a family kind.
    pub fn for_kind(kind: FamilyKind) -> Self {
        match kind {
            FamilyKind::SmallDiscIrreducible | FamilyKind::SmallDisc => CoverRule::Height,
            _ => CoverRule::Derivative,
        }
    }

    /// Growth exponent of the interval count predicted for power-law `psi`.
    pub fn count_exponent(self, n: usize, lambda: f64) -> f64 {
        match self {
            CoverRule::Derivative => n as f64 + 1.0,
            CoverRule::Height => 4.0 - 2.0 * lambda / 3.0,
        }
    }
}

impl fmt::Display for CoverRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoverRule {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derivative" => Ok(CoverRule::Derivative),
            "height" => Ok(CoverRule::Height),
            _ => Err(LabError::Parse(format!("unknown cover rule `{s}` (derivative|height)"))),
        }
    }
}

/// One block of a cover pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverRequest {
    pub family: FamilySpec,
    pub psi: ApproxFunction,
    pub rule: CoverRule,
    pub budget: u128,
    /// Target number of raw intervals held in memory per slab.
    pub slab_target: usize,
    /// Keep `sigma(t)` and its enlargement in the report.
    pub keep_sets: bool,
}

/// Raw intervals per slab: 2^24 pairs, 256 MiB.
pub const DEFAULT_SLAB_TARGET: usize = 1 << 24;

impl CoverRequest {
    pub fn new(family: FamilySpec, psi: ApproxFunction, rule: CoverRule) -> Self {
        CoverRequest {
            family,
            psi,
            rule,
            budget: DEFAULT_BUDGET,
            slab_target: DEFAULT_SLAB_TARGET,
            keep_sets: false,
        }
    }

    pub fn with_t(&self, t: u32) -> Self {
        CoverRequest {
            family: self.family.with_t(t),
            ..self.clone()
        }
    }

    /// `psi(2^t)`.
    pub fn eps(&self) -> f64 {
        self.psi.eval((self.family.t as f64).exp2())
    }

    /// Enlargement radius.
    pub fn delta(&self) -> f64 {
        self.eps() * (-(self.family.t as f64)).exp2()
    }

    /// Interval length.
    pub fn ell(&self) -> f64 {
        match self.rule {
            CoverRule::Derivative => 2.0 * self.delta(),
            CoverRule::Height => self.delta(),
        }
    }

    pub fn kappa(&self) -> f64 {
        match self.rule {
            CoverRule::Derivative => crate::covers::ops::SLOPE_BOUND,
            CoverRule::Height => 0.0,
        }
    }

    pub fn enlargement_ambient(&self) -> Ambient {
        match self.rule {
            CoverRule::Derivative => Ambient::Unit,
            CoverRule::Height => Ambient::Real,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        let ell = self.ell();
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(LabError::Domain(format!("interval length underflows at t = {}", self.family.t)));
        }
        Ok(())
    }

    fn sweep(&self) -> Sweep {
        let (lo, hi) = self.family.height_range();
        let cmax = hi - 1;
        let eta = match self.rule {
            CoverRule::Derivative => EtaRule::Constant(self.eps()),
            CoverRule::Height => EtaRule::ByHeight((0..=cmax).map(|h| self.psi.eval(h as f64)).collect()),
        };
        Sweep {
            n: self.family.n,
            cmax,
            h_min: lo,
            kappa: self.kappa(),
            eta,
            class: Classifier::for_spec(&self.family),
        }
    }
}

/// Result of [`cover_block`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub t: u32,
    pub rule: CoverRule,
    pub n: usize,
    pub lambda: f64,
    pub c: f64,
    pub kind: FamilyKind,
    pub ell: f64,
    pub delta: f64,
    /// Number `N` of length-`ell` intervals.
    pub count: u64,
    pub measure_before: f64,
    pub measure_after: f64,
    pub components_before: u64,
    pub components_after: u64,
    /// Grid boxes of width `ell`, aligned at `-1/2`, meeting `sigma(t)`.
    pub box_count: u64,
    pub slabs: usize,
    /// Candidates handed to the exact engine.
    pub fallbacks: u64,
    pub g: String,
    /// `g(ell) N`.
    pub term: f64,
    #[serde(skip)]
    pub sigma: Option<IntervalSet>,
    #[serde(skip)]
    pub enlarged: Option<IntervalSet>,
}

impl CoverReport {
    pub const CSV_HEADER: &'static str = "t,rule,kind,n,lambda,c,ell,delta,count,measure_before,measure_after,\
components_before,components_after,box_count,slabs,fallbacks,g,term";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:?},{:?},{:?},{:?},{},{:?},{:?},{},{},{},{},{},{},{:?}",
            self.t,
            self.rule,
            self.kind,
            self.n,
            self.lambda,
            self.c,
            self.ell,
            self.delta,
            self.count,
            self.measure_before,
            self.measure_after,
            self.components_before,
            self.components_after,
            self.box_count,
            self.slabs,
            self.fallbacks,
            self.g,
            self.term
        )
    }

    /// `log2(g(ell) N)`; `-inf` when `N = 0`.
    pub fn log2_term(&self, g: &DimensionFunction) -> f64 {
        g.log2_eval(self.ell) + (self.count as f64).log2()
    }

    pub fn with_g(&self, g: &DimensionFunction) -> CoverReport {
        CoverReport {
            g: g.to_string(),
            term: g.eval(self.ell) * self.count as f64,
            ..self.clone()
        }
    }
}

/// Streaming merge, enlargement and counting of sorted intervals.
struct Stream {
    delta: f64,
    clip: (f64, f64),
    ell: f64,
    cur: Option<(f64, f64)>,
    enl: Option<(f64, f64)>,
    before: NeumaierSum,
    after: NeumaierSum,
    comps_before: u64,
    comps_after: u64,
    count: u64,
    boxes: u64,
    last_box: i64,
    keep: Option<(Vec<(f64, f64)>, Vec<(f64, f64)>)>,
}

impl Stream {
    fn push(&mut self, a: f64, b: f64) {
        match &mut self.cur {
            Some(c) if a <= c.1 => c.1 = c.1.max(b),
            _ => {
                if let Some(c) = self.cur.take() {
                    self.component(c);
                }
                self.cur = Some((a, b));
            }
        }
    }

    fn component(&mut self, (a, b): (f64, f64)) {
        self.before.add(b - a);
        self.comps_before += 1;
        // Boxes whose interior meets [a, b]; a point meets one box.
        let w = self.ell;
        let first = ((a - UNIT_LO) / w).floor() as i64;
        let last = if b > a { (((b - UNIT_LO) / w).ceil() as i64 - 1).max(first) } else { first };
        let first = first.max(self.last_box + 1);
        if last >= first {
            self.boxes += (last - first + 1) as u64;
            self.last_box = last;
        }
        if let Some(k) = &mut self.keep {
            k.0.push((a, b));
        }
        let e = (sub_down(a, self.delta).max(self.clip.0), add_up(b, self.delta).min(self.clip.1));
        match &mut self.enl {
            Some(c) if e.0 <= c.1 => c.1 = c.1.max(e.1),
            _ => {
                if let Some(c) = self.enl.take() {
                    self.enlarged(c);
                }
                self.enl = Some(e);
            }
        }
    }

    fn enlarged(&mut self, (a, b): (f64, f64)) {
        self.after.add(b - a);
        self.comps_after += 1;
        self.count += ceil_span(a, b, self.ell).max(1);
        if let Some(k) = &mut self.keep {
            k.1.push((a, b));
        }
    }

    fn finish(&mut self) {
        if let Some(c) = self.cur.take() {
            self.component(c);
        }
        if let Some(c) = self.enl.take() {
            self.enlarged(c);
        }
    }
}

/// Sorts by left endpoint: bucket pass on the position in `[lo, hi]`,
/// then a comparison sort inside each bucket.
fn sort_intervals(parts: Vec<Vec<(f64, f64)>>, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let total: usize = parts.iter().map(Vec::len).sum();
    if total == 0 {
        return Vec::new();
    }
    let m = (total / 4).max(1);
    let scale = m as f64 / (hi - lo);
    let bucket = |a: f64| (((a - lo) * scale) as usize).min(m - 1);
    let mut starts = vec![0usize; m + 1];
    for p in &parts {
        for &(a, _) in p {
            starts[bucket(a) + 1] += 1;
        }
    }
    for i in 0..m {
        starts[i + 1] += starts[i];
    }
    let mut fill = starts.clone();
    let mut out = vec![(0.0, 0.0); total];
    for p in parts {
        for iv in p {
            let b = bucket(iv.0);
            out[fill[b]] = iv;
            fill[b] += 1;
        }
    }
    for i in 0..m {
        out[starts[i]..starts[i + 1]].sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    }
    out
}

/// Builds `sigma(t)` for the request's block, enlarges it and counts the
/// length-`ell` intervals covering the enlargement. Components are chopped
/// from their left endpoints, so `N = sum ceil(L / ell)`.
pub fn cover_block(req: &CoverRequest, g: &DimensionFunction) -> Result<CoverReport> {
    req.validate()?;
    let sweep = req.sweep();
    sweep.check_budget(req.budget, "use a smaller t or raise the budget")?;
    let estimate = if sweep.uses_kernel() { sweep.pilot_estimate(UNIT_LO, UNIT_HI, 512)? } else { 0.0 };
    let slabs = ((estimate * 1.25 / req.slab_target.max(1) as f64).ceil() as usize).clamp(1, 4096);
    let bounds: Vec<f64> = (0..=slabs)
        .map(|k| if k == slabs { UNIT_HI } else { UNIT_LO + k as f64 / slabs as f64 })
        .collect();
    let (clip_lo, clip_hi) = req.enlargement_ambient().bounds();
    let mut stream = Stream {
        delta: req.delta(),
        clip: (clip_lo, clip_hi),
        ell: req.ell(),
        cur: None,
        enl: None,
        before: NeumaierSum::default(),
        after: NeumaierSum::default(),
        comps_before: 0,
        comps_after: 0,
        count: 0,
        boxes: 0,
        last_box: i64::MIN,
        keep: req.keep_sets.then(|| (Vec::new(), Vec::new())),
    };
    let mut fallbacks = 0;
    for w in bounds.windows(2) {
        let out = sweep.run_slab(w[0], w[1])?;
        fallbacks += out.fallbacks;
        for (a, b) in sort_intervals(out.intervals, w[0], w[1]) {
            stream.push(a, b);
        }
    }
    stream.finish();
    let ell = req.ell();
    let count = stream.count;
    let (sigma, enlarged) = match stream.keep.take() {
        Some((s, e)) => (
            Some(IntervalSet::new(s, Ambient::Unit)),
            Some(IntervalSet::new(e, req.enlargement_ambient())),
        ),
        None => (None, None),
    };
    Ok(CoverReport {
        t: req.family.t,
        rule: req.rule,
        n: req.family.n,
        lambda: req.family.lambda,
        c: req.family.c,
        kind: req.family.kind,
        ell,
        delta: req.delta(),
        count,
        measure_before: stream.before.value(),
        measure_after: stream.after.value(),
        components_before: stream.comps_before,
        components_after: stream.comps_after,
        box_count: stream.boxes,
        slabs,
        fallbacks,
        g: g.to_string(),
        term: g.eval(ell) * count as f64,
        sigma,
        enlarged,
    })
}

/// Length-`ell` intervals covering `set`, laid from each component's left
/// endpoint; the last one may overhang.
pub fn chop(set: &IntervalSet, ell: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a, b) in set.intervals() {
        let k = ceil_span(a, b, ell).max(1);
        for i in 0..k {
            let x = a + i as f64 * ell;
            out.push((x, x + ell));
        }
    }
    out
}
