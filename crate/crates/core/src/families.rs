//! Dyadic families of integer polynomials classified by discriminant size.
//!
//! A block `t` holds the polynomials of degree at most `n` with
//! `2^t <= H(P) < 2^(t+1)`. Within a block the classes compare `|D(P)|`
//! against `c H(P)^(2(n-1-lambda))`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::polycore::discriminant::discriminant_small;
use crate::polycore::factor::{is_irreducible_small, DivisorTable};
use crate::polycore::{is_irreducible, IntPoly};

/// Default ceiling on the number of coefficient tuples visited exhaustively.
pub const DEFAULT_BUDGET: u128 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    All,
    LargeDisc,
    SmallDisc,
    SmallDiscIrreducible,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::All => "all",
            FamilyKind::LargeDisc => "large_disc",
            FamilyKind::SmallDisc => "small_disc",
            FamilyKind::SmallDiscIrreducible => "small_disc_irreducible",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(FamilyKind::All),
            "large_disc" => Ok(FamilyKind::LargeDisc),
            "small_disc" => Ok(FamilyKind::SmallDisc),
            "small_disc_irreducible" => Ok(FamilyKind::SmallDiscIrreducible),
            _ => Err(LabError::Parse(format!("unknown family kind `{s}`"))),
        }
    }
}

/// Which discriminant a polynomial of degree below `n` is classified by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscDegree {
    /// Discriminant at the actual degree.
    #[default]
    Actual,
    /// Discriminant of the form of degree `n`.
    Formal,
}

impl FromStr for DiscDegree {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "actual" => Ok(DiscDegree::Actual),
            "formal" => Ok(DiscDegree::Formal),
            _ => Err(LabError::Parse(format!("disc_degree must be `actual` or `formal`, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub n: usize,
    pub lambda: f64,
    pub c: f64,
    pub kind: FamilyKind,
    pub t: u32,
    #[serde(default)]
    pub disc_degree: DiscDegree,
}

impl FamilySpec {
    pub fn new(n: usize, lambda: f64, c: f64, kind: FamilyKind, t: u32) -> Self {
        FamilySpec {
            n,
            lambda,
            c,
            kind,
            t,
            disc_degree: DiscDegree::Actual,
        }
    }

    pub fn all(n: usize, t: u32) -> Self {
        Self::new(n, 0.0, 1.0, FamilyKind::All, t)
    }

    pub fn with_t(&self, t: u32) -> Self {
        FamilySpec { t, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(LabError::Domain("degree bound n must be at least 1".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(LabError::Domain(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(LabError::Domain(format!("c must be positive, got {}", self.c)));
        }
        if self.kind == FamilyKind::SmallDiscIrreducible && self.n != 3 {
            return Err(LabError::Domain("small_disc_irreducible requires n = 3".into()));
        }
        if self.t > 40 {
            return Err(LabError::Domain(format!("block index t = {} is out of range", self.t)));
        }
        Ok(())
    }

    /// `(2^t, 2^(t+1))`: the block is `lo <= H < hi`.
    pub fn height_range(&self) -> (i64, i64) {
        (1i64 << self.t, 1i64 << (self.t + 1))
    }

    /// Size of the signed coefficient box `|a_i| < 2^(t+1)`.
    pub fn box_size(&self) -> u128 {
        let (_, hi) = self.height_range();
        ((2 * hi - 1) as u128).pow(self.n as u32 + 1)
    }

    /// Exact number of coefficient tuples in the block.
    pub fn block_size(&self) -> u128 {
        let (lo, hi) = self.height_range();
        let e = self.n as u32 + 1;
        ((2 * hi - 1) as u128).pow(e) - ((2 * lo - 1) as u128).pow(e)
    }

    /// Exponent `2(n - 1 - lambda)` of the class threshold.
    pub fn disc_exponent(&self) -> f64 {
        2.0 * (self.n as f64 - 1.0 - self.lambda)
    }

    /// `c H^(2(n-1-lambda))`.
    pub fn threshold(&self, h: f64) -> f64 {
        let e = self.disc_exponent();
        let p = if e.fract() == 0.0 && e.abs() < 64.0 {
            h.powi(e as i32)
        } else {
            h.powf(e)
        };
        self.c * p
    }

    fn disc_class(&self, abs_disc: f64, h: f64) -> bool {
        match self.kind {
            FamilyKind::All => true,
            FamilyKind::LargeDisc => abs_disc >= self.threshold(h),
            FamilyKind::SmallDisc | FamilyKind::SmallDiscIrreducible => {
                abs_disc <= self.threshold(h)
            }
        }
    }

    /// Class membership and discriminant for an arbitrary polynomial
    /// (block condition not included).
    pub fn classify(&self, p: &IntPoly) -> Result<Classified> {
        if p.is_zero() {
            return Err(LabError::Domain("zero polynomial has no class".into()));
        }
        if p.degree() > self.n {
            return Ok(Classified::outside());
        }
        let h = p.height()?.to_f64().unwrap_or(f64::INFINITY);
        let disc = if p.degree() == 0 {
            None
        } else {
            Some(match self.disc_degree {
                DiscDegree::Actual => p.discriminant()?,
                DiscDegree::Formal => p.discriminant_at_degree(self.n)?,
            })
        };
        let abs_disc = disc.as_ref().map(|d| d.abs().to_f64().unwrap_or(f64::INFINITY));
        let member = match (self.kind, abs_disc) {
            (FamilyKind::All, _) => true,
            (_, None) => false,
            (FamilyKind::SmallDiscIrreducible, Some(d)) => {
                self.disc_class(d, h) && is_irreducible(p)?
            }
            (_, Some(d)) => self.disc_class(d, h),
        };
        Ok(Classified {
            member,
            abs_disc,
        })
    }

    /// Block and class membership.
    pub fn contains(&self, p: &IntPoly) -> Result<bool> {
        if p.is_zero() || p.degree() > self.n {
            return Ok(false);
        }
        let h = p.height()?;
        let (lo, hi) = self.height_range();
        if h < BigInt::from(lo) || h >= BigInt::from(hi) {
            return Ok(false);
        }
        Ok(self.classify(p)?.member)
    }
}

/// Outcome of the class predicate for one polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classified {
    pub member: bool,
    /// `|D(P)|`; `None` for constants.
    pub abs_disc: Option<f64>,
}

impl Classified {
    fn outside() -> Self {
        Classified {
            member: false,
            abs_disc: None,
        }
    }
}

/// Machine-integer classifier for `n <= 3`, used by the hot loops.
#[derive(Debug, Clone)]
pub struct FastClassifier {
    spec: FamilySpec,
    table: Option<DivisorTable>,
}

impl FastClassifier {
    /// Available when `n <= 3` and the block's coefficients fit comfortably
    /// in machine integers.
    pub fn new(spec: &FamilySpec) -> Option<Self> {
        if spec.n > 3 || spec.t > 20 {
            return None;
        }
        let (_, hi) = spec.height_range();
        let table = (spec.kind == FamilyKind::SmallDiscIrreducible)
            .then(|| DivisorTable::new(hi as usize));
        Some(FastClassifier {
            spec: spec.clone(),
            table,
        })
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    /// Necessary condition for membership: the discriminant part of the
    /// predicate alone, skipping the irreducibility test.
    #[inline]
    pub fn disc_member(&self, c: &[i64], h: i64) -> bool {
        if self.spec.kind != FamilyKind::SmallDiscIrreducible {
            return self.classify(c, h).member;
        }
        let mut padded = [0i64; 4];
        padded[..c.len()].copy_from_slice(c);
        match discriminant_small(&padded) {
            Some(d) => self.spec.disc_class(d.unsigned_abs() as f64, h as f64),
            None => false,
        }
    }

    /// Classification of `c` (constant first, length `n + 1`); `h` is its height.
    #[inline]
    pub fn classify(&self, c: &[i64], h: i64) -> Classified {
        let mut padded = [0i64; 4];
        padded[..c.len()].copy_from_slice(c);
        let deg = match c.iter().rposition(|&v| v != 0) {
            Some(d) => d,
            None => return Classified::outside(),
        };
        let disc = if deg == 0 {
            None
        } else {
            let d = discriminant_small(&padded).expect("degree in 1..=3");
            Some(match self.spec.disc_degree {
                DiscDegree::Actual => d,
                DiscDegree::Formal if deg == self.spec.n => d,
                DiscDegree::Formal if deg + 1 == self.spec.n => {
                    let lead = c[deg] as i128;
                    lead * lead * d
                }
                DiscDegree::Formal if self.spec.n == 1 => 1,
                DiscDegree::Formal => 0,
            })
        };
        let abs_disc = disc.map(|d| d.unsigned_abs() as f64);
        let member = match (self.spec.kind, abs_disc) {
            (FamilyKind::All, _) => true,
            (_, None) => false,
            (FamilyKind::SmallDiscIrreducible, Some(d)) => {
                self.spec.disc_class(d, h as f64)
                    && is_irreducible_small(&padded, self.table.as_ref().unwrap())
            }
            (_, Some(d)) => self.spec.disc_class(d, h as f64),
        };
        Classified { member, abs_disc }
    }
}

/// Visits every nonzero tuple with `|a_i| < hi` whose highest nonzero
/// coefficient is positive, one partition at a time. A partition is the
/// pair (top index k, a_k); lower coefficients run lexicographically.
fn canonical_partitions(n: usize, hi: i64) -> Vec<(usize, i64)> {
    let mut parts = Vec::new();
    for k in (0..=n).rev() {
        for a in 1..hi {
            parts.push((k, a));
        }
    }
    parts
}

fn for_each_in_partition(n: usize, hi: i64, part: (usize, i64), mut f: impl FnMut(&[i64])) {
    let (k, ak) = part;
    let mut c = vec![0i64; n + 1];
    c[k] = ak;
    for v in c.iter_mut().take(k) {
        *v = -(hi - 1);
    }
    loop {
        f(&c);
        // Odometer over c[0..k], a_0 fastest.
        let mut i = 0;
        loop {
            if i == k {
                return;
            }
            if c[i] < hi - 1 {
                c[i] += 1;
                break;
            }
            c[i] = -(hi - 1);
            i += 1;
        }
    }
}

#[inline]
fn height_of(c: &[i64]) -> i64 {
    c.iter().map(|v| v.abs()).max().unwrap_or(0)
}

/// Lexicographic stream over `(a_n, ..., a_0)` of a family block.
pub struct FamilyIter {
    spec: FamilySpec,
    fast: Option<FastClassifier>,
    /// Coefficients, highest first.
    cur: Vec<i64>,
    done: bool,
    symmetric: bool,
}

impl FamilyIter {
    fn advance(&mut self) {
        let (_, hi) = self.spec.height_range();
        let mut i = self.cur.len();
        loop {
            if i == 0 {
                self.done = true;
                return;
            }
            i -= 1;
            if self.cur[i] < hi - 1 {
                self.cur[i] += 1;
                return;
            }
            self.cur[i] = -(hi - 1);
        }
    }
}

impl Iterator for FamilyIter {
    type Item = IntPoly;

    fn next(&mut self) -> Option<IntPoly> {
        let (lo, _) = self.spec.height_range();
        while !self.done {
            let high_first = self.cur.clone();
            self.advance();
            let c: Vec<i64> = high_first.iter().rev().copied().collect();
            let h = height_of(&c);
            if h < lo {
                continue;
            }
            if self.symmetric && c.iter().rev().find(|&&v| v != 0).is_some_and(|&v| v < 0) {
                continue;
            }
            let member = match &self.fast {
                Some(fc) => fc.classify(&c, h).member,
                None => {
                    let p = IntPoly::from_i64(&c);
                    match self.spec.classify(&p) {
                        Ok(cl) => cl.member,
                        Err(_) => false,
                    }
                }
            };
            if member {
                return Some(IntPoly::from_i64(&c));
            }
        }
        None
    }
}

/// Options for exhaustive enumeration.
#[derive(Debug, Clone, Copy)]
pub struct EnumerateOptions {
    pub budget: u128,
    /// Yield one of each `{P, -P}` (the one with positive leading
    /// coefficient); counts then carry a multiplier of 2.
    pub symmetric: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            budget: DEFAULT_BUDGET,
            symmetric: false,
        }
    }
}

fn check_budget(spec: &FamilySpec, budget: u128) -> Result<()> {
    let needed = spec.box_size();
    if needed > budget {
        return Err(LabError::Budget {
            needed,
            budget,
            advice: "use sampled mode (sample / census with mode=sampled)".into(),
        });
    }
    Ok(())
}

/// Every polynomial of the block satisfying the class predicate, in
/// lexicographic order over `(a_n, ..., a_0)`.
pub fn enumerate(spec: &FamilySpec, opts: EnumerateOptions) -> Result<FamilyIter> {
    spec.validate()?;
    check_budget(spec, opts.budget)?;
    let (_, hi) = spec.height_range();
    Ok(FamilyIter {
        spec: spec.clone(),
        fast: FastClassifier::new(spec),
        cur: vec![-(hi - 1); spec.n + 1],
        done: false,
        symmetric: opts.symmetric,
    })
}

/// Uniform draw from the signed coefficient box of the block.
fn draw_box(rng: &mut ChaCha8Rng, n: usize, hi: i64, out: &mut [i64]) {
    for v in out.iter_mut().take(n + 1) {
        *v = rng.gen_range(-(hi - 1)..=hi - 1);
    }
}

/// Draws `size` polynomials uniformly from the block's class members by
/// rejection from the coefficient box. Fails when the acceptance rate
/// drops below `floor`.
pub fn sample(spec: &FamilySpec, size: usize, seed: u64, floor: f64) -> Result<Vec<IntPoly>> {
    spec.validate()?;
    if size == 0 {
        return Err(LabError::Precondition("sample size must be at least 1".into()));
    }
    let (lo, hi) = spec.height_range();
    let fast = FastClassifier::new(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_draws = ((size as f64) / floor.max(1e-12)).ceil() as u64;
    let mut out = Vec::with_capacity(size);
    let mut c = vec![0i64; spec.n + 1];
    let mut draws = 0u64;
    while out.len() < size {
        if draws >= max_draws {
            return Err(LabError::LowAcceptance {
                rate: out.len() as f64 / draws as f64,
                floor,
            });
        }
        draws += 1;
        draw_box(&mut rng, spec.n, hi, &mut c);
        let h = height_of(&c);
        if h < lo {
            continue;
        }
        let member = match &fast {
            Some(fc) => fc.classify(&c, h).member,
            None => spec.classify(&IntPoly::from_i64(&c))?.member,
        };
        if member {
            out.push(IntPoly::from_i64(&c));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CensusMode {
    Exhaustive,
    Sampled { sample_size: u64, seed: u64 },
}

impl fmt::Display for CensusMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CensusMode::Exhaustive => f.write_str("exhaustive"),
            CensusMode::Sampled { sample_size, seed } => {
                write!(f, "sampled:{sample_size}:{seed}")
            }
        }
    }
}

impl FromStr for CensusMode {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "exhaustive" {
            return Ok(CensusMode::Exhaustive);
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["sampled", size, seed] => Ok(CensusMode::Sampled {
                sample_size: size.parse().map_err(|_| LabError::Parse(format!("bad mode `{s}`")))?,
                seed: seed.parse().map_err(|_| LabError::Parse(format!("bad mode `{s}`")))?,
            }),
            _ => Err(LabError::Parse(format!("bad census mode `{s}`"))),
        }
    }
}

/// Counts and the discriminant sum `sum |D(P)|^(-1/2)` over a block's class.
///
/// In sampled mode `class_count`, `zero_disc_count` and `disc_sum` are
/// unbiased estimates scaled to the exact block size; `stderr` and
/// `class_stderr` are their standard errors. Exhaustive runs report exact
/// values and zero errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub t: u32,
    pub kind: FamilyKind,
    pub n: usize,
    pub lambda: f64,
    pub c: f64,
    pub total_count: u64,
    pub class_count: f64,
    pub zero_disc_count: f64,
    pub disc_sum: f64,
    pub mode: CensusMode,
    pub stderr: f64,
    pub class_stderr: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    total: u64,
    class: u64,
    zero: u64,
    disc_sum: f64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.total += o.total;
        self.class += o.class;
        self.zero += o.zero;
        self.disc_sum += o.disc_sum;
        self
    }

    fn add(&mut self, cl: Classified, weight: u64) {
        self.total += weight;
        if !cl.member {
            return;
        }
        self.class += weight;
        match cl.abs_disc {
            Some(d) if d > 0.0 => self.disc_sum += weight as f64 / d.sqrt(),
            _ => self.zero += weight,
        }
    }
}

/// How a census should be computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CensusPlan {
    Exhaustive { budget: u128 },
    Sampled { sample_size: u64, seed: u64 },
    /// Exhaustive when the box fits the budget, sampled otherwise.
    Auto { budget: u128, sample_size: u64, seed: u64 },
}

pub fn census(spec: &FamilySpec, plan: CensusPlan) -> Result<CensusReport> {
    spec.validate()?;
    match plan {
        CensusPlan::Exhaustive { budget } => {
            check_budget(spec, budget)?;
            census_exhaustive(spec)
        }
        CensusPlan::Sampled { sample_size, seed } => census_sampled(spec, sample_size, seed),
        CensusPlan::Auto {
            budget,
            sample_size,
            seed,
        } => {
            if spec.box_size() <= budget {
                census_exhaustive(spec)
            } else {
                census_sampled(spec, sample_size, seed)
            }
        }
    }
}

fn census_exhaustive(spec: &FamilySpec) -> Result<CensusReport> {
    let (lo, hi) = spec.height_range();
    let fast = FastClassifier::new(spec);
    let parts = canonical_partitions(spec.n, hi);
    // Each canonical tuple stands for P and -P, which share every invariant.
    let tallies: Vec<Result<Tally>> = parts
        .par_iter()
        .map(|&part| {
            let mut tally = Tally::default();
            let mut err = None;
            for_each_in_partition(spec.n, hi, part, |c| {
                let h = height_of(c);
                if h < lo {
                    return;
                }
                let cl = match &fast {
                    Some(fc) => fc.classify(c, h),
                    None => match spec.classify(&IntPoly::from_i64(c)) {
                        Ok(cl) => cl,
                        Err(e) => {
                            err.get_or_insert(e);
                            return;
                        }
                    },
                };
                tally.add(cl, 2);
            });
            match err {
                Some(e) => Err(e),
                None => Ok(tally),
            }
        })
        .collect();
    let mut total = Tally::default();
    for t in tallies {
        total = total.merge(t?);
    }
    debug_assert_eq!(total.total as u128, spec.block_size());
    Ok(CensusReport {
        t: spec.t,
        kind: spec.kind,
        n: spec.n,
        lambda: spec.lambda,
        c: spec.c,
        total_count: total.total,
        class_count: total.class as f64,
        zero_disc_count: total.zero as f64,
        disc_sum: total.disc_sum,
        mode: CensusMode::Exhaustive,
        stderr: 0.0,
        class_stderr: 0.0,
    })
}

const SAMPLE_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    draws: u64,
    class: u64,
    zero: u64,
    sum: f64,
    sum_sq: f64,
}

/// Uniform draws over the block (rejection on the height condition only);
/// the class indicator and `|D|^(-1/2)` are averaged and scaled by the
/// exact block size.
fn census_sampled(spec: &FamilySpec, sample_size: u64, seed: u64) -> Result<CensusReport> {
    if sample_size < 2 {
        return Err(LabError::Precondition("sampled census needs at least 2 draws".into()));
    }
    let (lo, hi) = spec.height_range();
    let fast = FastClassifier::new(spec);
    let chunks = sample_size.div_ceil(SAMPLE_CHUNK);
    let parts: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let want = SAMPLE_CHUNK.min(sample_size - chunk * SAMPLE_CHUNK);
            let mut m = Moments::default();
            let mut c = vec![0i64; spec.n + 1];
            while m.draws < want {
                draw_box(&mut rng, spec.n, hi, &mut c);
                let h = height_of(&c);
                if h < lo {
                    continue;
                }
                m.draws += 1;
                let cl = match &fast {
                    Some(fc) => fc.classify(&c, h),
                    None => spec.classify(&IntPoly::from_i64(&c))?,
                };
                if !cl.member {
                    continue;
                }
                m.class += 1;
                match cl.abs_disc {
                    Some(d) if d > 0.0 => {
                        let v = 1.0 / d.sqrt();
                        m.sum += v;
                        m.sum_sq += v * v;
                    }
                    _ => m.zero += 1,
                }
            }
            Ok(m)
        })
        .collect();
    let mut m = Moments::default();
    for p in parts {
        let p = p?;
        m.draws += p.draws;
        m.class += p.class;
        m.zero += p.zero;
        m.sum += p.sum;
        m.sum_sq += p.sum_sq;
    }
    let nd = m.draws as f64;
    let block = spec.block_size() as f64;
    let mean = m.sum / nd;
    let var = ((m.sum_sq / nd - mean * mean) * nd / (nd - 1.0)).max(0.0);
    let frac = m.class as f64 / nd;
    Ok(CensusReport {
        t: spec.t,
        kind: spec.kind,
        n: spec.n,
        lambda: spec.lambda,
        c: spec.c,
        total_count: spec.block_size() as u64,
        class_count: block * frac,
        zero_disc_count: block * m.zero as f64 / nd,
        disc_sum: block * mean,
        mode: CensusMode::Sampled { sample_size, seed },
        stderr: block * (var / nd).sqrt(),
        class_stderr: block * (frac * (1.0 - frac) / nd).sqrt(),
    })
}

impl CensusReport {
    pub const CSV_HEADER: &'static str =
        "t,kind,n,lambda,c,total_count,class_count,zero_disc_count,disc_sum,mode,stderr";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:?},{:?},{},{:?},{:?},{:?},{},{:?}",
            self.t,
            self.kind,
            self.n,
            self.lambda,
            self.c,
            self.total_count,
            self.class_count,
            self.zero_disc_count,
            self.disc_sum,
            self.mode,
            self.stderr
        )
    }
}

/// Class-member coefficient vectors of a block (constant first), using the
/// `{P, -P}` reduction: only tuples whose highest nonzero coefficient is
/// positive are returned.
pub fn block_members(spec: &FamilySpec, budget: u128) -> Result<Vec<Vec<i64>>> {
    spec.validate()?;
    check_budget(spec, budget)?;
    let (lo, hi) = spec.height_range();
    let fast = FastClassifier::new(spec);
    let parts = canonical_partitions(spec.n, hi);
    let chunks: Vec<Result<Vec<Vec<i64>>>> = parts
        .par_iter()
        .map(|&part| {
            let mut out = Vec::new();
            let mut err = None;
            for_each_in_partition(spec.n, hi, part, |c| {
                let h = height_of(c);
                if h < lo {
                    return;
                }
                let member = match &fast {
                    Some(fc) => fc.classify(c, h).member,
                    None => match spec.classify(&IntPoly::from_i64(c)) {
                        Ok(cl) => cl.member,
                        Err(e) => {
                            err.get_or_insert(e);
                            false
                        }
                    },
                };
                if member {
                    out.push(c.to_vec());
                }
            });
            match err {
                Some(e) => Err(e),
                None => Ok(out),
            }
        })
        .collect();
    let mut all = Vec::new();
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

/// Exact `|D|` of a small coefficient vector, for reporting.
pub fn abs_discriminant(c: &[i64]) -> Option<BigInt> {
    let p = IntPoly::from_i64(c);
    if p.degree() == 0 {
        return None;
    }
    p.discriminant().ok().map(|d| d.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_zero_linear_has_eight_members() {
        let spec = FamilySpec::all(1, 0);
        let polys: Vec<IntPoly> = enumerate(&spec, EnumerateOptions::default()).unwrap().collect();
        assert_eq!(polys.len(), 8);
        let report = census(&spec, CensusPlan::Exhaustive { budget: DEFAULT_BUDGET }).unwrap();
        assert_eq!(report.total_count, 8);
        // Constants ±1 carry no discriminant.
        assert_eq!(report.zero_disc_count, 2.0);
        assert_eq!(report.disc_sum, 6.0);
    }

    #[test]
    fn block_one_linear_has_forty_members() {
        let spec = FamilySpec::all(1, 1);
        assert_eq!(enumerate(&spec, EnumerateOptions::default()).unwrap().count(), 40);
        assert_eq!(spec.block_size(), 40);
    }

    #[test]
    fn order_is_lexicographic_from_the_top() {
        let spec = FamilySpec::all(1, 0);
        let polys: Vec<String> = enumerate(&spec, EnumerateOptions::default())
            .unwrap()
            .map(|p| p.to_string())
            .collect();
        assert_eq!(polys, ["-1 -1", "0 -1", "1 -1", "-1", "1", "-1 1", "0 1", "1 1"]);
    }

    #[test]
    fn symmetric_enumeration_halves() {
        let spec = FamilySpec::new(2, 0.0, 1.0, FamilyKind::SmallDisc, 2);
        let full = enumerate(&spec, EnumerateOptions::default()).unwrap().count();
        let half = enumerate(
            &spec,
            EnumerateOptions {
                symmetric: true,
                ..Default::default()
            },
        )
        .unwrap()
        .count();
        assert_eq!(full, 2 * half);
    }

    #[test]
    fn budget_is_enforced() {
        let spec = FamilySpec::all(3, 6);
        let err = enumerate(&spec, EnumerateOptions::default()).err().unwrap();
        assert!(matches!(err, LabError::Budget { .. }));
    }

    #[test]
    fn fast_and_exact_classifiers_agree() {
        for kind in [
            FamilyKind::All,
            FamilyKind::LargeDisc,
            FamilyKind::SmallDisc,
            FamilyKind::SmallDiscIrreducible,
        ] {
            for disc_degree in [DiscDegree::Actual, DiscDegree::Formal] {
                let mut spec = FamilySpec::new(3, 0.5, 1.0, kind, 1);
                spec.disc_degree = disc_degree;
                let fc = FastClassifier::new(&spec).unwrap();
                let (_, hi) = spec.height_range();
                for_each_in_partition(3, hi, (3, 1), |c| {
                    let h = height_of(c);
                    let p = IntPoly::from_i64(c);
                    assert_eq!(fc.classify(c, h).member, spec.classify(&p).unwrap().member, "{p}");
                });
            }
        }
    }

    #[test]
    fn sample_respects_block_and_seed() {
        let spec = FamilySpec::all(3, 10);
        let a = sample(&spec, 1000, 7, 1e-3).unwrap();
        let b = sample(&spec, 1000, 7, 1e-3).unwrap();
        assert_eq!(a, b);
        for p in &a {
            let h = p.height().unwrap();
            assert!(h >= BigInt::from(1024) && h < BigInt::from(2048));
        }
        assert!(matches!(
            sample(&spec, 0, 7, 1e-3),
            Err(LabError::Precondition(_))
        ));
    }

    #[test]
    fn csv_row_shape() {
        let spec = FamilySpec::all(1, 0);
        let r = census(&spec, CensusPlan::Exhaustive { budget: DEFAULT_BUDGET }).unwrap();
        assert_eq!(r.csv_row(), "0,all,1,0.0,1.0,8,8.0,2.0,6.0,exhaustive,0.0");
    }
}
