//! The two monotone function families that parameterize every experiment:
//! approximation functions `psi` and dimension functions `g`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Positive table sampled at increasing abscissae, interpolated linearly in
/// log-log coordinates and extrapolated with the end slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLogTable {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl LogLogTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(LabError::Domain("a table needs at least two (x, y) nodes".into()));
        }
        if xs.iter().chain(&ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(LabError::Domain("table nodes must be positive and finite".into()));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::Domain("table abscissae must be strictly increasing".into()));
        }
        Ok(LogLogTable { xs, ys })
    }

    /// Parses whitespace-separated `x y` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
            let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
                return Err(LabError::Parse(format!("table line {}: expected `x y`", i + 1)));
            };
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| LabError::Parse(format!("table line {}: bad number `{s}`", i + 1)))
            };
            xs.push(parse(x)?);
            ys.push(parse(y)?);
        }
        Self::new(xs, ys)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.ln_eval_ln(x.ln()).exp()
    }

    /// `ln y` at `x = exp(lx)`; never leaves the log domain.
    pub fn ln_eval_ln(&self, lx: f64) -> f64 {
        let n = self.xs.len();
        let i = self.xs.partition_point(|&v| v.ln() <= lx).clamp(1, n - 1);
        let (x0, x1) = (self.xs[i - 1].ln(), self.xs[i].ln());
        let (y0, y1) = (self.ys[i - 1].ln(), self.ys[i].ln());
        y0 + (y1 - y0) * (lx - x0) / (x1 - x0)
    }

    pub fn is_increasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[0] < w[1])
    }

    pub fn is_decreasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[0] > w[1])
    }

    /// Log-log slope of the first and last segments.
    pub fn end_slopes(&self) -> (f64, f64) {
        let n = self.xs.len();
        let s = |i: usize| (self.ys[i + 1] / self.ys[i]).ln() / (self.xs[i + 1] / self.xs[i]).ln();
        (s(0), s(n - 2))
    }

    fn to_text(&self) -> String {
        self.xs
            .iter()
            .zip(&self.ys)
            .map(|(x, y)| format!("{x:?} {y:?}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Approximation function `psi`: positive and decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApproxFunction {
    /// `psi(q) = q^-w`.
    PowerLaw { w: f64 },
    Custom { table: LogLogTable },
}

impl ApproxFunction {
    pub fn power(w: f64) -> Result<Self> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(LabError::Domain(format!("psi exponent must be positive, got {w}")));
        }
        Ok(ApproxFunction::PowerLaw { w })
    }

    pub fn custom(table: LogLogTable) -> Result<Self> {
        if !table.is_decreasing() {
            return Err(LabError::Domain("psi table must be strictly decreasing".into()));
        }
        Ok(ApproxFunction::Custom { table })
    }

    pub fn eval(&self, q: f64) -> f64 {
        match self {
            ApproxFunction::PowerLaw { w } => q.powf(-w),
            ApproxFunction::Custom { table } => table.eval(q),
        }
    }

    /// `ln psi(q)`, stable for huge `q`.
    pub fn ln_eval(&self, q: f64) -> f64 {
        match self {
            ApproxFunction::PowerLaw { w } => -w * q.ln(),
            ApproxFunction::Custom { table } => table.ln_eval_ln(q.ln()),
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match self {
            ApproxFunction::PowerLaw { w } => Some(*w),
            ApproxFunction::Custom { .. } => None,
        }
    }
}

impl fmt::Display for ApproxFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxFunction::PowerLaw { w } => write!(f, "w={w:?}"),
            ApproxFunction::Custom { table } => write!(f, "table={}", table.to_text()),
        }
    }
}

impl FromStr for ApproxFunction {
    type Err = LabError;
    /// `w=<w>` or an inline table `table=x y;x y;...`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(w) = s.strip_prefix("w=") {
            let w = w.parse().map_err(|_| LabError::Parse(format!("bad psi `{s}`")))?;
            return ApproxFunction::power(w);
        }
        if let Some(t) = s.strip_prefix("table=") {
            return ApproxFunction::custom(LogLogTable::parse(&t.replace(';', "\n"))?);
        }
        Err(LabError::Parse(format!("psi must be `w=<w>` or `table=...`, got `{s}`")))
    }
}

/// Dimension function `g`: increasing, `g(r) -> 0` as `r -> 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DimensionFunction {
    /// `g(r) = r^s`.
    Power { s: f64 },
    Custom { table: LogLogTable },
}

impl DimensionFunction {
    pub fn power(s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(LabError::Domain(format!("dimension exponent must be >= 0, got {s}")));
        }
        Ok(DimensionFunction::Power { s })
    }

    pub fn custom(table: LogLogTable) -> Result<Self> {
        if !table.is_increasing() {
            return Err(LabError::Domain("g table must be strictly increasing".into()));
        }
        if !(table.end_slopes().0 > 0.0) {
            return Err(LabError::Domain("g table must tend to 0 at 0".into()));
        }
        Ok(DimensionFunction::Custom { table })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            DimensionFunction::Power { s } => r.powf(*s),
            DimensionFunction::Custom { table } => table.eval(r),
        }
    }

    pub fn log2_eval(&self, r: f64) -> f64 {
        match self {
            DimensionFunction::Power { s } => s * r.log2(),
            DimensionFunction::Custom { table } => table.eval(r).log2(),
        }
    }

    /// `ln g(r)` at `r = exp(lr)`, for arguments far below `f64` range.
    pub fn ln_eval_ln(&self, lr: f64) -> f64 {
        match self {
            DimensionFunction::Power { s } => s * lr,
            DimensionFunction::Custom { table } => table.ln_eval_ln(lr),
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match self {
            DimensionFunction::Power { s } => Some(*s),
            DimensionFunction::Custom { .. } => None,
        }
    }

    /// Checks that `g(q)/q` decreases on a log grid over `[lo, hi]`; used
    /// only to warn, since the implemented direction does not need it.
    pub fn ratio_decreasing_on(&self, lo: f64, hi: f64, points: usize) -> bool {
        let grid: Vec<f64> = (0..points)
            .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
            .collect();
        grid.windows(2)
            .all(|w| self.eval(w[1]) / w[1] <= self.eval(w[0]) / w[0] * (1.0 + 1e-12))
    }
}

impl fmt::Display for DimensionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimensionFunction::Power { s } => write!(f, "s={s:?}"),
            DimensionFunction::Custom { table } => write!(f, "table={}", table.to_text()),
        }
    }
}

impl FromStr for DimensionFunction {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(v) = s.strip_prefix("s=") {
            let v = v.parse().map_err(|_| LabError::Parse(format!("bad g `{s}`")))?;
            return DimensionFunction::power(v);
        }
        if let Some(t) = s.strip_prefix("table=") {
            return DimensionFunction::custom(LogLogTable::parse(&t.replace(';', "\n"))?);
        }
        Err(LabError::Parse(format!("g must be `s=<s>` or `table=...`, got `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_interpolation_reproduces_power_laws() {
        let t = LogLogTable::new(vec![1.0, 10.0, 100.0], vec![1.0, 0.01, 0.0001]).unwrap();
        for x in [1.0f64, 3.0, 50.0, 1000.0, 0.5] {
            let want: f64 = x.powf(-2.0);
            assert!((t.eval(x) / want - 1.0).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn parse_and_display_round_trip() {
        let psi: ApproxFunction = "w=5".parse().unwrap();
        assert_eq!(psi.to_string(), "w=5.0");
        assert_eq!(psi.to_string().parse::<ApproxFunction>().unwrap(), psi);
        let g: DimensionFunction = "table=0.001 0.01;1 1".parse().unwrap();
        assert_eq!(g.to_string().parse::<DimensionFunction>().unwrap(), g);
        assert!("w=-1".parse::<ApproxFunction>().is_err());
        assert!("table=1 1;2 2".parse::<ApproxFunction>().is_err());
        assert!("q=3".parse::<DimensionFunction>().is_err());
    }

    #[test]
    fn ratio_hypothesis_check() {
        assert!(DimensionFunction::power(0.5).unwrap().ratio_decreasing_on(1e-6, 1.0, 50));
        assert!(!DimensionFunction::power(2.0).unwrap().ratio_decreasing_on(1e-6, 1.0, 50));
    }
}
