//! Flat `key = value` run configuration. Precedence: command line, then
//! the config file, then per-command defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("n", "degree bound"),
    ("lambda", "discriminant exponent parameter"),
    ("c", "implied constant of the class predicate"),
    ("kind", "all | large_disc | small_disc | small_disc_irreducible"),
    ("disc_degree", "actual | formal"),
    ("t", "single dyadic block"),
    ("t_range", "blocks a..b (inclusive); overrides t"),
    ("psi", "w=<w> | table=<path> | table=x y;x y"),
    ("g", "s=<s> | table=<path> | table=x y;x y"),
    ("rule", "auto | derivative | height"),
    ("Q", "height bound of the B-set"),
    ("eps", "sublevel threshold of the B-set; default half the admissible bound"),
    ("seed", "random seed"),
    ("jobs", "worker threads (0 = all cores)"),
    ("budget", "ceiling on exhaustively visited candidates"),
    ("mode", "exhaustive | sampled | auto"),
    ("samples", "sample size in sampled mode"),
    ("list_limit", "largest block whose members enumerate lists"),
    ("tolerance", "maximal width of a dimension bracket"),
    ("margin", "slope margin of the cover-sum verdict"),
    ("lemma", "lemma id"),
    ("corpus", "random corpus size of a lemma harness"),
    ("h_max", "height bound of a lemma sweep"),
    ("w", "psi exponent of a lemma harness"),
    ("t_max", "last block of a lemma harness, or of the dyadic series"),
    ("battery", "standard | single | <path to JSON battery>"),
    ("exponent", "power of q in a single series"),
    ("q_max", "last index of the q-series"),
    ("c1", "smaller rescaling constant"),
    ("c2", "larger rescaling constant"),
    ("slab_target", "intervals per slab of the cover pipeline"),
    ("keep_sets", "write the per-block sets of the cover pipeline"),
];

/// Keys that never enter an archive snapshot.
const LOCAL_KEYS: &[&str] = &["out", "from_archive", "config"];

pub fn is_known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

fn defaults(command: &str) -> Vec<(&'static str, &'static str)> {
    let mut d = vec![
        ("seed", "0"),
        ("jobs", "0"),
        ("budget", "1073741824"),
        ("c", "1"),
        ("disc_degree", "actual"),
        ("margin", "0.2"),
        ("tolerance", "0.3"),
        ("mode", "auto"),
        ("samples", "1000000"),
        ("list_limit", "1000000"),
        ("rule", "auto"),
        ("slab_target", "16777216"),
        ("keep_sets", "false"),
    ];
    let specific: &[(&str, &str)] = match command {
        "enumerate" | "census" => &[("n", "3"), ("lambda", "0"), ("kind", "all"), ("t", "0")],
        "cover" => &[
            ("n", "3"),
            ("lambda", "0"),
            ("kind", "small_disc_irreducible"),
            ("t_range", "2..4"),
            ("psi", "w=5"),
            ("g", "s=0.6666666666666666"),
        ],
        "estimate-dimension" => &[
            ("n", "3"),
            ("lambda", "0"),
            ("kind", "small_disc_irreducible"),
            ("t_range", "4..6"),
            ("psi", "w=5"),
        ],
        "b-set" => &[("n", "2"), ("Q", "17")],
        "series" => &[
            ("battery", "standard"),
            ("psi", "w=5"),
            ("g", "s=0.7"),
            ("exponent", "3"),
            ("q_max", "65536"),
            ("t_max", "16"),
            ("c1", "0.5"),
            ("c2", "2"),
        ],
        _ => &[],
    };
    d.extend_from_slice(specific);
    d
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub command: String,
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Merges defaults, the file and the overrides, rejecting unknown keys.
    pub fn resolve(
        command: &str,
        file: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<RunConfig, CliError> {
        let mut values: BTreeMap<String, String> =
            defaults(command).into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let mut layers = Vec::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            layers.push(parse_text(&text)?);
        }
        layers.push(overrides.to_vec());
        for layer in layers {
            for (k, v) in layer {
                if LOCAL_KEYS.contains(&k.as_str()) {
                    continue;
                }
                if !is_known(&k) {
                    return Err(CliError::Usage(format!("unknown config key `{k}`")));
                }
                values.insert(k, v);
            }
        }
        // A t_range supersedes a single block given at a lower layer.
        if overrides.iter().any(|(k, _)| k == "t") && !overrides.iter().any(|(k, _)| k == "t_range") {
            values.remove("t_range");
        }
        let mut cfg = RunConfig {
            command: command.to_string(),
            values,
        };
        cfg.inline_tables()?;
        Ok(cfg)
    }

    /// Reads `table=<path>` values so that archives are self-contained.
    fn inline_tables(&mut self) -> Result<(), CliError> {
        for key in ["psi", "g"] {
            let Some(v) = self.values.get(key) else { continue };
            let Some(path) = v.strip_prefix("table=") else { continue };
            let path = Path::new(path);
            if path.is_file() {
                let text = std::fs::read_to_string(path)?;
                let table = dioplab::functions::LogLogTable::parse(&text).map_err(CliError::from)?;
                let inline = table
                    .xs
                    .iter()
                    .zip(&table.ys)
                    .map(|(x, y)| format!("{x:?} {y:?}"))
                    .collect::<Vec<_>>()
                    .join(";");
                self.values.insert(key.to_string(), format!("table={inline}"));
            }
        }
        Ok(())
    }

    pub fn from_snapshot(text: &str) -> Result<RunConfig, CliError> {
        let mut command = None;
        let mut values = BTreeMap::new();
        for (k, v) in parse_text(text)? {
            if k == "command" {
                command = Some(v);
            } else if is_known(&k) {
                values.insert(k, v);
            } else {
                return Err(CliError::Usage(format!("unknown config key `{k}` in archive")));
            }
        }
        let command = command.ok_or_else(|| CliError::Usage("archive config lacks `command`".into()))?;
        Ok(RunConfig { command, values })
    }

    /// Sorted `key = value` lines, `command` first.
    pub fn snapshot(&self) -> String {
        let mut s = format!("command = {}\n", self.command);
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self
            .raw(key)
            .ok_or_else(|| CliError::Usage(format!("missing config key `{key}`")))?;
        v.parse()
            .map_err(|e| CliError::Usage(format!("bad value `{v}` for `{key}`: {e}")))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }

    /// `t_range = a..b`, else the single block `t`.
    pub fn t_range(&self) -> Result<RangeInclusive<u32>, CliError> {
        if let Some(r) = self.raw("t_range") {
            let (a, b) = r
                .split_once("..")
                .ok_or_else(|| CliError::Usage(format!("bad value `{r}` for `t_range`: expected a..b")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|_| CliError::Usage(format!("bad value `{r}` for `t_range`")))
            };
            let (a, b) = (parse(a)?, parse(b)?);
            if a > b {
                return Err(CliError::Usage(format!("empty t_range `{r}`")));
            }
            return Ok(a..=b);
        }
        let t: u32 = self.get("t")?;
        Ok(t..=t)
    }
}
