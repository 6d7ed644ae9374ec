//! Schemas of every file a run archive may hold. A file passes when it
//! parses into the type that wrote it; CSV files must match their header
//! and column types.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dioplab::covers::{Ambient, CoverReport, IntervalSet};
use dioplab::families::CensusReport;
use dioplab::lemmas::LemmaReport;
use dioplab::series::{BatteryCase, SeriesVerdict};
use dioplab::IntPoly;
use serde::de::DeserializeOwned;

use crate::archive::{Manifest, CONFIG_FILE, DERIVED_FILE, MANIFEST_FILE, TIMING_FILE};
use crate::commands::{self, BSetPart, SeriesRecord, SetsPart};
use crate::config::RunConfig;
use crate::CliError;

/// Column types of a CSV file.
#[derive(Clone, Copy)]
enum Col {
    Int,
    Float,
    Text,
    /// Empty or a verdict name.
    OptVerdict,
}

fn csv_columns(name: &str) -> Option<(String, Vec<Col>)> {
    use Col::*;
    let spec = match name {
        commands::CENSUS_CSV => (
            CensusReport::CSV_HEADER.to_string(),
            vec![Int, Text, Int, Float, Float, Int, Float, Float, Float, Text, Float],
        ),
        commands::COVER_CSV => (
            CoverReport::CSV_HEADER.to_string(),
            vec![
                Int, Text, Text, Int, Float, Float, Float, Float, Int, Float, Float, Int, Int, Int, Int, Int, Text,
                Float,
            ],
        ),
        commands::TERMS_CSV => (commands::TERMS_HEADER.to_string(), vec![Text, Int, Float]),
        commands::SERIES_CSV => (
            commands::series_csv_header(),
            vec![Int, Text, Float, Float, Float, Float, Text, OptVerdict, OptVerdict],
        ),
        commands::SERIES_TERMS_CSV => (commands::SERIES_TERMS_HEADER.to_string(), vec![Int, Float, Float]),
        _ => return None,
    };
    Some(spec)
}

fn check_csv(text: &str, header: &str, cols: &[Col]) -> Result<(), String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        Some(h) => return Err(format!("header `{h}` differs from `{header}`")),
        None => return Err("empty file".into()),
    }
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(format!("row {}: {} fields, expected {}", i + 1, fields.len(), cols.len()));
        }
        for (j, (f, c)) in fields.iter().zip(cols).enumerate() {
            let ok = match c {
                Col::Int => f.parse::<i64>().is_ok(),
                Col::Float => f.parse::<f64>().is_ok(),
                Col::Text => !f.is_empty(),
                Col::OptVerdict => matches!(*f, "" | "converges" | "diverges" | "ambiguous"),
            };
            if !ok {
                return Err(format!("row {}, column {}: bad value `{f}`", i + 1, j + 1));
            }
        }
    }
    Ok(())
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

fn check_members(text: &str) -> Result<(), String> {
    for (i, line) in text.lines().enumerate() {
        line.parse::<IntPoly>().map_err(|e| format!("line {}: {e}", i + 1))?;
    }
    Ok(())
}

fn numbered(name: &str, prefix: &str, suffix: &str) -> bool {
    name.strip_prefix(prefix)
        .and_then(|r| r.strip_suffix(suffix))
        .is_some_and(|t| t.parse::<u32>().is_ok())
}

/// Validates one file by its name.
pub fn check_file(path: &Path) -> Result<(), String> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| "not a file name".to_string())?;
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    if let Some((header, cols)) = csv_columns(name) {
        return check_csv(&text, &header, &cols);
    }
    match name {
        CONFIG_FILE => RunConfig::from_snapshot(&text).map(|_| ()).map_err(|e| e.to_string()),
        MANIFEST_FILE => parse_json::<Manifest>(&text).map(|_| ()),
        DERIVED_FILE => match parse_json::<serde_json::Value>(&text)? {
            serde_json::Value::Object(_) => Ok(()),
            _ => Err("derived values must be a JSON object".into()),
        },
        TIMING_FILE => parse_json::<BTreeMap<String, f64>>(&text).map(|_| ()),
        commands::CENSUS_JSON => parse_json::<Vec<CensusReport>>(&text).map(|_| ()),
        commands::COVER_JSON => parse_json::<Vec<CoverReport>>(&text).map(|_| ()),
        commands::BSET_JSON => {
            let p: BSetPart = parse_json(&text)?;
            IntervalSet::from_rational_strings(&p.set, Ambient::Unit).map_err(|e| e.to_string())?;
            Ok(())
        }
        commands::LEMMA_JSON => parse_json::<LemmaReport>(&text).map(|_| ()),
        commands::BATTERY_JSON => parse_json::<Vec<BatteryCase>>(&text).map(|_| ()),
        commands::SERIES_JSON => {
            let records: Vec<SeriesRecord> = parse_json(&text)?;
            let bad = records
                .iter()
                .flat_map(|r| [&r.main, &r.condensation.first, &r.condensation.second])
                .any(|v: &SeriesVerdict| v.checkpoints.is_empty());
            if bad {
                return Err("series without checkpoints".into());
            }
            Ok(())
        }
        _ if numbered(name, "members_t", ".txt") => check_members(&text),
        _ if numbered(name, "sets_t", ".json") => {
            let s: SetsPart = parse_json(&text)?;
            IntervalSet::from_rational_strings(&s.sigma, Ambient::Unit).map_err(|e| e.to_string())?;
            IntervalSet::from_rational_strings(&s.enlarged, Ambient::Real).map_err(|e| e.to_string())?;
            Ok(())
        }
        _ => Err("unknown file".into()),
    }
}

/// Validates an archive directory: every file, plus the manifest's listing.
fn check_dir(dir: &Path, failures: &mut Vec<String>) -> Result<(), CliError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for p in &entries {
        if p.is_dir() {
            failures.push(format!("{}: unexpected directory", p.display()));
        } else if let Err(e) = check_file(p) {
            failures.push(format!("{}: {e}", p.display()));
        }
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    let Ok(text) = std::fs::read_to_string(&manifest_path) else {
        failures.push(format!("{}: missing", manifest_path.display()));
        return Ok(());
    };
    let Ok(m) = serde_json::from_str::<Manifest>(&text) else {
        return Ok(());
    };
    let listed = std::iter::once(&m.config)
        .chain(&m.parts)
        .chain(&m.derived)
        .chain(m.timing.as_ref());
    for name in listed {
        if !dir.join(name).is_file() {
            failures.push(format!("{}: listed in the manifest but missing", dir.join(name).display()));
        }
    }
    Ok(())
}

/// Returns one message per failing file; empty when all pass.
pub fn check_paths(paths: &[PathBuf]) -> Result<Vec<String>, CliError> {
    let mut failures = Vec::new();
    for p in paths {
        if p.is_dir() {
            check_dir(p, &mut failures)?;
        } else if p.is_file() {
            if let Err(e) = check_file(p) {
                failures.push(format!("{}: {e}", p.display()));
            }
        } else {
            return Err(CliError::Usage(format!("no such file or directory: {}", p.display())));
        }
    }
    Ok(failures)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_checks() {
        let cols = [Col::Int, Col::Float, Col::OptVerdict];
        assert!(check_csv("a,b,c\n1,2.5,\n3,inf,diverges\n", "a,b,c", &cols).is_ok());
        assert!(check_csv("a,b,c\n1.5,2,\n", "a,b,c", &cols).is_err());
        assert!(check_csv("a,b\n", "a,b,c", &cols).is_err());
        assert!(check_csv("a,b,c\n1,2\n", "a,b,c", &cols).is_err());
        assert!(numbered("members_t12.txt", "members_t", ".txt"));
        assert!(!numbered("members_tx.txt", "members_t", ".txt"));
    }
}
