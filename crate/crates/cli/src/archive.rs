//! Run archives: a directory with the config snapshot, raw parts, derived
//! statistics and a manifest. `timing.json` is the only file allowed to
//! differ between repeated runs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::commands::{self, Derived};
use crate::config::RunConfig;
use crate::CliError;

pub const CONFIG_FILE: &str = "config.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DERIVED_FILE: &str = "derived.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: String,
    pub parts: Vec<String>,
    pub derived: Vec<String>,
    pub timing: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Archive {
    pub config: RunConfig,
    /// Raw outputs keyed by file name.
    pub parts: BTreeMap<String, String>,
    pub derived: Derived,
    /// Wall-clock seconds per phase; absent for recomputed archives.
    pub timing: Option<BTreeMap<String, f64>>,
}

impl Archive {
    pub fn new(config: RunConfig, parts: BTreeMap<String, String>, timing: Option<BTreeMap<String, f64>>) -> Result<Self, CliError> {
        let derived = commands::derive(&config, &parts)?;
        Ok(Archive {
            config,
            parts,
            derived,
            timing,
        })
    }

    pub fn manifest(&self) -> Manifest {
        let mut derived = vec![DERIVED_FILE.to_string()];
        derived.extend(self.derived.files.keys().cloned());
        Manifest {
            tool: "dioplab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.config.command.clone(),
            config: CONFIG_FILE.into(),
            parts: self.parts.keys().cloned().collect(),
            derived,
            timing: self.timing.as_ref().map(|_| TIMING_FILE.to_string()),
        }
    }

    pub fn derived_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.derived.value).expect("derived values serialize");
        s.push('\n');
        s
    }

    pub fn exit_code(&self) -> i32 {
        self.derived.exit
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(CONFIG_FILE), self.config.snapshot())?;
        for (name, text) in self.parts.iter().chain(&self.derived.files) {
            std::fs::write(dir.join(name), text)?;
        }
        std::fs::write(dir.join(DERIVED_FILE), self.derived_text())?;
        let mut m = serde_json::to_string_pretty(&self.manifest())?;
        m.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), m)?;
        if let Some(t) = &self.timing {
            let mut s = serde_json::to_string_pretty(t)?;
            s.push('\n');
            std::fs::write(dir.join(TIMING_FILE), s)?;
        }
        Ok(())
    }

    /// Rebuilds an archive from its config and raw parts only.
    pub fn reload(dir: &Path) -> Result<Self, CliError> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.join(name).display())))
        };
        let config = RunConfig::from_snapshot(&read(CONFIG_FILE)?)?;
        let manifest: Manifest = serde_json::from_str(&read(MANIFEST_FILE)?)?;
        let mut parts = BTreeMap::new();
        for name in &manifest.parts {
            if name.contains('/') || name.contains("..") {
                return Err(CliError::Usage(format!("bad part name `{name}` in manifest")));
            }
            parts.insert(name.clone(), read(name)?);
        }
        Archive::new(config, parts, None)
    }

    /// Checks that the stored derived files equal the recomputed ones.
    pub fn verify_recompute(&self, dir: &Path) -> Result<(), CliError> {
        let stored = std::fs::read_to_string(dir.join(DERIVED_FILE))?;
        if stored != self.derived_text() {
            return Err(CliError::Violation(format!(
                "recomputed {DERIVED_FILE} differs from the archived one in {}",
                dir.display()
            )));
        }
        for (name, text) in &self.derived.files {
            if std::fs::read_to_string(dir.join(name))? != *text {
                return Err(CliError::Violation(format!("recomputed {name} differs from the archived one")));
            }
        }
        Ok(())
    }
}
