//! Batch front end: configuration, run archives and report emission.

pub mod archive;
pub mod commands;
pub mod config;
pub mod schema;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dioplab::LabError;

pub use archive::Archive;
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("invariant violated: {0}")]
    Violation(String),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 1 invariant violation, 2 usage or configuration,
    /// 3 ambiguous verdict, 4 budget exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Violation(_) => 1,
            CliError::Lab(e) => match e {
                LabError::Ambiguous(_) => 3,
                LabError::Budget { .. } => 4,
                LabError::Convergence(_) | LabError::LowAcceptance { .. } => 1,
                LabError::Domain(_) | LabError::Precondition(_) | LabError::Parse(_) | LabError::Io(_) => 2,
            },
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("malformed JSON: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "dioplab", version, about = "Experiments on integer polynomials with small values")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the members of dyadic blocks and write their census.
    Enumerate(RunArgs),
    /// Counts and discriminant sums of dyadic blocks.
    Census(RunArgs),
    /// Cover statistics of the per-block sublevel sets.
    Cover(RunArgs),
    /// The union B_n(Q, eps) and its measure.
    BSet(RunArgs),
    /// Run one lemma harness.
    VerifyLemma(LemmaArgs),
    /// Series verdicts over a battery.
    Series(RunArgs),
    /// Bracket the critical exponent of the cover sums.
    EstimateDimension(RunArgs),
    /// Validate archive files against their schemas.
    SchemaCheck(SchemaArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any configuration key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long = "t-range")]
    t_range: Option<String>,
    #[arg(long = "Q")]
    q: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    budget: Option<String>,
    /// Archive directory to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute derived statistics from an existing archive.
    #[arg(long = "from-archive")]
    from_archive: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LemmaArgs {
    /// Lemma id: L2.1 ... L2.6, L3.measure, L3.2, L5.1.
    lemma: Option<String>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct SchemaArgs {
    /// Archive directories or individual files.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>, CliError> {
        let mut out = Vec::new();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{s}`")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        let flags = [
            ("n", &self.n),
            ("lambda", &self.lambda),
            ("c", &self.c),
            ("kind", &self.kind),
            ("t", &self.t),
            ("t_range", &self.t_range),
            ("Q", &self.q),
            ("eps", &self.eps),
            ("psi", &self.psi),
            ("g", &self.g),
            ("rule", &self.rule),
            ("mode", &self.mode),
            ("seed", &self.seed),
            ("jobs", &self.jobs),
            ("budget", &self.budget),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                out.push((k.to_string(), v.replace("..=", "..")));
            }
        }
        Ok(out)
    }
}

fn set_jobs(cfg: &RunConfig) -> Result<(), CliError> {
    let jobs: usize = cfg.get("jobs")?;
    // The global pool can only be built once per process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    Ok(())
}

fn run_command(name: &str, args: &RunArgs, lemma: Option<&str>) -> Result<i32, CliError> {
    let archive = match &args.from_archive {
        Some(dir) => {
            let a = Archive::reload(dir)?;
            if a.config.command != name {
                return Err(CliError::Usage(format!(
                    "archive holds a `{}` run, not `{name}`",
                    a.config.command
                )));
            }
            a.verify_recompute(dir)?;
            a
        }
        None => {
            let mut overrides = args.overrides()?;
            if let Some(id) = lemma {
                overrides.push(("lemma".into(), id.to_string()));
            }
            let cfg = RunConfig::resolve(name, args.config.as_deref(), &overrides)?;
            set_jobs(&cfg)?;
            commands::execute(cfg)?
        }
    };
    if let Some(out) = &args.out {
        archive.write(out)?;
    }
    print!("{}", archive.derived_text());
    Ok(archive.exit_code())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Enumerate(a) => run_command("enumerate", a, None),
        Command::Census(a) => run_command("census", a, None),
        Command::Cover(a) => run_command("cover", a, None),
        Command::BSet(a) => run_command("b-set", a, None),
        Command::VerifyLemma(a) => run_command("verify-lemma", &a.run, a.lemma.as_deref()),
        Command::Series(a) => run_command("series", a, None),
        Command::EstimateDimension(a) => run_command("estimate-dimension", a, None),
        Command::SchemaCheck(a) => schema::check_paths(&a.paths).map(|failures| {
            for f in &failures {
                eprintln!("{f}");
            }
            i32::from(!failures.is_empty())
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("dioplab: {e}");
            e.exit_code()
        }
    }
}
