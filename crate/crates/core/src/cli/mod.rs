//! The `pdpt` command line: campaign runs, catalog listing and field dumps.
//!
//! Exit codes: 0 when every check passed, 1 when a check failed or a run
//! could not finish, 2 for usage and configuration errors.

pub mod catalog;
pub mod config;
pub mod runner;
pub mod suite;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::io::FieldDump;
use config::{parse_manifest, CampaignManifest, UserCatalog};
use runner::{run_campaign, RunOptions};

/// Name accepted by `--config` for the bundled campaign.
pub const REFERENCE_SUITE: &str = "reference-suite";

const REFERENCE_SUITE_JSON: &str = include_str!("reference_suite.json");

#[derive(Parser, Debug)]
#[command(name = "pdpt", version, about = "Projective transformations of divergence-free positive symmetric tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a campaign and write reports.json and summary.csv.
    Run {
        /// Campaign file, or `reference-suite` for the bundled campaign.
        #[arg(long)]
        config: String,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Override the campaign seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of worker threads.
        #[arg(long)]
        workers: Option<usize>,
        /// Keep only checks whose `<experiment>/<check>` name contains this text.
        #[arg(long)]
        only: Option<String>,
    },
    /// List catalog entries and reference checks.
    List {
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
        /// Include user entries from this campaign file.
        #[arg(long)]
        config: Option<String>,
    },
    /// Print a field dump written by `run`.
    Dump {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = DumpFormat::Summary)]
        format: DumpFormat,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DumpFormat {
    Summary,
    Csv,
    Json,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn run(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

/// A reader closing the pipe early (`pdpt list | head`) ends the command
/// quietly with code 0.
impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::BrokenPipe => Self { code: 0, message: String::new() },
            _ => Self::run(e.to_string()),
        }
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Io(e) => e.into(),
            e => Self::run(e.to_string()),
        }
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut stdout = io::stdout().lock();
    let result = match cli.command {
        Command::Run { config, out, seed, workers, only } => {
            run(&config, RunOptions { out, seed, workers, only }, &mut stdout)
        }
        Command::List { json, config } => list(json, config.as_deref(), &mut stdout),
        Command::Dump { path, format } => dump(&path, format, &mut stdout),
    };
    let result = result.and_then(|code| stdout.flush().map(|_| code).map_err(Failure::from));
    match result {
        Ok(code) => code,
        Err(f) if f.code == 0 => 0,
        Err(f) => {
            eprintln!("pdpt: {}", f.message);
            f.code
        }
    }
}

fn load_manifest(config: &str) -> Result<CampaignManifest, Failure> {
    let (label, text) = if config == REFERENCE_SUITE {
        (config.to_string(), REFERENCE_SUITE_JSON.to_string())
    } else {
        let text = fs::read_to_string(config).map_err(|e| Failure::usage(format!("{config}: {e}")))?;
        (config.to_string(), text)
    };
    parse_manifest(&text).map_err(|e| Failure::usage(format!("{label}:{e}")))
}

fn run(config: &str, opts: RunOptions, out: &mut impl Write) -> Result<i32, Failure> {
    let manifest = load_manifest(config)?;
    if opts.workers == Some(0) {
        return Err(Failure::usage("--workers must be at least 1"));
    }
    let report = run_campaign(&manifest, &opts).map_err(|e| Failure::run(e.to_string()))?;
    let failures: Vec<_> = report.failures().collect();
    writeln!(
        out,
        "{} checks, {} passed, {} failed; reports in {}",
        report.records.len(),
        report.records.len() - failures.len(),
        failures.len(),
        opts.out.display()
    )?;
    if failures.is_empty() {
        return Ok(0);
    }
    let mut err = io::stderr().lock();
    for r in failures {
        let why = if r.message.is_empty() { String::new() } else { format!(": {}", r.message) };
        let _ = writeln!(err, "FAILED {}{why}", r.name);
    }
    Ok(1)
}

fn list(json: bool, config: Option<&str>, out: &mut impl Write) -> Result<i32, Failure> {
    let user = match config {
        Some(c) => load_manifest(c)?.catalog,
        None => UserCatalog::default(),
    };
    let checks = suite::registry();
    if json {
        let mut value = catalog::catalog_json(&user);
        value["checks"] = checks
            .iter()
            .map(|c| serde_json::json!({ "name": c.name, "module": c.module, "description": c.description }))
            .collect();
        writeln!(out, "{}", serde_json::to_string_pretty(&value).map_err(|e| Failure::run(e.to_string()))?)?;
    } else {
        write!(out, "{}", catalog::catalog_text(&user))?;
        writeln!(out, "reference checks")?;
        for c in checks {
            writeln!(out, "  {:<34} {:<13} {}", c.name, c.module, c.description)?;
        }
    }
    Ok(0)
}

fn dump(path: &PathBuf, format: DumpFormat, out: &mut impl Write) -> Result<i32, Failure> {
    let d = FieldDump::load(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    match format {
        DumpFormat::Csv => d.write_csv(&mut *out)?,
        DumpFormat::Json => {
            let value = serde_json::json!({
                "kind": d.kind.name(),
                "d": d.d,
                "lattice": d.lattice,
                "ncomp": d.ncomp,
                "data": d.data,
            });
            serde_json::to_writer_pretty(&mut *out, &value).map_err(io::Error::from)?;
            writeln!(out)?;
        }
        DumpFormat::Summary => {
            let shape = d.lattice.shape();
            writeln!(out, "kind       {}", d.kind.name())?;
            writeln!(out, "d          {}", d.d)?;
            writeln!(out, "shape      {shape:?}")?;
            for (k, a) in d.lattice.axes().iter().enumerate() {
                writeln!(out, "axis {k}     [{}, {}] x {}", a.lo, a.hi, a.n)?;
            }
            writeln!(out, "components {}", d.ncomp)?;
            for c in 0..d.ncomp {
                let (lo, hi) = d
                    .data
                    .iter()
                    .skip(c)
                    .step_by(d.ncomp)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
                writeln!(out, "  {c:>3}      min {lo:e}  max {hi:e}")?;
            }
        }
    }
    Ok(0)
}
