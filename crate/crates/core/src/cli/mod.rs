//! The `lmcf` scenario runner.
//!
//! Every command builds its artifacts in memory, then writes them together
//! with a manifest of SHA-256 checksums. With `--check` nothing is written:
//! the artifacts are recomputed and compared against the existing manifest.

pub mod commands;
pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::LmcfError;
pub use config::{Horizon, ModelConfig, OutputKind, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Flow,
    Polygon,
    Blowup,
    Verify,
}

#[derive(Debug, Parser)]
#[command(
    name = "lmcf",
    version,
    about = "Lagrangian mean curvature flow from moment maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Integrate the flow and export trajectories.
    Flow(RunArgs),
    /// Export the moment polygon of an ALE model.
    Polygon(RunArgs),
    /// Singular schedule, blow-up weights and rescaled convergence series.
    Blowup(RunArgs),
    /// Run the invariant checks relevant to the model.
    Verify(RunArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Scenario JSON (a single object or an array of scenarios).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the `seed` field of every scenario.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Recompute and compare against the existing manifest without writing.
    #[arg(long)]
    pub check: bool,
}

/// A file produced by a command, relative to the scenario directory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: &str, bytes: impl Into<Vec<u8>>) -> Self {
        Self {
            name: name.into(),
            bytes: bytes.into(),
        }
    }

    pub fn json<T: Serialize>(name: &str, value: &T) -> Self {
        let mut s = serde_json::to_string_pretty(value).expect("serializable report");
        s.push('\n');
        Self::new(name, s)
    }
}

/// Artifacts of one scenario, plus the invariants it violated (verify only).
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub violated: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub index: usize,
    pub dir: String,
    pub config: serde_json::Value,
    pub status: String,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub versions: BTreeMap<String, String>,
    pub scenarios: Vec<ScenarioEntry>,
    pub files: Vec<FileEntry>,
    pub wall_ms: f64,
}

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

enum ScenarioResult {
    Ok(Outcome),
    Violated(Outcome),
    Runtime(LmcfError),
    Config(LmcfError),
}

fn run_scenario(cmd: Command, cfg: &ScenarioConfig) -> ScenarioResult {
    let r = match cmd {
        Command::Flow => commands::flow(cfg),
        Command::Polygon => commands::polygon(cfg),
        Command::Blowup => commands::blowup(cfg),
        Command::Verify => commands::verify(cfg),
    };
    match r {
        Ok(o) if o.violated.is_empty() => ScenarioResult::Ok(o),
        Ok(o) => ScenarioResult::Violated(o),
        Err(e @ LmcfError::Config { .. }) => ScenarioResult::Config(e),
        Err(e) => ScenarioResult::Runtime(e),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("LMCF_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("LMCF_THREADS: expected a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err("LMCF_THREADS: must be at least 1".into());
    }
    // A second call in the same process (tests) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)
}

/// Runs one command and returns the process exit code.
pub fn run(cmd: Command, args: &RunArgs) -> i32 {
    let started = Instant::now();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_CONFIG;
    }
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    let mut scenarios = match ScenarioConfig::parse_document(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = args.seed {
        for s in &mut scenarios {
            s.seed = seed;
        }
    }
    let multi = scenarios.len() > 1;
    let dir_of = |i: usize| {
        if multi {
            format!("scenario_{i:03}")
        } else {
            String::new()
        }
    };

    // Each scenario is computed by one worker; files are written after the join.
    let results: Vec<(ScenarioResult, f64)> = scenarios
        .par_iter()
        .map(|cfg| {
            let t0 = Instant::now();
            let r = run_scenario(cmd, cfg);
            (r, t0.elapsed().as_secs_f64() * 1e3)
        })
        .collect();

    let mut code = EXIT_OK;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut entries = Vec::new();
    for (i, ((result, ms), cfg)) in results.into_iter().zip(&scenarios).enumerate() {
        let dir = dir_of(i);
        let rel = |name: &str| {
            if dir.is_empty() {
                name.to_string()
            } else {
                format!("{dir}/{name}")
            }
        };
        let status = match result {
            ScenarioResult::Ok(o) => {
                files.extend(o.artifacts.into_iter().map(|a| (rel(&a.name), a.bytes)));
                "ok".to_string()
            }
            ScenarioResult::Violated(o) => {
                eprintln!(
                    "scenario {i}: violated invariants: {}",
                    o.violated.join(", ")
                );
                files.extend(o.artifacts.into_iter().map(|a| (rel(&a.name), a.bytes)));
                if code == EXIT_OK {
                    code = EXIT_VERIFY;
                }
                format!("violated: {}", o.violated.join(", "))
            }
            ScenarioResult::Config(e) => {
                eprintln!("error: scenario {i}: {e}");
                code = EXIT_CONFIG;
                format!("config error: {e}")
            }
            ScenarioResult::Runtime(e) => {
                eprintln!("error: scenario {i}: {e}");
                let diag = format!(
                    "command: {cmd:?}\nscenario: {i}\nerror: {e}\nconfig: {}\n",
                    serde_json::to_string(cfg).unwrap_or_default()
                );
                files.push((rel("diagnostics.txt"), diag.into_bytes()));
                if code != EXIT_CONFIG {
                    code = EXIT_RUNTIME;
                }
                format!("runtime error: {e}")
            }
        };
        entries.push(ScenarioEntry {
            index: i,
            dir,
            config: serde_json::to_value(cfg).unwrap_or_default(),
            status,
            wall_ms: ms,
        });
    }
    if code == EXIT_CONFIG {
        return code;
    }

    let mut seen = std::collections::BTreeSet::new();
    for (p, _) in &files {
        assert!(seen.insert(p.clone()), "artifact {p} produced twice");
    }
    let file_entries: Vec<FileEntry> = files
        .iter()
        .map(|(p, b)| FileEntry {
            path: p.clone(),
            sha256: sha256_hex(b),
            bytes: b.len(),
        })
        .collect();

    if args.check {
        return match check_against_manifest(&args.out, &file_entries) {
            Ok(()) => {
                println!("check: {} files match the manifest", file_entries.len());
                code
            }
            Err(problems) => {
                for p in &problems {
                    eprintln!("check: {p}");
                }
                if code == EXIT_RUNTIME {
                    code
                } else {
                    EXIT_VERIFY
                }
            }
        };
    }

    for (p, b) in &files {
        if let Err(e) = write_file(&args.out.join(p), b) {
            eprintln!("error: writing {p}: {e}");
            return EXIT_RUNTIME;
        }
    }
    let mut versions = BTreeMap::new();
    versions.insert("lmcf".to_string(), env!("CARGO_PKG_VERSION").to_string());
    versions.insert("manifest_format".to_string(), "1".to_string());
    let manifest = RunManifest {
        command: format!("{cmd:?}").to_lowercase(),
        versions,
        scenarios: entries,
        files: file_entries,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    let m = Artifact::json(MANIFEST, &manifest);
    if let Err(e) = write_file(&args.out.join(MANIFEST), &m.bytes) {
        eprintln!("error: writing manifest: {e}");
        return EXIT_RUNTIME;
    }
    code
}

/// Compares recomputed artifacts with both the manifest and the files on disk.
pub fn check_against_manifest(out: &Path, produced: &[FileEntry]) -> Result<(), Vec<String>> {
    let text = fs::read_to_string(out.join(MANIFEST))
        .map_err(|e| vec![format!("cannot read manifest: {e}")])?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| vec![format!("malformed manifest: {e}")])?;
    let listed: BTreeMap<&str, &FileEntry> = manifest
        .files
        .iter()
        .map(|f| (f.path.as_str(), f))
        .collect();
    let mut problems = Vec::new();
    for f in produced {
        match listed.get(f.path.as_str()) {
            None => problems.push(format!("{} is not in the manifest", f.path)),
            Some(m) if m.sha256 != f.sha256 => {
                problems.push(format!("{} differs from the recorded checksum", f.path))
            }
            Some(_) => {}
        }
    }
    for m in &manifest.files {
        if !produced.iter().any(|f| f.path == m.path) {
            problems.push(format!("{} is listed but was not produced", m.path));
        }
        match fs::read(out.join(&m.path)) {
            Ok(b) if sha256_hex(&b) == m.sha256 => {}
            Ok(_) => problems.push(format!("{} on disk does not match its checksum", m.path)),
            Err(e) => problems.push(format!("{}: {e}", m.path)),
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems)
    }
}

/// Entry point of the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match &cli.command {
        CliCommand::Flow(a) => run(Command::Flow, a),
        CliCommand::Polygon(a) => run(Command::Polygon, a),
        CliCommand::Blowup(a) => run(Command::Blowup, a),
        CliCommand::Verify(a) => run(Command::Verify, a),
    }
}
