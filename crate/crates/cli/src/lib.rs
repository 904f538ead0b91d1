//! `kakeya-lab`: every certifier, solver and estimator of `kakeya-core`
//! behind one command line.
//!
//! Exit codes: 0 for a positive outcome (covered, found, optimal), 2 for a
//! valid but negative one (uncovered at resolution, heuristic search came
//! back empty, budget exhausted under `--require-optimal`), 1 for input
//! errors.

mod commands;
pub use commands::{CounterexampleReport, LiftFailure};
pub mod output;
mod plot;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use output::{embed_manifest, sidecar, write_atomic, Document, RunManifest, Table};

pub const THREADS_ENV: &str = "KAKEYA_LAB_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kakeya-lab", version, about = "Certify coverage by line configurations and solve discrete Kakeya problems")]
struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write a CSV table (with a `.manifest.json` sidecar).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Write an SVG plot with the manifest embedded.
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Zero of the perpendicular section (or tangent field) of a configuration.
    Zero {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        tol: Option<f64>,
        #[arg(long, default_value_t = kakeya_core::topo_zero::DEFAULT_MAX_DEPTH)]
        max_depth: u32,
        /// Restarts of the heuristic search in dimension 4 and up.
        #[arg(long, default_value_t = 64)]
        restarts: usize,
    },
    /// Certificate that a target lies on some line of a configuration in R^n.
    Cover {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long, allow_hyphen_values = true)]
        tol: Option<f64>,
    },
    /// Cover certificate in a Lie group; the target is given in group coordinates.
    LieCover {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = kakeya_core::liegroups::DEFAULT_KERNEL_GRID)]
        grid: usize,
    },
    /// Identity coverage for a configuration into C*.
    CylinderId {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = kakeya_core::liegroups::DEFAULT_KERNEL_GRID)]
        grid: usize,
    },
    /// Winding of a torus configuration and the resulting lift.
    TorusWind {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = kakeya_core::liegroups::DEFAULT_KERNEL_GRID)]
        grid: usize,
    },
    /// Sample the tangent-circle configuration inside and outside its disk.
    Counterexample {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Does the union of lines (or segments of length R) contain the target?
    Membership {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long = "R", default_value = "inf")]
        r: String,
        #[arg(long, allow_hyphen_values = true)]
        tol: Option<f64>,
    },
    /// Length needed to reach a target (--target) or area of an elongation (--R).
    Elongation {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        target: Option<String>,
        #[arg(long = "R")]
        r: Option<String>,
        #[arg(long, default_value_t = kakeya_core::euclid::DEFAULT_NEEDLE_SAMPLES)]
        samples: usize,
        /// Clip box `xmin,xmax,ymin,ymax`; required for R = inf.
        #[arg(long = "box", allow_hyphen_values = true)]
        clip: Option<String>,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Monte Carlo area of needle sets for one or more lengths.
    NeedleArea {
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated lengths; `inf` for full lines.
        #[arg(long = "R", default_value = "1")]
        r: String,
        #[arg(long, default_value_t = kakeya_core::euclid::DEFAULT_NEEDLE_SAMPLES)]
        samples: usize,
        #[arg(long = "box", allow_hyphen_values = true)]
        clip: Option<String>,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Smallest subset containing a left coset of every cyclic subgroup.
    DiscreteMin {
        /// Group name such as `Z3xZ3`, `D4`, `Q8`, or a JSON group file.
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 60_000)]
        budget_ms: u64,
        /// Exit 2 when the budget runs out before optimality is proved.
        #[arg(long)]
        require_optimal: bool,
        /// Use the brute-force search instead (order ≤ 24).
        #[arg(long)]
        oracle: bool,
    },
    /// Check a candidate set against every cyclic subgroup.
    DiscreteVerify {
        #[arg(long)]
        group: String,
        /// Comma-separated element indices.
        #[arg(long)]
        set: String,
    },
    /// Minimal ratios for a list of groups.
    RatioTable {
        /// Comma-separated group names; the built-in small-group suite when absent.
        #[arg(long)]
        group: Option<String>,
        #[arg(long, default_value_t = 60_000)]
        budget_ms: u64,
        #[arg(long)]
        require_optimal: bool,
    },
    /// Degree of a sphere map and whether it lifts to SO(3).
    Degree {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = kakeya_core::homog::DEFAULT_MESH_DEPTH)]
        depth: u32,
    },
    /// Orbit of a base point under a one-parameter rotation subgroup.
    QuotientPlot {
        #[arg(long, allow_hyphen_values = true)]
        axis: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0,0,1")]
        base: String,
        #[arg(long, default_value_t = kakeya_core::homog::DEFAULT_CURVE_SAMPLES)]
        samples: usize,
    },
    /// Lift a sphere map that misses a point to SO(3).
    Lift {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        omitted: String,
        #[arg(long, default_value_t = kakeya_core::homog::DEFAULT_MESH_DEPTH)]
        depth: u32,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Zero { .. } => "zero",
            Command::Cover { .. } => "cover",
            Command::LieCover { .. } => "lie-cover",
            Command::CylinderId { .. } => "cylinder-id",
            Command::TorusWind { .. } => "torus-wind",
            Command::Counterexample { .. } => "counterexample",
            Command::Membership { .. } => "membership",
            Command::Elongation { .. } => "elongation",
            Command::NeedleArea { .. } => "needle-area",
            Command::DiscreteMin { .. } => "discrete-min",
            Command::DiscreteVerify { .. } => "discrete-verify",
            Command::RatioTable { .. } => "ratio-table",
            Command::Degree { .. } => "degree",
            Command::QuotientPlot { .. } => "quotient-plot",
            Command::Lift { .. } => "lift",
        }
    }
}

/// What a subcommand produced.
pub(crate) struct Outcome {
    pub result: serde_json::Value,
    pub positive: bool,
    pub spec_hash: Option<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub table: Option<Table>,
    pub svg: Option<String>,
}

impl Outcome {
    pub fn new<T: Serialize>(result: &T, positive: bool) -> Result<Outcome, String> {
        Ok(Outcome {
            result: serde_json::to_value(result).map_err(|e| e.to_string())?,
            positive,
            spec_hash: None,
            tolerances: BTreeMap::new(),
            table: None,
            svg: None,
        })
    }

    pub fn hash(mut self, h: String) -> Self {
        self.spec_hash = Some(h);
        self
    }

    pub fn tol(mut self, name: &str, v: f64) -> Self {
        self.tolerances.insert(name.to_string(), v);
        self
    }
}

/// Options shared by every subcommand.
pub(crate) struct Ctx {
    pub seed: u64,
    pub want_table: bool,
    pub want_plot: bool,
}

/// Runs one invocation; `args[0]` is the program name.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    match execute(cli, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("{THREADS_ENV} must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be positive"));
    }
    #[cfg(feature = "parallel")]
    {
        // a second run in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

fn execute(cli: Cli, args: &[String]) -> Result<i32, String> {
    let started = Instant::now();
    let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
    let ctx = Ctx { seed: cli.seed, want_table: cli.csv.is_some(), want_plot: cli.plot.is_some() };
    let name = cli.command.name();
    let outcome = commands::dispatch(&cli.command, &ctx)?;
    if cli.csv.is_some() && outcome.table.is_none() {
        return Err(format!("{name} has no table output for --csv"));
    }
    if cli.plot.is_some() && outcome.svg.is_none() {
        return Err(format!("{name} has no plot output for --plot"));
    }

    let mut outputs = Vec::new();
    outputs.extend(cli.out.iter().map(|p| p.display().to_string()));
    outputs.extend(cli.csv.iter().map(|p| p.display().to_string()));
    outputs.extend(cli.plot.iter().map(|p| p.display().to_string()));
    let manifest = RunManifest {
        tool: "kakeya-lab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: kakeya_core::VERSION.into(),
        subcommand: name.into(),
        args: args.iter().skip(1).cloned().collect(),
        spec_hash: outcome.spec_hash.clone(),
        seed: Some(cli.seed),
        tolerances: outcome.tolerances.clone(),
        threads: threads(),
        started_unix_ms,
        wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
        outputs,
    };

    let io = |p: &PathBuf, e: std::io::Error| format!("cannot write {}: {e}", p.display());
    if let (Some(path), Some(table)) = (&cli.csv, &outcome.table) {
        write_atomic(path, &table.to_bytes()?).map_err(|e| io(path, e))?;
        let side = sidecar(path);
        let json = serde_json::to_vec_pretty(&manifest).map_err(|e| e.to_string())?;
        write_atomic(&side, &json).map_err(|e| io(&side, e))?;
    }
    if let (Some(path), Some(svg)) = (&cli.plot, &outcome.svg) {
        write_atomic(path, embed_manifest(svg, &manifest).as_bytes()).map_err(|e| io(path, e))?;
    }
    let doc = Document { manifest, result: outcome.result };
    let mut json = serde_json::to_vec_pretty(&doc).map_err(|e| e.to_string())?;
    json.push(b'\n');
    match &cli.out {
        Some(path) => write_atomic(path, &json).map_err(|e| io(path, e))?,
        None => print!("{}", String::from_utf8_lossy(&json)),
    }
    Ok(if outcome.positive { EXIT_OK } else { EXIT_NEGATIVE })
}
