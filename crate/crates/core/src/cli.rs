//! Command-line front end: `run`, `compare` and `cache-cdf`.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cache::{self, grid_points, grid_value, HitRateCdf, SeedResult};
use crate::config::Scenario;
use crate::engine::FsvScheme;
use crate::error::{ConfigError, Error};
use crate::metrics::QosReport;
use crate::sim::Simulation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "skyflow", version, about = "In-flight traffic forwarding simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one flight and write report.json / report.csv.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write every forwarding decision to trace.jsonl.
        #[arg(long)]
        trace: bool,
    },
    /// Simulate one flight under all three schemes and write compare.csv.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Minimal cache hit rate over many seeded flights; writes cdf.csv and cdf.json.
    CacheCdf {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of seeded flights per scheme.
        #[arg(long)]
        runs: Option<u32>,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario JSON file; unset keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Forwarding scheme: 1, 2 or 3.
    #[arg(long)]
    pub scheme: Option<u8>,
    /// Flight duration in seconds.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub hit_rate: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

impl CommonArgs {
    fn scenario(&self) -> Result<Scenario, Error> {
        let mut s = match &self.config {
            Some(path) => Scenario::load(path)?,
            None => Scenario::default(),
        };
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.scheme {
            s.scheme = v;
        }
        if let Some(v) = self.horizon {
            s.horizon_s = v;
        }
        if let Some(v) = self.hit_rate {
            s.hit_rate = v;
        }
        if let Some(v) = &self.out_dir {
            s.out_dir = v.to_string_lossy().into_owned();
        }
        s.validate()?;
        Ok(s)
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run { common, trace } => cmd_run(&common, trace),
        Command::Compare { common } => cmd_compare(&common),
        Command::CacheCdf { common, runs, workers } => cmd_cache_cdf(&common, runs, workers),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Error::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn report_json(report: &QosReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn cmd_run(args: &CommonArgs, trace: bool) -> Result<(), Error> {
    let scenario = args.scenario()?;
    let out = PathBuf::from(&scenario.out_dir);
    ensure_dir(&out)?;
    let mut sim = Simulation::new(&scenario)?;
    if trace {
        sim = sim.with_trace();
    }
    let report = sim.run_in_place();
    write_file(&out.join("report.json"), &report_json(&report))?;
    write_file(&out.join("report.csv"), &report.to_csv())?;
    if let Some(records) = sim.trace() {
        let mut lines = String::new();
        for r in records {
            lines.push_str(&serde_json::to_string(r)?);
            lines.push('\n');
        }
        write_file(&out.join("trace.jsonl"), &lines)?;
    }
    println!(
        "scheme {} seed {}: satisfied_all={} ({} events) -> {}",
        report.scheme,
        report.seed,
        report.satisfied_all,
        sim.dispatched(),
        out.display()
    );
    Ok(())
}

/// Runs every scheme on the scenario's seed.
pub fn compare(scenario: &Scenario) -> Result<Vec<QosReport>, ConfigError> {
    FsvScheme::ALL
        .iter()
        .map(|s| {
            crate::sim::run(&Scenario {
                scheme: s.id(),
                ..scenario.clone()
            })
        })
        .collect()
}

pub fn compare_csv(reports: &[QosReport]) -> String {
    let mut out = String::from(QosReport::csv_header());
    out.push('\n');
    for r in reports {
        for row in r.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

pub fn cmd_compare(args: &CommonArgs) -> Result<(), Error> {
    let scenario = args.scenario()?;
    let out = PathBuf::from(&scenario.out_dir);
    ensure_dir(&out)?;
    let reports = compare(&scenario)?;
    write_file(&out.join("compare.csv"), &compare_csv(&reports))?;
    for r in &reports {
        write_file(&out.join(format!("report_scheme{}.json", r.scheme)), &report_json(r))?;
        println!("scheme {}: satisfied_all={}", r.scheme, r.satisfied_all);
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    scenario: Scenario,
}

/// Scenario fields that do not change a sweep's results.
fn sweep_fingerprint(s: &Scenario) -> Scenario {
    Scenario {
        runs: 0,
        workers: 0,
        out_dir: String::new(),
        seed: 0,
        scheme: 1,
        hit_rate: 0.0,
        ..s.clone()
    }
}

/// Completed seeds from an existing checkpoint for the same scenario.
fn read_checkpoint(path: &Path, fingerprint: &Scenario) -> Vec<SeedResult> {
    let Ok(file) = File::open(path) else {
        return Vec::new();
    };
    let mut lines = BufReader::new(file).lines().map_while(Result::ok);
    let header: Option<CheckpointHeader> = lines.next().and_then(|l| serde_json::from_str(&l).ok());
    match header {
        Some(h) if h.scenario == *fingerprint => {
            // A torn final line from an interrupted write is skipped.
            lines.filter_map(|l| serde_json::from_str(&l).ok()).collect()
        }
        _ => {
            eprintln!("warning: {} belongs to another scenario; starting over", path.display());
            Vec::new()
        }
    }
}

#[derive(Debug, Serialize)]
struct CdfOutput<'a> {
    scheme: u8,
    runs: usize,
    unsatisfiable: usize,
    points: &'a [cache::CdfPoint],
    /// Fraction satisfied at every grid point, low to high.
    grid: Vec<cache::CdfPoint>,
    seeds: &'a [SeedResult],
}

pub fn cmd_cache_cdf(args: &CommonArgs, runs: Option<u32>, workers: Option<usize>) -> Result<(), Error> {
    let mut scenario = args.scenario()?;
    if let Some(r) = runs {
        scenario.runs = r;
    }
    if let Some(w) = workers {
        scenario.workers = w;
    }
    scenario.validate()?;
    let schemes: Vec<FsvScheme> = match args.scheme {
        Some(_) => vec![scenario.fsv_scheme()?],
        None => FsvScheme::ALL.to_vec(),
    };
    let out = PathBuf::from(&scenario.out_dir);
    ensure_dir(&out)?;

    let fingerprint = sweep_fingerprint(&scenario);
    let ck_path = out.join("cdf_checkpoint.jsonl");
    let done = read_checkpoint(&ck_path, &fingerprint);
    let mut ck_file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&ck_path)
        .map_err(|e| Error::io(&ck_path, e))?;
    if done.is_empty() {
        ck_file.set_len(0).map_err(|e| Error::io(&ck_path, e))?;
        let header = serde_json::to_string(&CheckpointHeader {
            scenario: fingerprint.clone(),
        })?;
        writeln!(ck_file, "{header}").map_err(|e| Error::io(&ck_path, e))?;
    }
    let ck_file = Mutex::new(ck_file);

    let seeds: Vec<u64> = (0..u64::from(scenario.runs)).map(|i| scenario.seed + i).collect();
    let n_grid = grid_points(scenario.grid_step)?;
    let mut csv = String::from(HitRateCdf::csv_header());
    csv.push('\n');
    let mut json = Vec::new();
    for scheme in schemes {
        let have: BTreeSet<u64> = done.iter().filter(|r| r.scheme == scheme.id()).map(|r| r.seed).collect();
        let pending: Vec<u64> = seeds.iter().copied().filter(|s| !have.contains(s)).collect();
        let fresh = cache::sweep(&scenario, &pending, scheme, scenario.workers, |r| {
            let line = serde_json::to_string(r).expect("result serializes");
            let mut f = ck_file.lock().expect("checkpoint lock");
            // Best effort: a lost line only means the seed is recomputed.
            let _ = writeln!(f, "{line}").and_then(|_| f.flush());
        })?;
        let mut results: Vec<SeedResult> = done
            .iter()
            .filter(|r| r.scheme == scheme.id() && seeds.contains(&r.seed))
            .copied()
            .chain(fresh)
            .collect();
        results.sort_by_key(|r| r.seed);
        results.dedup_by_key(|r| r.seed);
        let rates: Vec<_> = results.iter().map(|r| r.min_hit_rate).collect();
        let cdf = HitRateCdf::from_min_rates(scheme.id(), &rates);
        for row in cdf.csv_rows() {
            csv.push_str(&row);
            csv.push('\n');
        }
        let grid = (0..=n_grid)
            .map(|i| {
                let h = grid_value(i, n_grid);
                cache::CdfPoint {
                    hit_rate: h,
                    fraction: cdf.fraction_at(h),
                }
            })
            .collect();
        println!(
            "scheme {}: {} flights, {:.1}% satisfied at hit rate 0.9, {} unsatisfiable",
            scheme.id(),
            cdf.runs,
            100.0 * cdf.fraction_at(0.9),
            cdf.unsatisfiable
        );
        json.push(serde_json::to_value(CdfOutput {
            scheme: cdf.scheme,
            runs: cdf.runs,
            unsatisfiable: cdf.unsatisfiable,
            points: &cdf.points,
            grid,
            seeds: &results,
        })?);
    }
    write_file(&out.join("cdf.csv"), &csv)?;
    let mut text = serde_json::to_string_pretty(&json)?;
    text.push('\n');
    write_file(&out.join("cdf.json"), &text)?;
    Ok(())
}
