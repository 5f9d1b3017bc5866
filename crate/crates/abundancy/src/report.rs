//! Running configs and writing their results.
//!
//! Each run writes `<out>/<run>.events.jsonl` with one line per terminal
//! event in `branch_id` order, and the batch writes `<out>/summary.json`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use abundancy_core::arith::format_rational;
use abundancy_core::{Engine, EngineOptions, EventKind, SearchStats, TerminalEvent};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::CacheError;
use crate::config::RunConfig;
use crate::oracle::{FactorOracle, FactorPolicy};
use crate::parallel::explore;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("{name}: {message}")]
    Config { name: String, message: String },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnRecord {
    pub p: String,
    pub kind: String,
    pub e: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffRecord {
    pub p: String,
    pub b: u32,
}

/// One line of an events file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub branch_id: Vec<u32>,
    pub kind: String,
    pub s_on: Vec<OnRecord>,
    pub s_off: Vec<OffRecord>,
    #[serde(rename = "P")]
    pub floor: String,
    #[serde(rename = "M")]
    pub max_ratio: String,
    #[serde(rename = "m")]
    pub min_ratio: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl EventRecord {
    pub fn new(e: &TerminalEvent) -> Self {
        EventRecord {
            branch_id: e.state.branch_id.clone(),
            kind: e.kind.as_str().into(),
            s_on: e
                .state
                .s_on
                .iter()
                .map(|o| OnRecord { p: o.p.to_string(), kind: o.kind.as_str().into(), e: o.e })
                .collect(),
            s_off: e.state.s_off.iter().map(|o| OffRecord { p: o.p.to_string(), b: o.b }).collect(),
            floor: e.state.floor.to_string(),
            max_ratio: format_rational(&e.ratios.max),
            min_ratio: format_rational(&e.ratios.min),
            detail: e.detail.clone(),
        }
    }

    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("serialisable");
        line.push('\n');
        line
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub run_id: String,
    pub candidate_count: u64,
    pub no_upper_bound_count: u64,
    pub inconclusive_count: u64,
    pub event_counts: BTreeMap<String, u64>,
    pub branches_visited: u64,
    /// Wall-clock seconds.
    pub elapsed: f64,
    /// Process CPU seconds (user + system) spent while the run was active.
    pub cpu_seconds: f64,
    pub events_path: Option<PathBuf>,
}

impl SearchReport {
    fn new(run_id: String, stats: &SearchStats, elapsed: f64, cpu_seconds: f64, events_path: Option<PathBuf>) -> Self {
        SearchReport {
            run_id,
            candidate_count: stats.candidates(),
            no_upper_bound_count: stats.no_upper_bound(),
            inconclusive_count: stats.inconclusive(),
            event_counts: EventKind::ALL.iter().map(|k| (k.as_str().to_string(), stats.count(*k))).collect(),
            branches_visited: stats.branches,
            elapsed,
            cpu_seconds,
            events_path,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.candidate_count == 0 && self.no_upper_bound_count == 0 && self.inconclusive_count == 0
    }

    pub fn line(&self) -> String {
        format!(
            "{}: candidates {} no-upper-bound {} inconclusive {} branches {} ({:.2} s wall, {:.2} s cpu)",
            self.run_id,
            self.candidate_count,
            self.no_upper_bound_count,
            self.inconclusive_count,
            self.branches_visited,
            self.elapsed,
            self.cpu_seconds
        )
    }
}

/// Process exit status for a batch: 2 if any run was inconclusive, else 1
/// if any run had candidates or no-upper-bound events, else 0.
pub fn exit_code(reports: &[SearchReport]) -> i32 {
    if reports.iter().any(|r| r.inconclusive_count > 0) {
        2
    } else if reports.iter().any(|r| r.candidate_count > 0 || r.no_upper_bound_count > 0) {
        1
    } else {
        0
    }
}

/// Which events go to the events file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum EventLog {
    /// Every terminal event.
    #[default]
    All,
    /// CANDIDATE, NO_UPPER_BOUND and INCONCLUSIVE only.
    Open,
}

impl EventLog {
    fn keeps(self, e: &TerminalEvent) -> bool {
        match self {
            EventLog::All => true,
            EventLog::Open => e.kind.is_open(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecOptions {
    /// Worker threads; 1 walks each tree sequentially.
    pub parallel: usize,
    pub out: Option<PathBuf>,
    pub include_long_runs: bool,
    pub event_log: EventLog,
    /// Depth below which subtrees are walked sequentially by one worker.
    pub split_depth: u32,
    pub engine: EngineOptions,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            parallel: 1,
            out: None,
            include_long_runs: false,
            event_log: EventLog::All,
            split_depth: 4,
            engine: EngineOptions::default(),
        }
    }
}

/// Outcome of one run, events included.
pub struct RunOutcome {
    pub report: SearchReport,
    pub events: Vec<TerminalEvent>,
}

/// CPU seconds used by this process so far.
pub fn process_cpu_seconds() -> f64 {
    let mut usage = std::mem::MaybeUninit::<libc::rusage>::zeroed();
    // SAFETY: getrusage fills the struct it is given.
    let rc = unsafe { libc::getrusage(libc::RUSAGE_SELF, usage.as_mut_ptr()) };
    if rc != 0 {
        return 0.0;
    }
    // SAFETY: rc == 0 means the struct was written.
    let usage = unsafe { usage.assume_init() };
    let secs = |t: libc::timeval| t.tv_sec as f64 + t.tv_usec as f64 / 1e6;
    secs(usage.ru_utime) + secs(usage.ru_stime)
}

fn file_stem(run_id: &str) -> String {
    run_id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn write_events(path: &Path, events: &[TerminalEvent]) -> Result<(), ReportError> {
    let io = |source| ReportError::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for e in events {
        w.write_all(EventRecord::new(e).to_line().as_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Runs one config with the given oracle. Sequential unless `parallel > 1`,
/// in which case the caller must be inside a rayon pool.
pub fn run_one(cfg: &RunConfig, oracle: &FactorOracle, opts: &ExecOptions) -> Result<RunOutcome, ReportError> {
    let engine = Engine::new(&cfg.search, oracle)
        .map_err(|e| ReportError::Config { name: cfg.name.clone(), message: e.to_string() })?
        .with_options(opts.engine);
    let start = Instant::now();
    let cpu = process_cpu_seconds();
    let keep = |e: &TerminalEvent| opts.event_log.keeps(e);
    let (events, stats) = if opts.parallel > 1 {
        let walk = explore(&engine, engine.root(), opts.split_depth, &keep);
        (walk.events, walk.stats)
    } else {
        let mut events = Vec::new();
        let stats = engine.run(|e| {
            if keep(&e) {
                events.push(e)
            }
        });
        (events, stats)
    };
    let elapsed = start.elapsed().as_secs_f64();
    let cpu = process_cpu_seconds() - cpu;
    let events_path = match &opts.out {
        Some(dir) => {
            let path = dir.join(format!("{}.events.jsonl", file_stem(&cfg.name)));
            write_events(&path, &events)?;
            Some(path)
        }
        None => None,
    };
    let report = SearchReport::new(cfg.name.clone(), &stats, elapsed, cpu, events_path);
    log::info!("{}", report.line());
    Ok(RunOutcome { report, events })
}

/// One oracle per distinct factor policy, so runs sharing a policy share a
/// cache.
pub struct OraclePool {
    oracles: Vec<(FactorPolicy, Arc<FactorOracle>)>,
}

impl OraclePool {
    pub fn new() -> Self {
        OraclePool { oracles: Vec::new() }
    }

    pub fn get(&mut self, policy: &FactorPolicy) -> Result<Arc<FactorOracle>, ReportError> {
        if let Some((_, o)) = self.oracles.iter().find(|(p, _)| p == policy) {
            return Ok(o.clone());
        }
        let oracle = Arc::new(FactorOracle::new(policy.clone())?);
        self.oracles.push((policy.clone(), oracle.clone()));
        Ok(oracle)
    }
}

impl Default for OraclePool {
    fn default() -> Self {
        Self::new()
    }
}

/// Runs every config (long runs only when requested), writes events and
/// `summary.json` under `opts.out`, and returns the reports in input order.
pub fn execute_and_report(cfgs: &[RunConfig], opts: &ExecOptions) -> Result<Vec<SearchReport>, ReportError> {
    let mut pool = OraclePool::new();
    execute_with(cfgs, opts, &mut pool)
}

pub fn execute_with(cfgs: &[RunConfig], opts: &ExecOptions, pool: &mut OraclePool) -> Result<Vec<SearchReport>, ReportError> {
    if let Some(dir) = &opts.out {
        fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.clone(), source })?;
    }
    let selected: Vec<&RunConfig> = cfgs
        .iter()
        .filter(|c| {
            if c.long_run && !opts.include_long_runs {
                log::warn!("{}: long run skipped (pass --include-long-runs)", c.name);
                false
            } else {
                true
            }
        })
        .collect();
    let mut jobs = Vec::with_capacity(selected.len());
    for cfg in selected {
        jobs.push((cfg, pool.get(&cfg.factor_policy)?));
    }
    let reports: Vec<SearchReport> = if opts.parallel > 1 {
        let workers = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.parallel)
            .build()
            .map_err(|e| ReportError::Pool(e.to_string()))?;
        workers.install(|| {
            jobs.par_iter().map(|(cfg, oracle)| run_one(cfg, oracle, opts).map(|o| o.report)).collect::<Result<_, _>>()
        })?
    } else {
        jobs.iter().map(|(cfg, oracle)| run_one(cfg, oracle, opts).map(|o| o.report)).collect::<Result<_, _>>()?
    };
    if let Some(dir) = &opts.out {
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&reports).expect("serialisable");
        fs::write(&path, text + "\n").map_err(|source| ReportError::Io { path, source })?;
    }
    Ok(reports)
}
