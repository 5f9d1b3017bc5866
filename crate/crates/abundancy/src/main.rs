use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use abundancy::config::{load_config, RunConfig};
use abundancy::factordb::expand_expression;
use abundancy::oracle::{FactorDbMode, FactorOracle, FactorPolicy};
use abundancy::presets::{self, ROWS};
use abundancy::report::{execute_and_report, exit_code, EventLog, ExecOptions};
use abundancy::verify::{self, Suite};
use abundancy_core::valuation::ceil_log_violation;
use abundancy_core::{EngineOptions, Factorizer, TierPolicy};
use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use serde_json::json;

const CONFIG_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "abundancy", version, about = "Branch-and-prune search for friends of 10 and related abundancy targets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run search configs and write events and a summary.
    Search(SearchArgs),
    /// Check v_p(x^{p−1} − 1) ≤ ⌈log_p x⌉ + delta for 1 < x ≤ p^max_power.
    Certify {
        #[arg(long)]
        prime: BigUint,
        #[arg(long)]
        max_power: u32,
        #[arg(long)]
        delta: u32,
    },
    /// Factor an integer or an expression such as 19531^59-1.
    Factor {
        n: String,
        #[arg(long, default_value_t = TierPolicy::default().trial_limit)]
        trial_limit: u64,
        #[arg(long, value_enum, default_value_t = FactorDbMode::Cache)]
        factordb: FactorDbMode,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Run verification suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = verify::DEFAULT_SEED)]
        seed: u64,
    },
    /// List preset rows, optionally writing their configs as JSON.
    Presets {
        #[arg(long)]
        emit: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        row: String,
    },
}

#[derive(Args)]
struct SearchArgs {
    /// JSON config file (repeatable).
    #[arg(long, required_unless_present = "preset")]
    config: Vec<PathBuf>,
    /// Preset row or group, e.g. table1:k8.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Factor cache (JSONL), shared by all runs.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, value_enum)]
    factordb: Option<FactorDbMode>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long)]
    include_long_runs: bool,
    /// Which terminal events are written to the events files.
    #[arg(long, value_enum, default_value_t = EventLog::All)]
    events: EventLog,
    /// Ignore the special prime (no SPECIAL_PRUNE, no early break).
    #[arg(long)]
    no_special_pruning: bool,
}

fn override_policy(policy: &mut FactorPolicy, cache: &Option<PathBuf>, mode: Option<FactorDbMode>) {
    if cache.is_some() {
        policy.cache_path = cache.clone();
    }
    if let Some(mode) = mode {
        policy.factordb = mode;
    }
}

fn load_runs(args: &SearchArgs) -> anyhow::Result<Vec<RunConfig>> {
    let mut runs = Vec::new();
    if let Some(row) = &args.preset {
        let mut policy = FactorPolicy::default();
        override_policy(&mut policy, &args.cache, args.factordb);
        let oracle = FactorOracle::new(policy.clone())?;
        runs = presets::preset_table1(row, &oracle, &policy)?;
    }
    for path in &args.config {
        let mut run = load_config(path).with_context(|| path.display().to_string())?;
        override_policy(&mut run.factor_policy, &args.cache, args.factordb);
        runs.push(run);
    }
    Ok(runs)
}

fn search(args: SearchArgs) -> ExitCode {
    let runs = match load_runs(&args) {
        Ok(runs) => runs,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let opts = ExecOptions {
        parallel: args.parallel.max(1),
        out: Some(args.out.clone()),
        include_long_runs: args.include_long_runs,
        event_log: args.events,
        engine: EngineOptions { special_pruning: !args.no_special_pruning },
        ..ExecOptions::default()
    };
    match execute_and_report(&runs, &opts) {
        Ok(reports) => {
            for r in &reports {
                println!("{}", r.line());
            }
            let skipped = runs.len() - reports.len();
            if skipped > 0 {
                println!("{skipped} long run(s) skipped; pass --include-long-runs to execute them");
            }
            println!("summary: {}", args.out.join("summary.json").display());
            ExitCode::from(exit_code(&reports) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CONFIG_ERROR)
        }
    }
}

fn certify(prime: BigUint, max_power: u32, delta: u32) -> ExitCode {
    match ceil_log_violation(&prime, max_power, delta) {
        Ok(violation) => {
            let certified = violation.is_none();
            let out = json!({
                "prime": prime.to_string(),
                "max_power": max_power,
                "delta": delta,
                "certified": certified,
                "violation": violation.map(|v| v.to_string()),
            });
            println!("{out}");
            ExitCode::from(if certified { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CONFIG_ERROR)
        }
    }
}

fn factor(n: &str, trial_limit: u64, factordb: FactorDbMode, cache: Option<PathBuf>) -> anyhow::Result<ExitCode> {
    let value = expand_expression(n).ok_or_else(|| anyhow!("cannot parse {n:?}"))?;
    if trial_limit < 2 {
        return Err(anyhow!("--trial-limit must be at least 2"));
    }
    let policy = FactorPolicy {
        tiers: TierPolicy { trial_limit, ..TierPolicy::default() },
        factordb,
        cache_path: cache,
        ..FactorPolicy::default()
    };
    let oracle = FactorOracle::new(policy)?;
    let fz = oracle.factor(&value);
    let mut record = serde_json::to_value(abundancy::cache::CacheRecord::from_factorization(&fz))?;
    record["probable"] = json!(fz.probable);
    if !fz.failures.is_empty() {
        record["failures"] = json!(fz.failures.iter().map(|f| format!("{}: {}", f.source.as_str(), f.message)).collect::<Vec<_>>());
    }
    println!("{record}");
    Ok(ExitCode::from(if fz.is_complete() { 0 } else { 2 }))
}

fn list_presets(row: &str, emit: Option<PathBuf>) -> anyhow::Result<ExitCode> {
    let Some(dir) = emit else {
        for r in ROWS {
            println!("table1:{:<22} {}{}", r.id, r.summary, if r.long_run { "  [long run]" } else { "" });
        }
        return Ok(ExitCode::SUCCESS);
    };
    let policy = FactorPolicy::default();
    let oracle = FactorOracle::new(policy.clone())?;
    fs::create_dir_all(&dir)?;
    for run in presets::preset_table1(row, &oracle, &policy)? {
        let stem: String = run.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
        let path = dir.join(format!("{stem}.json"));
        fs::write(&path, run.to_json() + "\n")?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Search(args) => Ok(search(args)),
        Command::Certify { prime, max_power, delta } => Ok(certify(prime, max_power, delta)),
        Command::Factor { n, trial_limit, factordb, cache } => factor(&n, trial_limit, factordb, cache),
        Command::Verify { suite, seed } => {
            let reports = verify::run(suite, seed);
            for r in &reports {
                println!("{}", r.line());
                for f in &r.failures {
                    println!("    {f}");
                }
            }
            Ok(ExitCode::from(if reports.iter().all(|r| r.passed()) { 0 } else { 1 }))
        }
        Command::Presets { emit, row } => list_presets(&row, emit),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(CONFIG_ERROR)
    })
}
