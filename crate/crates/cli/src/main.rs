//! `trainchain`: runs scenarios, compares them against a nonce-search
//! baseline and re-verifies published chain dumps.
//!
//! Exit codes: 0 success, 1 configuration or usage, 2 simulation,
//! 3 I/O, 4 verification failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trainchain_core::config::{parse_config, ConfigError, ScenarioConfig};
use trainchain_core::consensus::CycleRecord;
use trainchain_core::dump::{parse_dump, verify_dump, write_dump};
use trainchain_core::netsim::{
    compare_usefulness, run_baseline_pow, run_scenario, ComparisonReport, NetsimError, ScenarioOutcome,
    UsefulnessMetric,
};
use trainchain_core::PublicKey;

#[derive(Parser, Debug)]
#[command(name = "trainchain", version, about = "Proof-of-useful-training scenario runner and chain verifier")]
struct Cli {
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Re-validate a chain dump against the server's public key.
    Verify { dump: PathBuf, server_pubkey: String },
    /// Run a scenario and the nonce-search baseline at equal height.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Replaces the configured scenario seed.
    #[arg(long)]
    seed_override: Option<u64>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Simulation(String),
    Io(String),
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Simulation(_) => 2,
            CliError::Io(_) => 3,
            CliError::Verification(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Simulation(m) | CliError::Io(m) | CliError::Verification(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<NetsimError> for CliError {
    fn from(e: NetsimError) -> Self {
        match e {
            NetsimError::Config(c) => c.into(),
            other => CliError::Simulation(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

struct Output {
    dir: PathBuf,
    quiet: bool,
}

impl Output {
    fn prepare(dir: PathBuf, quiet: bool) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Output { dir, quiet })
    }

    fn write(&self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        if !self.quiet {
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn load(path: &Path, args: &RunArgs, quiet: bool) -> Result<(ScenarioConfig, Output), CliError> {
    let mut config = parse_config(path)?;
    if let Some(seed) = args.seed_override {
        config.seed = seed;
    }
    // A relative `[output] dir` is taken relative to the config file.
    let dir = match &args.out_dir {
        Some(d) => d.clone(),
        None => path.parent().unwrap_or(Path::new(".")).join(&config.output.dir),
    };
    let out = Output::prepare(dir, quiet)?;
    Ok((config, out))
}

fn audit_log(records: &[CycleRecord]) -> String {
    records.iter().map(|r| r.to_json_line() + "\n").collect()
}

/// One row per cycle; the last three columns are cumulative.
fn metrics_csv(config: &ScenarioConfig, outcome: &ScenarioOutcome) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["cycle_id".to_string(), "winner_id".to_string()];
    header.extend((0..config.miners.len()).map(|i| format!("weight_{i}")));
    header.extend(["chain_height", "hash_ops", "training_flops", "useful_fraction"].map(String::from));
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;

    let (mut height, mut hash_ops, mut flops) = (0u64, 0u64, 0u64);
    for record in &outcome.records {
        height += u64::from(record.is_committed());
        hash_ops += record.hash_ops;
        flops += record.training_flops;
        let metric = UsefulnessMetric::new(height, hash_ops, flops, config.usefulness.per_hash_op_cost);
        let mut row = vec![record.cycle_id.to_string(), record.winner_id.map(|w| w.to_string()).unwrap_or_default()];
        row.extend(
            (0..config.miners.len() as u32).map(|i| record.miner(i).map(|m| m.weight.to_string()).unwrap_or_default()),
        );
        row.extend([height.to_string(), hash_ops.to_string(), flops.to_string(), metric.useful_fraction.to_string()]);
        w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn comparison_json(report: &ComparisonReport) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text.into_bytes()
}

fn training_dump(outcome: &ScenarioOutcome) -> String {
    let signed: Vec<_> = outcome.records.iter().cloned().zip(outcome.record_signatures.iter().copied()).collect();
    write_dump(&outcome.chain, &outcome.target, &signed)
}

fn baseline_and_compare(
    config: &ScenarioConfig,
    outcome: &ScenarioOutcome,
    out: &Output,
) -> Result<ComparisonReport, CliError> {
    let baseline = run_baseline_pow(config, outcome.chain.height());
    out.write("baseline_chain.dump", write_dump(&baseline.chain, &baseline.target, &[]).as_bytes())?;
    if !baseline.failed_cycles.is_empty() {
        return Err(CliError::Simulation(format!(
            "baseline ran out of nonce attempts at heights {:?}",
            baseline.failed_cycles
        )));
    }
    let report = compare_usefulness(&outcome.metric, &baseline.metric)?;
    out.write("comparison.json", &comparison_json(&report))?;
    Ok(report)
}

fn print_summary(outcome: &ScenarioOutcome) {
    let committed = outcome.records.iter().filter(|r| r.is_committed()).count();
    println!(
        "cycles {} committed {} height {} hash_ops {} training_flops {} useful_fraction {}",
        outcome.records.len(),
        committed,
        outcome.chain.height(),
        outcome.metric.hash_ops,
        outcome.metric.training_flops,
        outcome.metric.useful_fraction
    );
    println!("server_pubkey {}", outcome.server_pubkey.to_hex());
}

fn print_comparison(report: &ComparisonReport) {
    println!(
        "blocks {} training useful_fraction {} baseline useful_fraction {} difference {}",
        report.blocks, report.training.useful_fraction, report.baseline.useful_fraction, report.difference
    );
}

fn cmd_run(path: &Path, args: &RunArgs, quiet: bool) -> Result<(), CliError> {
    let (config, out) = load(path, args, quiet)?;
    let outcome = run_scenario(&config)?;
    out.write("audit.jsonl", audit_log(&outcome.records).as_bytes())?;
    out.write("metrics.csv", &metrics_csv(&config, &outcome)?)?;
    out.write("chain.dump", training_dump(&outcome).as_bytes())?;
    out.write("server_pubkey.txt", format!("{}\n", outcome.server_pubkey.to_hex()).as_bytes())?;
    if !quiet {
        print_summary(&outcome);
    }
    if config.pow_baseline.enabled {
        let report = baseline_and_compare(&config, &outcome, &out)?;
        if !quiet {
            print_comparison(&report);
        }
    }
    Ok(())
}

fn cmd_compare(path: &Path, args: &RunArgs, quiet: bool) -> Result<(), CliError> {
    let (config, out) = load(path, args, quiet)?;
    let outcome = run_scenario(&config)?;
    let report = baseline_and_compare(&config, &outcome, &out)?;
    if !quiet {
        print_comparison(&report);
    }
    Ok(())
}

fn cmd_verify(path: &Path, pubkey_hex: &str, quiet: bool) -> Result<(), CliError> {
    let pubkey =
        PublicKey::from_hex(pubkey_hex.trim()).map_err(|e| CliError::Config(format!("server public key: {e}")))?;
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let malformed = |e: &dyn std::fmt::Display| CliError::Verification(format!("{}: {e}", path.display()));
    let text = std::str::from_utf8(&bytes).map_err(|e| malformed(&e))?;
    let dump = parse_dump(text).map_err(|e| malformed(&e))?;
    let report = verify_dump(&dump, &pubkey);
    if !quiet {
        for block in &report.blocks {
            match (block.is_ok(), &block.detail) {
                (true, _) => println!("block {} ok", block.height),
                (false, Some(detail)) => println!("block {} FAIL {detail}", block.height),
                (false, None) => println!(
                    "block {} FAIL linkage_ok={} merkle_ok={}",
                    block.height, block.chain.linkage_ok, block.chain.merkle_ok
                ),
            }
        }
    }
    match report.first_failure() {
        None => {
            if !quiet {
                println!("verified {} blocks", report.blocks.len());
            }
            Ok(())
        }
        Some(first) => Err(CliError::Verification(format!("first failing block: {}", first.height))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run { config, run } => cmd_run(config, run, cli.quiet),
        Command::Compare { config, run } => cmd_compare(config, run, cli.quiet),
        Command::Verify { dump, server_pubkey } => cmd_verify(dump, server_pubkey, cli.quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
