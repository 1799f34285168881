//! `veriq`: command-line front end for outsourced-query verification.
//!
//! Subcommands: gen-data, sign, query, verify, alpha, simulate, roc.
//! All stochastic subcommands take an explicit seed; identical flags and
//! seeds produce byte-identical output files regardless of `--workers`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use veriq_core::{
    alpha_equalizer_two_cloud, alpha_practical_two_cloud, alpha_threshold_single_cloud,
    alpha_threshold_two_cloud, archetype_queries, check_rationality, default_cheater_strategies,
    default_epsilon_grid, default_k_list, draw_sketch, eval_exact, gen_census_like,
    local_verify_aggregate, read_csv_path, read_signed_csv_path, roc_auc,
    roc_sweep, run_single_cloud, run_two_cloud, sign_relation, write_csv, write_roc_csv,
    write_signed_csv, EpsilonPolicy, GameConfig, GameForm, Query, RocPoint, ServerStrategy,
    SignedRelation, SimRun, SingleCloudVerifier, TwoCloudContract, TwoCloudMode, Verdict,
};

/// Outsourced-query verification toolkit: signed data, sketch checks,
/// incentive analysis, and detection-rate sweeps.
#[derive(Parser)]
#[command(name = "veriq", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic census-like relation as plain CSV.
    GenData {
        /// Number of rows to generate.
        #[arg(long)]
        rows: u64,
        /// RNG seed (mandatory: no wall-clock entropy).
        #[arg(long)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sign a plain CSV, producing a MAC-per-tuple signed CSV.
    Sign {
        /// Input plain CSV.
        #[arg(long)]
        data: PathBuf,
        /// MAC key (UTF-8).
        #[arg(long)]
        key: String,
        /// Output signed CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a query exactly against a signed relation.
    Query {
        /// Signed CSV produced by `sign`.
        #[arg(long)]
        data: PathBuf,
        /// MAC key; every tuple is authenticated before evaluation.
        #[arg(long)]
        key: String,
        /// JSON file holding one query.
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Check a claimed aggregate against a fresh owner sketch.
    Verify {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long)]
        query: PathBuf,
        /// The server's claimed aggregate value.
        #[arg(long)]
        claim: f64,
        /// Sketch size.
        #[arg(long, default_value_t = 1000)]
        k: usize,
        /// Sketch seed.
        #[arg(long)]
        seed: u64,
        /// Relative acceptance band around the sketch estimate.
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long)]
        json: bool,
    },
    /// Print the deterrence threshold and rationality report for a game config.
    Alpha(AlphaArgs),
    /// Run a seeded game simulation described by an experiment config.
    Simulate {
        /// Experiment config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Summary JSON output path.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's round count.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Sweep detection rates over queries, sketch sizes, and cheater
    /// strategies; write the grid as CSV.
    Roc {
        /// Experiment config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's trials-per-cell.
        #[arg(long)]
        trials: Option<usize>,
        /// Thread count (default: env VERIQ_WORKERS, then all cores).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct AlphaArgs {
    /// Which game form to analyze.
    #[arg(value_enum)]
    form: AlphaForm,
    /// Game config JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlphaForm {
    /// One server; the owner verifies with probability alpha.
    Single,
    /// Two servers; the owner duplicates the query with probability alpha.
    Two,
}

/// Contract in force for `simulate`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ContractSelector {
    SingleCloud,
    TwoCloudFineBoth,
    TwoCloudAudit { audit_reimbursed: bool },
}

/// How escalation/mismatch is decided during simulation: `stated` draws it
/// from the config's error rates (the analytic model); `real` runs the full
/// sketch/audit pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SimMode {
    Stated,
    Real,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    /// Signed relation CSV; when absent, `synthetic_rows` rows are generated
    /// and signed with `key`.
    #[serde(default)]
    data: Option<PathBuf>,
    #[serde(default)]
    synthetic_rows: Option<u64>,
    /// MAC key (UTF-8) for loading or producing signed data.
    #[serde(default = "default_key")]
    key: String,
    /// JSON file with a list of {"id", "query"} entries; the built-in
    /// archetype set when absent.
    #[serde(default)]
    queries: Option<PathBuf>,
    game: GameConfig,
    #[serde(default)]
    epsilon_policy: Option<EpsilonPolicy>,
    #[serde(default)]
    strategies: Option<Vec<ServerStrategy>>,
    #[serde(default)]
    k_grid: Option<Vec<usize>>,
    #[serde(default)]
    epsilon_grid: Option<Vec<f64>>,
    #[serde(default)]
    trials: Option<usize>,
    #[serde(default)]
    rounds: Option<u64>,
    seed: u64,
    contract: ContractSelector,
    #[serde(default = "default_mode")]
    mode: SimMode,
    /// Optional per-round ledger CSV (simulate only).
    #[serde(default)]
    rounds_output: Option<PathBuf>,
    /// Optional JSON summary of per-cell detection quality (roc only).
    #[serde(default)]
    summary: Option<PathBuf>,
}

fn default_key() -> String {
    "veriq-default-key".into()
}

fn default_mode() -> SimMode {
    SimMode::Real
}

#[derive(Debug, Serialize, Deserialize)]
struct NamedQuery {
    id: String,
    query: Query,
}

/// Errors during argument/config interpretation exit with 2; failures while
/// doing the work exit with 1.
enum CliError {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

fn config_err<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Config(e.into())
}

fn runtime_err<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Runtime(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {what} {}", path.display()))
        .map_err(config_err)?;
    serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("malformed {what} {}", path.display()))
        .map_err(config_err)
}

fn load_relation(cfg: &ExperimentConfig) -> Result<SignedRelation, CliError> {
    match (&cfg.data, cfg.synthetic_rows) {
        (Some(path), _) => {
            let rel = read_signed_csv_path(path)
                .with_context(|| format!("cannot load signed data {}", path.display()))
                .map_err(config_err)?;
            if !rel.verify_all(cfg.key.as_bytes()) {
                return Err(runtime_err(anyhow!(
                    "authentication failure: {} contains tuples whose MACs do not verify \
                     under the configured key",
                    path.display()
                )));
            }
            Ok(rel)
        }
        (None, Some(rows)) => {
            let (schema, data) = gen_census_like(rows, cfg.seed).map_err(config_err)?;
            sign_relation(schema, data, cfg.key.as_bytes()).map_err(runtime_err)
        }
        (None, None) => Err(config_err(anyhow!(
            "experiment config needs either `data` or `synthetic_rows`"
        ))),
    }
}

fn load_queries(cfg: &ExperimentConfig) -> Result<Vec<(String, Query)>, CliError> {
    match &cfg.queries {
        Some(path) => {
            let named: Vec<NamedQuery> = read_json(path, "query file")?;
            if named.is_empty() {
                return Err(config_err(anyhow!("query file {} is empty", path.display())));
            }
            Ok(named.into_iter().map(|n| (n.id, n.query)).collect())
        }
        None => Ok(archetype_queries()),
    }
}

fn create_out(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(
        File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))
            .map_err(config_err)?,
    ))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::GenData { rows, seed, out } => {
            let (schema, data) = gen_census_like(rows, seed).map_err(config_err)?;
            let mut w = create_out(&out)?;
            write_csv(&mut w, &schema, &data).map_err(runtime_err)?;
            w.flush().map_err(runtime_err)?;
            Ok(())
        }
        Cmd::Sign { data, key, out } => {
            let (schema, rows) = read_csv_path(&data)
                .with_context(|| format!("cannot read {}", data.display()))
                .map_err(config_err)?;
            let rel = sign_relation(schema, rows, key.as_bytes()).map_err(runtime_err)?;
            let mut w = create_out(&out)?;
            write_signed_csv(&mut w, &rel).map_err(runtime_err)?;
            w.flush().map_err(runtime_err)?;
            Ok(())
        }
        Cmd::Query { data, key, query, json } => {
            let rel = load_signed(&data, key.as_bytes())?;
            let q: Query = read_json(&query, "query file")?;
            let result = eval_exact(&rel, &q).map_err(runtime_err)?;
            if json {
                println!("{}", serde_json::to_string(&result).map_err(runtime_err)?);
            } else {
                match result {
                    veriq_core::QueryResult::Aggregate(v) => println!("{v}"),
                    veriq_core::QueryResult::Selection(ts) => {
                        for t in ts {
                            let vals: Vec<String> =
                                t.values.iter().map(|v| v.to_string()).collect();
                            println!("{}\t{}", t.id, vals.join(","));
                        }
                    }
                }
            }
            Ok(())
        }
        Cmd::Verify { data, key, query, claim, k, seed, epsilon, json } => {
            let rel = load_signed(&data, key.as_bytes())?;
            let q: Query = read_json(&query, "query file")?;
            let policy = EpsilonPolicy::relative(epsilon).map_err(config_err)?;
            let sketch = draw_sketch(&rel, k, seed).map_err(config_err)?;
            let verdict =
                local_verify_aggregate(&sketch, &rel.schema, &q, claim, &policy)
                    .map_err(runtime_err)?;
            if json {
                println!("{}", serde_json::to_string(&verdict).map_err(runtime_err)?);
            } else {
                match &verdict {
                    Verdict::Accept { estimate } => {
                        println!("accept (claim {claim}, sketch estimate {estimate})")
                    }
                    Verdict::Escalate { estimate, reason } => println!(
                        "escalate (claim {claim}, sketch estimate {estimate:?}): {reason:?}"
                    ),
                }
            }
            Ok(())
        }
        Cmd::Alpha(args) => cmd_alpha(args),
        Cmd::Simulate { config, out, trials, json } => cmd_simulate(&config, &out, trials, json),
        Cmd::Roc { config, out, trials, workers, json } => {
            cmd_roc(&config, &out, trials, workers, json)
        }
    }
}

fn load_signed(path: &Path, key: &[u8]) -> Result<SignedRelation, CliError> {
    let rel = read_signed_csv_path(path)
        .with_context(|| format!("cannot load signed data {}", path.display()))
        .map_err(config_err)?;
    if !rel.verify_all(key) {
        return Err(runtime_err(anyhow!(
            "authentication failure: {} contains tuples whose MACs do not verify under the \
             given key",
            path.display()
        )));
    }
    Ok(rel)
}

#[derive(Serialize)]
struct AlphaOutput {
    form: &'static str,
    /// Smallest check probability that deters cheating.
    threshold: f64,
    /// Two-cloud only: the exact utility-indifference point (the closed form
    /// above is a conservative simplification of it).
    #[serde(skip_serializing_if = "Option::is_none")]
    equalizer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    practical_consistent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    practical_printed: Option<f64>,
    rationality: veriq_core::RationalityReport,
}

fn cmd_alpha(args: AlphaArgs) -> Result<(), CliError> {
    let config: GameConfig = read_json(&args.config, "game config")?;
    let output = match args.form {
        AlphaForm::Single => {
            config.validate(GameForm::SingleCloud).map_err(config_err)?;
            AlphaOutput {
                form: "single",
                threshold: alpha_threshold_single_cloud(&config).map_err(runtime_err)?,
                equalizer: None,
                practical_consistent: None,
                practical_printed: None,
                rationality: check_rationality(&config, GameForm::SingleCloud)
                    .map_err(runtime_err)?,
            }
        }
        AlphaForm::Two => {
            config.validate(GameForm::TwoCloud).map_err(config_err)?;
            let practical =
                alpha_practical_two_cloud(config.price, config.fine).map_err(runtime_err)?;
            AlphaOutput {
                form: "two",
                threshold: alpha_threshold_two_cloud(config.gain(), config.fine, config.price)
                    .map_err(runtime_err)?,
                equalizer: Some(alpha_equalizer_two_cloud(&config).map_err(runtime_err)?),
                practical_consistent: Some(practical.consistent),
                practical_printed: Some(practical.printed),
                rationality: check_rationality(&config, GameForm::TwoCloud)
                    .map_err(runtime_err)?,
            }
        }
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&output).map_err(runtime_err)?);
    } else {
        println!("{}", output.threshold);
        if let Some(eq) = output.equalizer {
            println!("equalizer            {eq}");
        }
        if let (Some(c), Some(p)) = (output.practical_consistent, output.practical_printed) {
            println!("practical            {c} (printed form {p})");
        }
        for check in &output.rationality.checks {
            println!(
                "{:<20} {} (margin {:+.4})",
                check.name,
                if check.pass { "ok" } else { "VIOLATED" },
                check.margin
            );
        }
    }
    Ok(())
}

fn cmd_simulate(
    config_path: &Path,
    out: &Path,
    rounds_override: Option<u64>,
    json: bool,
) -> Result<(), CliError> {
    let cfg: ExperimentConfig = read_json(config_path, "experiment config")?;
    let rel = load_relation(&cfg)?;
    let queries = load_queries(&cfg)?;
    let (_, query) = &queries[0];
    let rounds = rounds_override.or(cfg.rounds).ok_or_else(|| {
        config_err(anyhow!("experiment config needs `rounds` (or pass --trials)"))
    })?;
    let strategies = cfg.strategies.clone().unwrap_or_else(|| vec![ServerStrategy::Honest]);
    let s1 = strategies.first().copied().unwrap_or(ServerStrategy::Honest);
    let s2 = strategies.get(1).copied().unwrap_or(ServerStrategy::Honest);
    let record = cfg.rounds_output.is_some();
    let run: SimRun = match cfg.contract {
        ContractSelector::SingleCloud => {
            let verifier = match cfg.mode {
                SimMode::Stated => SingleCloudVerifier::Stated,
                SimMode::Real => SingleCloudVerifier::Sketch {
                    policy: cfg
                        .epsilon_policy
                        .unwrap_or(EpsilonPolicy { relative_epsilon: 0.05, absolute_floor: 0.0 }),
                    k: cfg.k_grid.as_ref().and_then(|g| g.first().copied()).unwrap_or(1000),
                    key: cfg.key.as_bytes().to_vec(),
                },
            };
            run_single_cloud(&rel, query, &cfg.game, &s1, &verifier, rounds, cfg.seed, record)
                .map_err(runtime_err)?
        }
        ContractSelector::TwoCloudFineBoth | ContractSelector::TwoCloudAudit { .. } => {
            let contract = match cfg.contract {
                ContractSelector::TwoCloudFineBoth => TwoCloudContract::One,
                ContractSelector::TwoCloudAudit { audit_reimbursed } => {
                    TwoCloudContract::Two { audit_reimbursed }
                }
                ContractSelector::SingleCloud => unreachable!(),
            };
            let mode = match cfg.mode {
                SimMode::Stated => TwoCloudMode::Stated,
                SimMode::Real => TwoCloudMode::Real { key: cfg.key.as_bytes().to_vec() },
            };
            run_two_cloud(
                &rel, query, &cfg.game, &s1, &s2, contract, &mode, rounds, cfg.seed, record,
            )
            .map_err(runtime_err)?
        }
    };
    if let Some(path) = &cfg.rounds_output {
        write_rounds_csv(path, &run)?;
    }
    let mut w = create_out(out)?;
    serde_json::to_writer_pretty(&mut w, &run.summary).map_err(runtime_err)?;
    w.write_all(b"\n").map_err(runtime_err)?;
    w.flush().map_err(runtime_err)?;
    if json {
        println!("{}", serde_json::to_string(&run.summary).map_err(runtime_err)?);
    } else {
        let s = &run.summary;
        println!(
            "{} rounds: owner {:.4} +/- {:.4}, server1 {:.4} +/- {:.4}, checked {}, \
             escalations {}, detections {}",
            s.rounds,
            s.owner.mean,
            s.owner.std_error,
            s.s1.mean,
            s.s1.std_error,
            s.checked_rounds,
            s.escalations,
            s.detections
        );
    }
    Ok(())
}

fn write_rounds_csv(path: &Path, run: &SimRun) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create_out(path)?);
    w.write_record([
        "round", "s1_cheats", "s2_cheats", "checked", "escalated", "audited", "owner_net",
        "s1_net", "s2_net",
    ])
    .map_err(runtime_err)?;
    let opt = |v: Option<bool>| v.map(|b| b.to_string()).unwrap_or_default();
    for r in &run.rounds {
        w.write_record([
            r.round.to_string(),
            r.s1_cheats.to_string(),
            opt(r.s2_cheats),
            r.checked.to_string(),
            opt(r.escalated),
            r.audited.to_string(),
            format!("{}", r.owner.net()),
            format!("{}", r.s1.net()),
            r.s2.as_ref().map(|l| format!("{}", l.net())).unwrap_or_default(),
        ])
        .map_err(runtime_err)?;
    }
    w.flush().map_err(runtime_err)?;
    Ok(())
}

#[derive(Serialize)]
struct CellQuality {
    query_id: String,
    k: usize,
    cheat_kind: String,
    cheat_param: f64,
    auc: f64,
}

fn cmd_roc(
    config_path: &Path,
    out: &Path,
    trials_override: Option<usize>,
    workers: Option<usize>,
    json: bool,
) -> Result<(), CliError> {
    let cfg: ExperimentConfig = read_json(config_path, "experiment config")?;
    let rel = load_relation(&cfg)?;
    let queries = load_queries(&cfg)?;
    let k_list = cfg.k_grid.clone().unwrap_or_else(default_k_list);
    let strategies = cfg.strategies.clone().unwrap_or_else(default_cheater_strategies);
    let grid = cfg.epsilon_grid.clone().unwrap_or_else(default_epsilon_grid);
    let trials = trials_override.or(cfg.trials).unwrap_or(100);
    let workers = workers
        .or_else(|| {
            std::env::var("VERIQ_WORKERS").ok().and_then(|v| v.parse().ok())
        })
        .unwrap_or(0); // 0 = rayon default (all cores)
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| config_err(anyhow!("cannot build worker pool: {e}")))?;
    let points: Vec<RocPoint> = pool
        .install(|| {
            roc_sweep(&rel, &queries, &k_list, &strategies, &grid, trials, &cfg.game, cfg.seed)
        })
        .map_err(runtime_err)?;
    let mut w = create_out(out)?;
    write_roc_csv(&mut w, &points).map_err(runtime_err)?;
    w.flush().map_err(runtime_err)?;

    // Per-cell AUC summary: each cell occupies a contiguous grid.len() block.
    let cells: Vec<CellQuality> = points
        .chunks(grid.len())
        .map(|chunk| {
            let rates: Vec<(f64, f64)> = chunk.iter().map(|p| (p.p_fn, p.p_tn)).collect();
            let first = &chunk[0];
            CellQuality {
                query_id: first.query_id.clone(),
                k: first.k,
                cheat_kind: first.cheat_kind.clone(),
                cheat_param: first.cheat_param,
                auc: roc_auc(&rates),
            }
        })
        .collect();
    if let Some(path) = &cfg.summary {
        let mut w = create_out(path)?;
        serde_json::to_writer_pretty(&mut w, &cells).map_err(runtime_err)?;
        w.write_all(b"\n").map_err(runtime_err)?;
        w.flush().map_err(runtime_err)?;
    }
    if json {
        println!("{}", serde_json::to_string(&cells).map_err(runtime_err)?);
    } else {
        println!(
            "{} cells x {} thresholds -> {} ({} trials each)",
            cells.len(),
            grid.len(),
            out.display(),
            trials
        );
        for c in &cells {
            println!(
                "{:<6} k={:<6} {}({}) AUC {:.3}",
                c.query_id, c.k, c.cheat_kind, c.cheat_param, c.auc
            );
        }
    }
    Ok(())
}
