//! Monte-Carlo execution of both games, payoff ledgers, the ROC experiment
//! harness, and a synthetic census-like data generator.
//!
//! Every stochastic choice draws from an RNG derived from (master seed, round
//! or cell index), so parallel and serial runs produce identical output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::adversary::{Responder, ServerStrategy};
use crate::authstore::{Schema, SignedRelation};
use crate::error::{Error, Result};
use crate::incentives::{GameConfig, GameForm, TwoCloudContract};
use crate::queryeng::{Predicate, Query, QueryKind, QueryResult};
use crate::rng::{derive_rng, derive_seed};
use crate::verifier::{
    audit_exact, claims_match, deviation_samples, local_verify_aggregate, local_verify_selection,
    show_work_audit, AuditVerdict, DeviationSample, EpsilonPolicy, Verdict, WorkResponse,
};
use rand::Rng;

/// One player's account for a single round. `transfers` is cash moved between
/// players (payments, fines, reimbursements) and sums to zero across players;
/// `costs` is real resource expenditure (computation, verification, audit);
/// `value` is information value realized by the owner.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlayerLedger {
    pub transfers: f64,
    pub costs: f64,
    pub value: f64,
}

impl PlayerLedger {
    pub fn net(&self) -> f64 {
        self.transfers - self.costs + self.value
    }
}

/// Everything that happened in one simulated round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: u64,
    pub s1_cheats: bool,
    /// `None` in the single-cloud game.
    pub s2_cheats: Option<bool>,
    /// Verified (single-cloud) or duplicated (two-cloud).
    pub checked: bool,
    /// Local verification escalated (single-cloud) or results mismatched
    /// (two-cloud); `None` when the round was not checked.
    pub escalated: Option<bool>,
    pub audited: bool,
    /// Server was fined this round.
    pub s1_flagged: bool,
    pub s2_flagged: Option<bool>,
    pub owner: PlayerLedger,
    pub s1: PlayerLedger,
    pub s2: Option<PlayerLedger>,
}

impl RoundOutcome {
    /// Sum of all cash transfers; zero in every valid round.
    pub fn transfer_balance(&self) -> f64 {
        self.owner.transfers
            + self.s1.transfers
            + self.s2.map(|l| l.transfers).unwrap_or(0.0)
    }
}

/// Mean and standard error of one player's per-round net payoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerStats {
    pub mean: f64,
    pub std_error: f64,
}

/// Per-run aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub rounds: u64,
    pub owner: PlayerStats,
    pub s1: PlayerStats,
    pub s2: Option<PlayerStats>,
    /// Rounds in which the owner verified (single) or duplicated (two-cloud).
    pub checked_rounds: u64,
    /// Checked rounds that passed without escalation/mismatch.
    pub accepted_rounds: u64,
    pub escalations: u64,
    pub audits: u64,
    /// Server-rounds in which a fine was levied.
    pub detections: u64,
    /// Fraction of checked rounds escalated while the server was honest.
    pub p_fn: Option<f64>,
    /// Fraction of checked rounds escalated while the server cheated.
    pub p_tn: Option<f64>,
}

#[derive(Default)]
struct Welford {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn stats(&self) -> PlayerStats {
        let n = self.n.max(1) as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        PlayerStats {
            mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// How the single-cloud owner's check behaves in simulation.
///
/// `Stated` draws escalation flags as Bernoulli variables from the config's
/// stated error rates — O(1) per round, the form the analytic utility table
/// assumes. `Sketch` runs the real pipeline: a fresh sketch, a local
/// verification, and an exact audit on escalation.
pub enum SingleCloudVerifier {
    Stated,
    Sketch {
        policy: EpsilonPolicy,
        k: usize,
        key: Vec<u8>,
    },
}

/// Result of a simulation run. `rounds` is populated only when requested.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub summary: TrialSummary,
    pub rounds: Vec<RoundOutcome>,
}

/// Simulates the single-cloud game: the owner verifies with probability
/// alpha; escalation triggers an exact audit; a caught cheater forfeits the
/// payment and pays the fine plus the audit-cost reimbursement; the owner
/// absorbs the audit cost of a falsely escalated honest answer.
pub fn run_single_cloud(
    relation: &SignedRelation,
    query: &Query,
    config: &GameConfig,
    strategy: &ServerStrategy,
    verifier: &SingleCloudVerifier,
    rounds: u64,
    seed: u64,
    record: bool,
) -> Result<SimRun> {
    config.validate(GameForm::SingleCloud)?;
    if rounds == 0 {
        return Err(Error::Parameter("rounds must be >= 1".into()));
    }
    let responder = match verifier {
        SingleCloudVerifier::Stated => None,
        SingleCloudVerifier::Sketch { .. } => {
            Some(Responder::new(strategy.clone(), relation, query, config)?)
        }
    };
    let cheats = !strategy.is_honest();

    let mut owner_acc = Welford::default();
    let mut s1_acc = Welford::default();
    let mut checked_rounds = 0;
    let mut escalations = 0;
    let mut audits = 0;
    let mut detections = 0;
    let mut recorded = Vec::new();

    for round in 0..rounds {
        let mut owner_rng = derive_rng(seed, round, 0, 0);
        let mut server_rng = derive_rng(seed, round, 1, 0);

        let mut owner = PlayerLedger::default();
        let mut server = PlayerLedger::default();
        let checked = owner_rng.random::<f64>() < config.alpha;

        // The server always computes its answer (and bears its cost) before
        // knowing whether this round is checked.
        let (claim, claim_is_true, compute_cost) = match (&responder, verifier) {
            (Some(resp), SingleCloudVerifier::Sketch { .. }) => {
                let response = resp.respond(relation, &mut server_rng)?;
                let truthful = claims_match(query, &response.claim, resp.exact());
                (Some(response.claim), truthful, response.compute_cost)
            }
            _ => {
                // stated mode: the analytic table's action-level costs
                let cost = if cheats {
                    config.cost_cheat
                } else {
                    config.cost_honest
                };
                (None, !cheats, cost)
            }
        };
        server.costs += compute_cost;

        let mut escalated = None;
        let mut audited = false;
        let mut flagged = false;

        if checked {
            checked_rounds += 1;
            owner.costs += config.verify_cost;
            let esc = match verifier {
                SingleCloudVerifier::Stated => {
                    let p = if cheats {
                        config.error_rates.p_tn
                    } else {
                        config.error_rates.p_fn
                    };
                    owner_rng.random::<f64>() < p
                }
                SingleCloudVerifier::Sketch { policy, k, key } => {
                    let sketch_seed = derive_seed(seed, round, 2, 0);
                    let claim = claim.as_ref().expect("sketch mode has a claim");
                    let verdict = match claim {
                        QueryResult::Aggregate(v) => {
                            let sketch =
                                crate::authstore::draw_sketch(relation, *k, sketch_seed)?;
                            local_verify_aggregate(&sketch, &relation.schema, query, *v, policy)?
                        }
                        QueryResult::Selection(tuples) => {
                            let sketch =
                                crate::authstore::draw_sketch(relation, *k, sketch_seed)?;
                            local_verify_selection(
                                &sketch,
                                &relation.schema,
                                query,
                                tuples,
                                policy,
                                key,
                            )?
                        }
                    };
                    !matches!(verdict, Verdict::Accept { .. })
                }
            };
            escalated = Some(esc);
            if esc {
                escalations += 1;
                audits += 1;
                audited = true;
                owner.costs += config.audit_cost;
                let caught = match verifier {
                    SingleCloudVerifier::Stated => cheats,
                    SingleCloudVerifier::Sketch { key, .. } => {
                        let claim = claim.as_ref().expect("sketch mode has a claim");
                        audit_exact(relation, query, claim, key)? == AuditVerdict::Cheat
                    }
                };
                if caught {
                    detections += 1;
                    flagged = true;
                    // forfeits the payment, pays the fine and the audit bill
                    server.transfers -= config.fine + config.audit_cost;
                    owner.transfers += config.fine + config.audit_cost;
                    owner.value += config.info_value_cheat;
                } else {
                    owner.transfers -= config.price;
                    server.transfers += config.price;
                    owner.value += if claim_is_true {
                        config.info_value_honest
                    } else {
                        config.info_value_cheat
                    };
                }
            }
        }
        if escalated != Some(true) {
            // accepted (checked or not): pay and take the claimed answer
            owner.transfers -= config.price;
            server.transfers += config.price;
            owner.value += if claim_is_true {
                config.info_value_honest
            } else {
                config.info_value_cheat
            };
        }

        debug_assert!(
            (owner.transfers + server.transfers).abs() < 1e-9,
            "transfer imbalance"
        );
        owner_acc.push(owner.net());
        s1_acc.push(server.net());
        if record {
            recorded.push(RoundOutcome {
                round,
                s1_cheats: cheats,
                s2_cheats: None,
                checked,
                escalated,
                audited,
                s1_flagged: flagged,
                s2_flagged: None,
                owner,
                s1: server,
                s2: None,
            });
        }
    }

    let p_rate = |num: u64| {
        if checked_rounds == 0 {
            None
        } else {
            Some(num as f64 / checked_rounds as f64)
        }
    };
    Ok(SimRun {
        summary: TrialSummary {
            rounds,
            owner: owner_acc.stats(),
            s1: s1_acc.stats(),
            s2: None,
            checked_rounds,
            accepted_rounds: checked_rounds - escalations,
            escalations,
            audits,
            detections,
            p_fn: if cheats { None } else { p_rate(escalations) },
            p_tn: if cheats { p_rate(escalations) } else { None },
        },
        rounds: recorded,
    })
}

/// How mismatches are produced in the two-cloud simulation.
///
/// `Stated` assumes results differ exactly when the compared servers took
/// different effective actions (true almost surely for continuous-noise
/// cheats), and identifies cheaters by their actual actions — O(1) per round.
/// `Real` calls the strategies, compares claims, and runs the show-work
/// audit under Contract 2.
pub enum TwoCloudMode {
    Stated,
    Real { key: Vec<u8> },
}

/// Simulates the two-cloud game: a uniformly chosen primary server, duplicate
/// querying with probability alpha, and Contract 1 or 2 transfers on
/// mismatch.
#[allow(clippy::too_many_arguments)]
pub fn run_two_cloud(
    relation: &SignedRelation,
    query: &Query,
    config: &GameConfig,
    strategy_s1: &ServerStrategy,
    strategy_s2: &ServerStrategy,
    contract: TwoCloudContract,
    mode: &TwoCloudMode,
    rounds: u64,
    seed: u64,
    record: bool,
) -> Result<SimRun> {
    config.validate(GameForm::TwoCloud)?;
    if rounds == 0 {
        return Err(Error::Parameter("rounds must be >= 1".into()));
    }
    let responders = match mode {
        TwoCloudMode::Stated => None,
        TwoCloudMode::Real { .. } => Some((
            Responder::new(strategy_s1.clone(), relation, query, config)?,
            Responder::new(strategy_s2.clone(), relation, query, config)?,
        )),
    };
    let cheats = [!strategy_s1.is_honest(), !strategy_s2.is_honest()];

    let mut owner_acc = Welford::default();
    let mut server_acc = [Welford::default(), Welford::default()];
    let mut checked_rounds = 0;
    let mut escalations = 0;
    let mut audits = 0;
    let mut detections = 0;
    let mut recorded = Vec::new();

    for round in 0..rounds {
        let mut owner_rng = derive_rng(seed, round, 0, 0);
        let mut s1_rng = derive_rng(seed, round, 1, 0);
        let mut s2_rng = derive_rng(seed, round, 2, 0);

        let mut owner = PlayerLedger::default();
        let mut servers = [PlayerLedger::default(), PlayerLedger::default()];
        let primary = usize::from(owner_rng.random::<bool>());
        let duplicated = owner_rng.random::<f64>() < config.alpha;

        // responses (or stated stand-ins) per involved server
        let mut responses: [Option<crate::adversary::ServerResponse>; 2] = [None, None];
        let mut truthful = [true, true];
        let mut costs = [0.0f64; 2];
        let involved: Vec<usize> = if duplicated {
            vec![0, 1]
        } else {
            vec![primary]
        };
        for &i in &involved {
            match &responders {
                Some((r1, r2)) => {
                    let resp = if i == 0 {
                        r1.respond(relation, &mut s1_rng)?
                    } else {
                        r2.respond(relation, &mut s2_rng)?
                    };
                    let exact = if i == 0 { r1.exact() } else { r2.exact() };
                    truthful[i] = claims_match(query, &resp.claim, exact);
                    costs[i] = resp.compute_cost;
                    responses[i] = Some(resp);
                }
                None => {
                    truthful[i] = !cheats[i];
                    costs[i] = if cheats[i] {
                        config.cost_cheat
                    } else {
                        config.cost_honest
                    };
                }
            }
        }

        let mut escalated = None;
        let mut audited = false;
        let mut flagged = [false, false];

        if duplicated {
            checked_rounds += 1;
            let mismatch = match &responses {
                [Some(a), Some(b)] => !claims_match(query, &a.claim, &b.claim),
                _ => cheats[0] || cheats[1],
            };
            escalated = Some(mismatch);
            if mismatch {
                escalations += 1;
                // both answers are in hand; the owner realizes both values
                owner.value += value_of(config, truthful[0]) + value_of(config, truthful[1]);
                match contract {
                    TwoCloudContract::One => {
                        // both fined, payments returned, compute refunded
                        for (i, s) in servers.iter_mut().enumerate() {
                            s.transfers -= config.fine;
                            flagged[i] = true;
                        }
                        owner.transfers += 2.0 * config.fine;
                        detections += 2;
                    }
                    TwoCloudContract::Two { audit_reimbursed } => {
                        audits += 1;
                        audited = true;
                        owner.costs += config.audit_cost;
                        let culprits = match (&responses, mode) {
                            ([Some(a), Some(b)], TwoCloudMode::Real { key }) => {
                                let set = show_work_audit(
                                    &relation.schema,
                                    query,
                                    &work_response(a),
                                    &work_response(b),
                                    key,
                                )?;
                                [set.a, set.b]
                            }
                            _ => cheats,
                        };
                        let n_culprits = culprits.iter().filter(|&&c| c).count() as f64;
                        for (i, s) in servers.iter_mut().enumerate() {
                            if culprits[i] {
                                flagged[i] = true;
                                detections += 1;
                                let mut due = config.fine;
                                if audit_reimbursed {
                                    due += config.audit_cost / n_culprits;
                                }
                                s.transfers -= due;
                                owner.transfers += due;
                            }
                        }
                    }
                }
            } else {
                // both paid, costs stand, single information value
                owner.value += value_of(config, truthful[primary]);
                for (i, s) in servers.iter_mut().enumerate() {
                    owner.transfers -= config.price;
                    s.transfers += config.price;
                    s.costs += costs[i];
                }
            }
        } else {
            owner.value += value_of(config, truthful[primary]);
            owner.transfers -= config.price;
            servers[primary].transfers += config.price;
            servers[primary].costs += costs[primary];
        }

        debug_assert!(
            (owner.transfers + servers[0].transfers + servers[1].transfers).abs() < 1e-9,
            "transfer imbalance"
        );
        owner_acc.push(owner.net());
        server_acc[0].push(servers[0].net());
        server_acc[1].push(servers[1].net());
        if record {
            recorded.push(RoundOutcome {
                round,
                s1_cheats: cheats[0],
                s2_cheats: Some(cheats[1]),
                checked: duplicated,
                escalated,
                audited,
                s1_flagged: flagged[0],
                s2_flagged: Some(flagged[1]),
                owner,
                s1: servers[0],
                s2: Some(servers[1]),
            });
        }
    }

    Ok(SimRun {
        summary: TrialSummary {
            rounds,
            owner: owner_acc.stats(),
            s1: server_acc[0].stats(),
            s2: Some(server_acc[1].stats()),
            checked_rounds,
            accepted_rounds: checked_rounds - escalations,
            escalations,
            audits,
            detections,
            p_fn: None,
            p_tn: None,
        },
        rounds: recorded,
    })
}

fn value_of(config: &GameConfig, truthful: bool) -> f64 {
    if truthful {
        config.info_value_honest
    } else {
        config.info_value_cheat
    }
}

/// The show-work submission backing a response: its claim plus the tuples
/// the server hands over (a selection claim doubles as its own work set).
fn work_response(response: &crate::adversary::ServerResponse) -> WorkResponse {
    let tuples = match (&response.work_tuples, &response.claim) {
        (Some(ts), _) => ts.as_ref().clone(),
        (None, QueryResult::Selection(ts)) => ts.clone(),
        (None, QueryResult::Aggregate(_)) => Vec::new(),
    };
    WorkResponse {
        claim: response.claim.clone(),
        tuples,
    }
}

/// One point of an ROC sweep. Field order defines the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub query_id: String,
    pub k: usize,
    pub cheat_kind: String,
    pub cheat_param: f64,
    pub epsilon: f64,
    pub p_fn: f64,
    pub p_tn: f64,
    pub trials: usize,
    pub seed: u64,
}

/// 21 evenly spaced relative epsilon values in [0, 0.5].
pub fn default_epsilon_grid() -> Vec<f64> {
    (0..21).map(|i| i as f64 * 0.025).collect()
}

/// Empirical (p_fn, p_tn) at each epsilon, from one set of paired deviation
/// samples. An undefined estimate escalates at every epsilon.
pub fn rates_for_grid(samples: &[DeviationSample], grid: &[f64]) -> Vec<(f64, f64)> {
    let trials = samples.len().max(1) as f64;
    grid.iter()
        .map(|&eps| {
            let mut honest_escalated = 0usize;
            let mut cheat_escalated = 0usize;
            for s in samples {
                if !matches!(s.honest, Some(d) if d <= eps) {
                    honest_escalated += 1;
                }
                if !matches!(s.cheat, Some(d) if d <= eps) {
                    cheat_escalated += 1;
                }
            }
            (
                honest_escalated as f64 / trials,
                cheat_escalated as f64 / trials,
            )
        })
        .collect()
}

/// Area under an ROC curve given (p_fn, p_tn) rate pairs, with (0,0) and
/// (1,1) appended, by trapezoid over p_fn. Both 0.5 at the diagonal.
pub fn roc_auc(rates: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(rates.len() + 2);
    pts.push((0.0, 0.0));
    pts.extend_from_slice(rates);
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
    let mut area = 0.0;
    for w in pts.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        area += (x1 - x0) * 0.5 * (y0 + y1);
    }
    area
}

/// Runs every (query, k, strategy) cell at every epsilon of the grid, each
/// cell on its own derived seed. Cells execute in parallel; output order is
/// the deterministic cartesian order regardless of worker count.
#[allow(clippy::too_many_arguments)]
pub fn roc_sweep(
    relation: &SignedRelation,
    queries: &[(String, Query)],
    k_list: &[usize],
    strategies: &[ServerStrategy],
    epsilon_grid: &[f64],
    trials: usize,
    config: &GameConfig,
    seed: u64,
) -> Result<Vec<RocPoint>> {
    if queries.is_empty() || k_list.is_empty() || strategies.is_empty() || epsilon_grid.is_empty()
    {
        return Err(Error::Parameter("roc sweep grids must be non-empty".into()));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    let cells: Vec<(usize, usize, usize)> = (0..queries.len())
        .flat_map(|qi| {
            (0..k_list.len())
                .flat_map(move |ki| (0..strategies.len()).map(move |si| (qi, ki, si)))
        })
        .collect();
    let points: Result<Vec<Vec<RocPoint>>> = cells
        .par_iter()
        .map(|&(qi, ki, si)| {
            let (query_id, query) = &queries[qi];
            let k = k_list[ki];
            let strategy = &strategies[si];
            let cell_seed = derive_seed(seed, qi as u64, ki as u64, si as u64);
            let samples =
                deviation_samples(relation, query, k, strategy, config, trials, cell_seed)?;
            let rates = rates_for_grid(&samples, epsilon_grid);
            Ok(epsilon_grid
                .iter()
                .zip(rates)
                .map(|(&eps, (p_fn, p_tn))| RocPoint {
                    query_id: query_id.clone(),
                    k,
                    cheat_kind: strategy.kind_tag().to_string(),
                    cheat_param: strategy.param(),
                    epsilon: eps,
                    p_fn,
                    p_tn,
                    trials,
                    seed: cell_seed,
                })
                .collect())
        })
        .collect();
    Ok(points?.into_iter().flatten().collect())
}

/// Writes ROC points as CSV with the contractual header
/// `query_id,k,cheat_kind,cheat_param,epsilon,p_fn,p_tn,trials,seed`.
pub fn write_roc_csv<W: Write>(writer: W, points: &[RocPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Column names of the synthetic census-like relation.
pub fn census_schema() -> Schema {
    Schema::new(vec!["age", "income", "race", "marital", "sex", "pob_match"])
        .expect("static schema is valid")
}

/// Generates a synthetic census-like relation. Marginals: age uniform on
/// [0, 90]; income 2000 + Exp(mean 30000), capped at 500000; race categorical
/// on 1..=9 with race 9 at 1.5%; marital uniform on [0, 4]; sex Bernoulli(½)
/// on {0, 1}; pob_match Bernoulli(0.6). Deterministic under the seed.
pub fn gen_census_like(rows: u64, seed: u64) -> Result<(Schema, Vec<Vec<i64>>)> {
    if rows == 0 {
        return Err(Error::Parameter("rows must be >= 1".into()));
    }
    // cumulative race distribution over codes 1..=9
    const RACE_CDF: [(f64, i64); 9] = [
        (0.60, 1),
        (0.72, 2),
        (0.80, 3),
        (0.86, 4),
        (0.91, 5),
        (0.945, 6),
        (0.970, 7),
        (0.985, 8),
        (1.0, 9),
    ];
    let mut rng = crate::rng::seed_rng(seed);
    let mut out = Vec::with_capacity(rows as usize);
    for _ in 0..rows {
        let age: i64 = rng.random_range(0..=90);
        let u: f64 = rng.random();
        let income = (2000.0 - 30000.0 * (1.0 - u).ln()).min(500_000.0) as i64;
        let ur: f64 = rng.random();
        let race = RACE_CDF
            .iter()
            .find(|(c, _)| ur < *c)
            .map(|(_, r)| *r)
            .unwrap_or(9);
        let marital: i64 = rng.random_range(0..=4);
        let sex: i64 = rng.random_range(0..=1);
        let pob_match: i64 = i64::from(rng.random::<f64>() < 0.6);
        out.push(vec![age, income, race, marital, sex, pob_match]);
    }
    Ok((census_schema(), out))
}

/// The eight aggregate query archetypes the experiment harness sweeps.
/// `q8` is deliberately sparse (< 1% support at scale).
pub fn archetype_queries() -> Vec<(String, Query)> {
    let q = |kind: QueryKind, predicate: Predicate| Query { kind, predicate };
    vec![
        ("q1".into(), q(QueryKind::Count, Predicate::gt("age", 50))),
        (
            "q2".into(),
            q(QueryKind::Count, Predicate::gt("income", 40_000)),
        ),
        (
            "q3".into(),
            q(QueryKind::Sum("income".into()), Predicate::gt("age", 30)),
        ),
        ("q4".into(), q(QueryKind::Avg("income".into()), Predicate::True)),
        (
            "q5".into(),
            q(QueryKind::Avg("age".into()), Predicate::gt("income", 20_000)),
        ),
        (
            "q6".into(),
            q(QueryKind::StdDev("income".into()), Predicate::True),
        ),
        (
            "q7".into(),
            q(
                QueryKind::Count,
                Predicate::and(Predicate::eq("marital", 1), Predicate::eq("sex", 0)),
            ),
        ),
        (
            "q8".into(),
            q(
                QueryKind::Avg("income".into()),
                Predicate::and(Predicate::eq("sex", 1), Predicate::eq("race", 9)),
            ),
        ),
    ]
}

/// Verifier sample sizes of the desk-scale sweep.
pub fn default_k_list() -> Vec<usize> {
    vec![100, 500, 1000, 2000, 4000]
}

/// The nine cheater strategies of the desk-scale sweep: sampling at each
/// verifier-scale size plus Laplace noise at four widths.
pub fn default_cheater_strategies() -> Vec<ServerStrategy> {
    let mut out: Vec<ServerStrategy> = default_k_list()
        .into_iter()
        .map(|k| ServerStrategy::Sample { k })
        .collect();
    out.extend(
        [5.0, 10.0, 20.0, 50.0]
            .into_iter()
            .map(|divisor| ServerStrategy::Laplace { divisor }),
    );
    out
}
