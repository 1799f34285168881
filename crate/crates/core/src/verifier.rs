//! The owner's verification machinery: cheap local checks against the
//! retained sketch, the exact audit, the two-cloud show-work audit, and the
//! bounded-differences calculators used to size samples and tails.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::adversary::{Responder, ServerStrategy};
use crate::authstore::{verify_tuple, SampleSketch, Schema, SignedRelation, SignedTuple};
use crate::error::{Error, Result};
use crate::incentives::{ErrorRates, GameConfig};
use crate::queryeng::{
    estimate_from_sketch, eval_exact, predicate_matches, sketch_estimate_streaming, Query,
    QueryKind, QueryResult,
};
use crate::rng::{derive_rng, derive_seed};

/// Relative tolerance used by the exact audit for Avg/StdDev claims;
/// Count/Sum are compared exactly.
pub const AUDIT_REL_TOLERANCE: f64 = 1e-9;

/// Acceptance band for local verification: relative to the sketch estimate,
/// with an absolute floor used when the estimate is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPolicy {
    pub relative_epsilon: f64,
    #[serde(default)]
    pub absolute_floor: f64,
}

impl EpsilonPolicy {
    pub fn new(relative_epsilon: f64, absolute_floor: f64) -> Result<Self> {
        if relative_epsilon < 0.0 || absolute_floor < 0.0 {
            return Err(Error::Parameter(
                "epsilon policy values must be >= 0".into(),
            ));
        }
        Ok(EpsilonPolicy {
            relative_epsilon,
            absolute_floor,
        })
    }

    pub fn relative(relative_epsilon: f64) -> Result<Self> {
        Self::new(relative_epsilon, 0.0)
    }
}

/// Why a claim was escalated to audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum EscalateReason {
    /// |claimed - estimate| exceeded the band.
    Deviation { claimed: f64, deviation: f64 },
    /// Avg/StdDev sketch estimate undefined: no sketch tuples matched.
    UndefinedEstimate,
    /// Direct cheating evidence: a claimed tuple failed its MAC.
    MacFailure { id: u64 },
    /// Direct cheating evidence: a claimed tuple violates the predicate.
    PredicateViolation { id: u64 },
    /// Selection returned fewer tuples than the band allows.
    TooFewTuples { claimed: usize },
}

impl EscalateReason {
    /// True when the reason is proof of cheating, not just deviation.
    pub fn is_direct_evidence(&self) -> bool {
        matches!(
            self,
            EscalateReason::MacFailure { .. } | EscalateReason::PredicateViolation { .. }
        )
    }
}

/// Outcome of a local verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Accept {
        estimate: f64,
    },
    Escalate {
        /// The estimate that triggered escalation, when one was defined.
        estimate: Option<f64>,
        #[serde(flatten)]
        reason: EscalateReason,
    },
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept { .. })
    }
}

fn within_band(claimed: f64, estimate: f64, policy: &EpsilonPolicy) -> bool {
    if estimate == 0.0 {
        claimed.abs() <= policy.absolute_floor
    } else {
        (claimed - estimate).abs() <= policy.relative_epsilon * estimate.abs()
    }
}

/// Checks a claimed aggregate against the sketch estimate.
pub fn local_verify_aggregate(
    sketch: &SampleSketch,
    schema: &Schema,
    query: &Query,
    claimed: f64,
    policy: &EpsilonPolicy,
) -> Result<Verdict> {
    if !query.is_aggregate() {
        return Err(Error::Parameter(
            "local_verify_aggregate requires an aggregate query".into(),
        ));
    }
    let estimate = match estimate_from_sketch(sketch, schema, query) {
        Ok(v) => v,
        Err(Error::UndefinedEstimate) => {
            return Ok(Verdict::Escalate {
                estimate: None,
                reason: EscalateReason::UndefinedEstimate,
            })
        }
        Err(e) => return Err(e),
    };
    if within_band(claimed, estimate, policy) {
        Ok(Verdict::Accept { estimate })
    } else {
        Ok(Verdict::Escalate {
            estimate: Some(estimate),
            reason: EscalateReason::Deviation {
                claimed,
                deviation: (claimed - estimate).abs(),
            },
        })
    }
}

/// Checks a claimed selection result. MAC or predicate failures are direct
/// cheating evidence; otherwise the claimed count must reach the estimated
/// size minus the band (more tuples than estimated is always fine).
pub fn local_verify_selection(
    sketch: &SampleSketch,
    schema: &Schema,
    query: &Query,
    claimed: &[SignedTuple],
    policy: &EpsilonPolicy,
    key: &[u8],
) -> Result<Verdict> {
    if query.is_aggregate() {
        return Err(Error::Parameter(
            "local_verify_selection requires a select query".into(),
        ));
    }
    for tuple in claimed {
        if !verify_tuple(tuple, key) {
            return Ok(Verdict::Escalate {
                estimate: None,
                reason: EscalateReason::MacFailure { id: tuple.id },
            });
        }
        if !predicate_matches(schema, &tuple.values, &query.predicate)? {
            return Ok(Verdict::Escalate {
                estimate: None,
                reason: EscalateReason::PredicateViolation { id: tuple.id },
            });
        }
    }
    let estimate = estimate_from_sketch(sketch, schema, query)?;
    let claimed_count = claimed.len() as f64;
    if claimed_count >= estimate || within_band(claimed_count, estimate, policy) {
        Ok(Verdict::Accept { estimate })
    } else {
        Ok(Verdict::Escalate {
            estimate: Some(estimate),
            reason: EscalateReason::TooFewTuples {
                claimed: claimed.len(),
            },
        })
    }
}

/// Result of the exact audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditVerdict {
    Honest,
    Cheat,
}

/// Exact recomputation over the retrieved relation. All MACs must verify;
/// aggregates compare within `AUDIT_REL_TOLERANCE` for Avg/StdDev and
/// exactly for Count/Sum; selections compare as id sets.
pub fn audit_exact(
    relation: &SignedRelation,
    query: &Query,
    claimed: &QueryResult,
    key: &[u8],
) -> Result<AuditVerdict> {
    if let Some(&id) = relation.failing_ids(key).first() {
        return Err(Error::Tamper(id));
    }
    let truth = eval_exact(relation, query)?;
    let honest = match (&truth, claimed) {
        (QueryResult::Aggregate(t), QueryResult::Aggregate(c)) => match query.kind {
            QueryKind::Count | QueryKind::Sum(_) => t == c,
            _ => (t - c).abs() <= AUDIT_REL_TOLERANCE * t.abs().max(1.0),
        },
        (QueryResult::Selection(t), QueryResult::Selection(c)) => {
            let tids: BTreeSet<u64> = t.iter().map(|x| x.id).collect();
            let cids: BTreeSet<u64> = c.iter().map(|x| x.id).collect();
            tids == cids
        }
        _ => false,
    };
    Ok(if honest { AuditVerdict::Honest } else { AuditVerdict::Cheat })
}

/// One party's submission to the show-work audit.
#[derive(Debug, Clone)]
pub struct WorkResponse {
    pub claim: QueryResult,
    pub tuples: Vec<SignedTuple>,
}

/// Which of the two responders cheated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheaterSet {
    pub a: bool,
    pub b: bool,
}

/// Recomputes the query's aggregate over a returned tuple set.
fn aggregate_of(schema: &Schema, query: &Query, tuples: &[SignedTuple]) -> Result<Option<f64>> {
    let values: Vec<&[i64]> = tuples.iter().map(|t| t.values.as_slice()).collect();
    let attr_idx = match &query.kind {
        QueryKind::Sum(a) | QueryKind::Avg(a) | QueryKind::StdDev(a) => Some(schema.index_of(a)?),
        _ => None,
    };
    match &query.kind {
        QueryKind::Count | QueryKind::Select => Ok(Some(values.len() as f64)),
        QueryKind::Sum(_) => {
            let idx = attr_idx.unwrap();
            Ok(Some(values.iter().map(|v| v[idx] as i128).sum::<i128>() as f64))
        }
        QueryKind::Avg(_) | QueryKind::StdDev(_) => {
            let idx = attr_idx.unwrap();
            if values.is_empty() {
                return Ok(None);
            }
            let n = values.len() as f64;
            let mean = values.iter().map(|v| v[idx] as f64).sum::<f64>() / n;
            match query.kind {
                QueryKind::Avg(_) => Ok(Some(mean)),
                _ => {
                    let var = values
                        .iter()
                        .map(|v| (v[idx] as f64 - mean).powi(2))
                        .sum::<f64>()
                        / n;
                    Ok(Some(var.sqrt()))
                }
            }
        }
    }
}

/// Whether two claimed results agree: exact for Count/Sum, within
/// `AUDIT_REL_TOLERANCE` for Avg/StdDev, id-set equality for selections.
pub fn claims_match(query: &Query, a: &QueryResult, b: &QueryResult) -> bool {
    match (a, b) {
        (QueryResult::Aggregate(x), QueryResult::Aggregate(y)) => match query.kind {
            QueryKind::Count | QueryKind::Sum(_) => x == y,
            _ => (x - y).abs() <= AUDIT_REL_TOLERANCE * x.abs().max(1.0),
        },
        (QueryResult::Selection(x), QueryResult::Selection(y)) => {
            let xi: BTreeSet<u64> = x.iter().map(|t| t.id).collect();
            let yi: BTreeSet<u64> = y.iter().map(|t| t.id).collect();
            xi == yi
        }
        _ => false,
    }
}

/// The two-cloud show-work audit for mismatched results. A responder is a
/// cheater if any of its tuples fails a MAC check, if it returned strictly
/// fewer authenticated matching tuples than the other, or if its claimed
/// aggregate disagrees with the aggregate recomputed from its own tuples.
pub fn show_work_audit(
    schema: &Schema,
    query: &Query,
    response_a: &WorkResponse,
    response_b: &WorkResponse,
    key: &[u8],
) -> Result<CheaterSet> {
    if claims_match(query, &response_a.claim, &response_b.claim) {
        return Err(Error::NoMismatch);
    }
    let mut cheaters = CheaterSet { a: false, b: false };
    let mut authenticated = [0usize; 2];
    for (i, (resp, flag)) in [
        (response_a, &mut cheaters.a),
        (response_b, &mut cheaters.b),
    ]
    .into_iter()
    .enumerate()
    {
        let mut ok_tuples = Vec::new();
        for t in &resp.tuples {
            if !verify_tuple(t, key) {
                *flag = true;
                continue;
            }
            if predicate_matches(schema, &t.values, &query.predicate)? {
                ok_tuples.push(t.clone());
            } else {
                // an irrelevant tuple in the work set is fabricated evidence
                *flag = true;
            }
        }
        authenticated[i] = ok_tuples.len();
        // self-consistency: the claim must equal the aggregate of the
        // responder's own returned tuples
        let recomputed = aggregate_of(schema, query, &ok_tuples)?;
        match (&resp.claim, recomputed) {
            (QueryResult::Aggregate(claimed), Some(own)) => {
                let consistent = match query.kind {
                    QueryKind::Count | QueryKind::Sum(_) => *claimed == own,
                    _ => (claimed - own).abs() <= AUDIT_REL_TOLERANCE * own.abs().max(1.0),
                };
                if !consistent {
                    *flag = true;
                }
            }
            (QueryResult::Aggregate(_), None) => *flag = true,
            (QueryResult::Selection(claimed), _) => {
                let claim_ids: BTreeSet<u64> = claimed.iter().map(|t| t.id).collect();
                let work_ids: BTreeSet<u64> = ok_tuples.iter().map(|t| t.id).collect();
                if claim_ids != work_ids {
                    *flag = true;
                }
            }
        }
    }
    if authenticated[0] < authenticated[1] {
        cheaters.a = true;
    } else if authenticated[1] < authenticated[0] {
        cheaters.b = true;
    }
    Ok(cheaters)
}

/// McDiarmid's bounded-differences tail bound, unclamped:
/// `2 * exp(-2 eps^2 / sum(c_i^2))`. May exceed 1.
pub fn mcdiarmid_bound_raw(epsilon: f64, influences: &[f64]) -> Result<f64> {
    if epsilon < 0.0 {
        return Err(Error::Parameter("epsilon must be >= 0".into()));
    }
    let mut sum_sq = 0.0;
    for (i, &c) in influences.iter().enumerate() {
        if c <= 0.0 {
            return Err(Error::InvalidInfluence { index: i, value: c });
        }
        sum_sq += c * c;
    }
    if influences.is_empty() {
        return Err(Error::Parameter("need at least one influence bound".into()));
    }
    Ok(2.0 * (-2.0 * epsilon * epsilon / sum_sq).exp())
}

/// The bound clamped to [0, 1] for reporting as a probability.
pub fn mcdiarmid_bound(epsilon: f64, influences: &[f64]) -> Result<f64> {
    Ok(mcdiarmid_bound_raw(epsilon, influences)?.min(1.0))
}

/// Convenience form for mean-type statistics where every draw has the same
/// influence `c_tuple / k`.
pub fn mcdiarmid_bound_mean(epsilon: f64, k: u64, c_tuple: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Parameter("k must be >= 1".into()));
    }
    if c_tuple <= 0.0 {
        return Err(Error::InvalidInfluence { index: 0, value: c_tuple });
    }
    // sum c_i^2 = k * (c_tuple/k)^2 = c_tuple^2 / k
    Ok((2.0 * (-2.0 * epsilon * epsilon * k as f64 / (c_tuple * c_tuple)).exp()).min(1.0))
}

/// Real-valued sample size at which the mean-statistic bound hits `delta`:
/// `c_tuple^2 * ln(2/delta) / (2 * eps_abs^2)`.
pub fn sample_size_real(eps_abs: f64, delta: f64, c_tuple: f64) -> Result<f64> {
    if eps_abs <= 0.0 {
        return Err(Error::UnboundedSampleSize);
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Parameter(format!("delta = {delta} outside (0, 1)")));
    }
    if c_tuple <= 0.0 {
        return Err(Error::InvalidInfluence { index: 0, value: c_tuple });
    }
    Ok(c_tuple * c_tuple * (2.0 / delta).ln() / (2.0 * eps_abs * eps_abs))
}

/// Smallest integer k with `2 exp(-2 eps_abs^2 k / c_tuple^2) <= delta`.
pub fn solve_sample_size(eps_abs: f64, delta: f64, c_tuple: f64) -> Result<u64> {
    let real = sample_size_real(eps_abs, delta, c_tuple)?;
    Ok(real.ceil().max(1.0) as u64)
}

/// Measured verifier error rates for a (query, policy, k, strategy) cell.
/// Each trial draws a fresh sketch, then verifies one honest claim and one
/// claim produced by the cheat strategy.
pub fn estimate_error_rates(
    relation: &SignedRelation,
    query: &Query,
    policy: &EpsilonPolicy,
    k: usize,
    strategy: &ServerStrategy,
    config: &GameConfig,
    trials: usize,
    seed: u64,
) -> Result<ErrorRates> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    let samples = deviation_samples(relation, query, k, strategy, config, trials, seed)?;
    let mut honest_escalated = 0usize;
    let mut cheat_escalated = 0usize;
    for s in &samples {
        if !accepts(s.honest, policy) {
            honest_escalated += 1;
        }
        if !accepts(s.cheat, policy) {
            cheat_escalated += 1;
        }
    }
    let p_fn = honest_escalated as f64 / trials as f64;
    let p_tn = cheat_escalated as f64 / trials as f64;
    Ok(ErrorRates::from_tn_tp(p_tn, 1.0 - p_fn))
}

/// Relative deviation of one claim from one sketch estimate; `None` when the
/// estimate was undefined or zero with a nonzero claim (always escalates).
#[derive(Debug, Clone, Copy)]
pub struct DeviationSample {
    pub honest: Option<f64>,
    pub cheat: Option<f64>,
}

fn accepts(relative_deviation: Option<f64>, policy: &EpsilonPolicy) -> bool {
    match relative_deviation {
        Some(d) => d <= policy.relative_epsilon,
        None => false,
    }
}

fn relative_deviation(claimed: f64, estimate: f64, floor: f64) -> Option<f64> {
    if estimate == 0.0 {
        if claimed.abs() <= floor {
            Some(0.0)
        } else {
            None
        }
    } else {
        Some((claimed - estimate).abs() / estimate.abs())
    }
}

/// Shared engine for error-rate estimation and ROC sweeps: one honest and
/// one cheating relative deviation per trial, against the same fresh sketch.
/// Acceptance at any epsilon is then a threshold comparison, so a whole
/// epsilon grid reuses one set of trials.
pub fn deviation_samples(
    relation: &SignedRelation,
    query: &Query,
    k: usize,
    strategy: &ServerStrategy,
    config: &GameConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<DeviationSample>> {
    if !query.is_aggregate() {
        return Err(Error::Parameter(
            "deviation sampling applies to aggregate queries".into(),
        ));
    }
    let responder = Responder::new(strategy.clone(), relation, query, config)?;
    let exact = responder
        .exact()
        .as_aggregate()
        .expect("aggregate query has aggregate result");
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let sketch_seed = derive_seed(seed, trial as u64, 0, 0);
        let estimate = match sketch_estimate_streaming(relation, query, k, sketch_seed) {
            Ok(v) => Some(v),
            Err(Error::UndefinedEstimate) => None,
            Err(e) => return Err(e),
        };
        let mut cheat_rng = derive_rng(seed, trial as u64, 1, 0);
        let cheat_claim = responder.claim_only(relation, &mut cheat_rng)?;
        let (honest, cheat) = match estimate {
            Some(est) => (
                relative_deviation(exact, est, 0.0),
                relative_deviation(cheat_claim, est, 0.0),
            ),
            None => (None, None),
        };
        out.push(DeviationSample { honest, cheat });
    }
    Ok(out)
}
