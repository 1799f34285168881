//! Exact query evaluation over signed relations and extrapolated estimation
//! from a sample sketch.
//!
//! Queries are aggregates (count, sum, average, population standard
//! deviation) or selections over a predicate tree. Evaluation is a full scan;
//! estimation runs the same predicate over the sketch's `k` entries and
//! extrapolates by `N/k` where the statistic scales with population size.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::authstore::{SampleSketch, Schema, SignedRelation, SignedTuple};
use crate::error::{Error, Result};

/// Boolean predicate tree over integer attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Predicate {
    True,
    Equals {
        attr: String,
        value: i64,
    },
    /// Range with optional bounds; `inclusive` applies to both ends and
    /// defaults to true.
    Range {
        attr: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        low: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        high: Option<i64>,
        #[serde(default = "default_inclusive")]
        inclusive: bool,
    },
    And {
        left: Box<Predicate>,
        right: Box<Predicate>,
    },
    Or {
        left: Box<Predicate>,
        right: Box<Predicate>,
    },
}

fn default_inclusive() -> bool {
    true
}

impl Predicate {
    /// Checks attribute references and range ordering against a schema.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        match self {
            Predicate::True => Ok(()),
            Predicate::Equals { attr, .. } => schema.index_of(attr).map(|_| ()),
            Predicate::Range { attr, low, high, .. } => {
                schema.index_of(attr)?;
                if let (Some(l), Some(h)) = (low, high) {
                    if l > h {
                        return Err(Error::Parameter(format!(
                            "range low {l} exceeds high {h} on `{attr}`"
                        )));
                    }
                }
                Ok(())
            }
            Predicate::And { left, right } | Predicate::Or { left, right } => {
                left.validate(schema)?;
                right.validate(schema)
            }
        }
    }

    /// Exclusive range helpers used by the synthetic query set.
    pub fn gt(attr: &str, low: i64) -> Predicate {
        Predicate::Range {
            attr: attr.to_string(),
            low: Some(low),
            high: None,
            inclusive: false,
        }
    }

    pub fn lt(attr: &str, high: i64) -> Predicate {
        Predicate::Range {
            attr: attr.to_string(),
            low: None,
            high: Some(high),
            inclusive: false,
        }
    }

    pub fn eq(attr: &str, value: i64) -> Predicate {
        Predicate::Equals {
            attr: attr.to_string(),
            value,
        }
    }

    pub fn and(left: Predicate, right: Predicate) -> Predicate {
        Predicate::And {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn or(left: Predicate, right: Predicate) -> Predicate {
        Predicate::Or {
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// What the query computes over the tuples matching its predicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "attr", rename_all = "snake_case")]
pub enum QueryKind {
    Count,
    Sum(String),
    Avg(String),
    StdDev(String),
    Select,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    #[serde(flatten)]
    pub kind: QueryKind,
    pub predicate: Predicate,
}

impl Query {
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        match &self.kind {
            QueryKind::Sum(a) | QueryKind::Avg(a) | QueryKind::StdDev(a) => {
                schema.index_of(a).map(|_| ())?
            }
            QueryKind::Count | QueryKind::Select => {}
        }
        self.predicate.validate(schema)
    }

    pub fn is_aggregate(&self) -> bool {
        !matches!(self.kind, QueryKind::Select)
    }
}

/// Result of exact evaluation: a single value for aggregates, the matching
/// tuple set for selections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QueryResult {
    Aggregate(f64),
    Selection(Vec<SignedTuple>),
}

impl QueryResult {
    pub fn as_aggregate(&self) -> Option<f64> {
        match self {
            QueryResult::Aggregate(v) => Some(*v),
            QueryResult::Selection(_) => None,
        }
    }
}

/// Evaluates the predicate against one row of values.
pub fn predicate_matches(schema: &Schema, values: &[i64], predicate: &Predicate) -> Result<bool> {
    match predicate {
        Predicate::True => Ok(true),
        Predicate::Equals { attr, value } => {
            let idx = schema.index_of(attr)?;
            Ok(values[idx] == *value)
        }
        Predicate::Range {
            attr,
            low,
            high,
            inclusive,
        } => {
            let v = values[schema.index_of(attr)?];
            let lo_ok = match low {
                Some(l) => {
                    if *inclusive {
                        v >= *l
                    } else {
                        v > *l
                    }
                }
                None => true,
            };
            let hi_ok = match high {
                Some(h) => {
                    if *inclusive {
                        v <= *h
                    } else {
                        v < *h
                    }
                }
                None => true,
            };
            Ok(lo_ok && hi_ok)
        }
        Predicate::And { left, right } => {
            Ok(predicate_matches(schema, values, left)? && predicate_matches(schema, values, right)?)
        }
        Predicate::Or { left, right } => {
            Ok(predicate_matches(schema, values, left)? || predicate_matches(schema, values, right)?)
        }
    }
}

/// Streaming aggregate accumulator shared by the exact and sketch paths.
/// Count and sum accumulate in i128, so integer aggregates stay exact.
#[derive(Debug, Default, Clone)]
struct Accumulator {
    count: u64,
    sum: i128,
    sum_sq: f64,
}

impl Accumulator {
    fn push(&mut self, v: i64) {
        self.count += 1;
        self.sum += v as i128;
        self.sum_sq += (v as f64) * (v as f64);
    }

    fn avg(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptyAggregate);
        }
        Ok(self.sum as f64 / self.count as f64)
    }

    /// Population standard deviation (divide by count).
    fn stddev(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptyAggregate);
        }
        let mean = self.sum as f64 / self.count as f64;
        let var = (self.sum_sq / self.count as f64 - mean * mean).max(0.0);
        Ok(var.sqrt())
    }
}

/// Full-scan exact evaluation.
pub fn eval_exact(relation: &SignedRelation, query: &Query) -> Result<QueryResult> {
    let schema = &relation.schema;
    query.validate(schema)?;
    match &query.kind {
        QueryKind::Select => {
            let mut out = Vec::new();
            for t in &relation.tuples {
                if predicate_matches(schema, &t.values, &query.predicate)? {
                    out.push(t.clone());
                }
            }
            Ok(QueryResult::Selection(out))
        }
        QueryKind::Count => {
            let mut count: u64 = 0;
            for t in &relation.tuples {
                if predicate_matches(schema, &t.values, &query.predicate)? {
                    count += 1;
                }
            }
            Ok(QueryResult::Aggregate(count as f64))
        }
        QueryKind::Sum(attr) | QueryKind::Avg(attr) | QueryKind::StdDev(attr) => {
            let idx = schema.index_of(attr)?;
            let mut acc = Accumulator::default();
            for t in &relation.tuples {
                if predicate_matches(schema, &t.values, &query.predicate)? {
                    acc.push(t.values[idx]);
                }
            }
            match &query.kind {
                QueryKind::Sum(_) => Ok(QueryResult::Aggregate(acc.sum as f64)),
                QueryKind::Avg(_) => acc.avg().map(QueryResult::Aggregate),
                QueryKind::StdDev(_) => acc.stddev().map(QueryResult::Aggregate),
                _ => unreachable!(),
            }
        }
    }
}

/// Sketch-based estimate of an aggregate or of a selection's size.
///
/// Count and selection size extrapolate `matches/k * N`; Sum extrapolates
/// `sketch_sum/k * N`; Avg and StdDev are computed over the sketch's matching
/// entries directly. A zero-match Avg/StdDev returns
/// [`Error::UndefinedEstimate`] so the verifier can escalate.
pub fn estimate_from_sketch(sketch: &SampleSketch, schema: &Schema, query: &Query) -> Result<f64> {
    query.validate(schema)?;
    let k = sketch.k as f64;
    let n = sketch.n as f64;
    match &query.kind {
        QueryKind::Count | QueryKind::Select => {
            let mut matches: u64 = 0;
            for (_, values) in &sketch.entries {
                if predicate_matches(schema, values, &query.predicate)? {
                    matches += 1;
                }
            }
            Ok(matches as f64 / k * n)
        }
        QueryKind::Sum(attr) => {
            let idx = schema.index_of(attr)?;
            let mut sum: i128 = 0;
            for (_, values) in &sketch.entries {
                if predicate_matches(schema, values, &query.predicate)? {
                    sum += values[idx] as i128;
                }
            }
            Ok(sum as f64 / k * n)
        }
        QueryKind::Avg(attr) | QueryKind::StdDev(attr) => {
            let idx = schema.index_of(attr)?;
            let mut acc = Accumulator::default();
            for (_, values) in &sketch.entries {
                if predicate_matches(schema, values, &query.predicate)? {
                    acc.push(values[idx]);
                }
            }
            if acc.count == 0 {
                return Err(Error::UndefinedEstimate);
            }
            match &query.kind {
                QueryKind::Avg(_) => acc.avg(),
                QueryKind::StdDev(_) => acc.stddev(),
                _ => unreachable!(),
            }
        }
    }
}

/// Draws the same sample as [`draw_sketch`](crate::authstore::draw_sketch)
/// with this seed and estimates in one pass, without materializing tuples.
/// Identical result to `estimate_from_sketch(&draw_sketch(relation, k, seed)?, ..)`;
/// sweeps over millions of sketches use this to avoid the allocation cost.
pub fn sketch_estimate_streaming(
    relation: &SignedRelation,
    query: &Query,
    k: usize,
    seed: u64,
) -> Result<f64> {
    if relation.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    if k == 0 {
        return Err(Error::Parameter("sketch size k must be >= 1".into()));
    }
    let schema = &relation.schema;
    query.validate(schema)?;
    let attr_idx = match &query.kind {
        QueryKind::Sum(a) | QueryKind::Avg(a) | QueryKind::StdDev(a) => {
            Some(schema.index_of(a)?)
        }
        _ => None,
    };
    let n = relation.n();
    let mut rng = crate::rng::seed_rng(seed);
    let mut acc = Accumulator::default();
    let mut matches: u64 = 0;
    for _ in 0..k {
        let id = rng.random_range(1..=n);
        let values = &relation.get(id).expect("id in range").values;
        if predicate_matches(schema, values, &query.predicate)? {
            matches += 1;
            if let Some(idx) = attr_idx {
                acc.push(values[idx]);
            }
        }
    }
    match &query.kind {
        QueryKind::Count | QueryKind::Select => Ok(matches as f64 / k as f64 * n as f64),
        QueryKind::Sum(_) => Ok(acc.sum as f64 / k as f64 * n as f64),
        QueryKind::Avg(_) | QueryKind::StdDev(_) => {
            if acc.count == 0 {
                return Err(Error::UndefinedEstimate);
            }
            match &query.kind {
                QueryKind::Avg(_) => acc.avg(),
                QueryKind::StdDev(_) => acc.stddev(),
                _ => unreachable!(),
            }
        }
    }
}
