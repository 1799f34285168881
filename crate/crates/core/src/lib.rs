//! Game-theoretic verification of outsourced database queries.
//!
//! An owner outsources a signed relation to one or two servers, retains a
//! small uniform sample sketch, and verifies claimed query results cheaply
//! against it, escalating to exact audits. Contracts with fines make honest
//! answering the servers' best response; this crate provides the signed
//! storage, the query engine, the verifier, the closed-form game analysis,
//! adversary models, and a Monte-Carlo / ROC experiment harness.

pub mod adversary;
pub mod authstore;
pub mod error;
pub mod incentives;
pub mod queryeng;
pub mod rng;
pub mod simlab;
pub mod verifier;

pub use adversary::{sample_laplace, Responder, ServerResponse, ServerStrategy};
pub use authstore::{
    draw_sketch, hmac, read_csv, read_csv_path, read_signed_csv, read_signed_csv_path,
    resample_exchange, sign_relation, verify_tuple, write_csv, write_signed_csv, SampleSketch,
    Schema, SignedRelation, SignedTuple, TupleServer,
};
pub use error::{Error, Result};
pub use incentives::{
    alpha_equalizer_two_cloud, alpha_practical_two_cloud, alpha_threshold_single_cloud,
    alpha_threshold_two_cloud, best_response_single_cloud, best_response_two_cloud,
    check_rationality, random_valid_config, utilities_single_cloud, utilities_two_cloud, Action,
    ErrorRates, GameConfig, GameForm, PracticalAlpha, RationalityReport, TwoCloudContract,
};
pub use queryeng::{
    estimate_from_sketch, eval_exact, predicate_matches, sketch_estimate_streaming, Predicate,
    Query, QueryKind, QueryResult,
};
pub use simlab::{
    archetype_queries, census_schema, default_cheater_strategies, default_epsilon_grid,
    default_k_list, gen_census_like, rates_for_grid, roc_auc, roc_sweep, run_single_cloud,
    run_two_cloud, write_roc_csv, PlayerLedger, PlayerStats, RocPoint, RoundOutcome, SimRun,
    SingleCloudVerifier, TrialSummary, TwoCloudMode,
};
pub use verifier::{
    audit_exact, claims_match, deviation_samples, estimate_error_rates, local_verify_aggregate,
    local_verify_selection, mcdiarmid_bound, mcdiarmid_bound_mean, mcdiarmid_bound_raw,
    sample_size_real, show_work_audit, solve_sample_size, AuditVerdict, CheaterSet,
    DeviationSample, EpsilonPolicy, EscalateReason, Verdict, WorkResponse,
};
