//! Randomized property tests for the crate's structural invariants.

use proptest::prelude::*;

use veriq_core::authstore::canonical_encode;
use veriq_core::incentives::{alpha_equalizer_two_cloud, Action};
use veriq_core::rng::seed_rng;
use veriq_core::simlab::{run_single_cloud, run_two_cloud, SingleCloudVerifier, TwoCloudMode};
use veriq_core::verifier::{mcdiarmid_bound, solve_sample_size};
use veriq_core::{
    alpha_practical_two_cloud, alpha_threshold_two_cloud, best_response_single_cloud,
    best_response_two_cloud, eval_exact, hmac, mcdiarmid_bound_mean, random_valid_config,
    sign_relation, GameForm, Predicate, Query, QueryKind, QueryResult, Responder, Schema,
    ServerStrategy, TwoCloudContract,
};

const KEY: &[u8] = b"property-key-0123456789abcdef012";

fn arb_values() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-1_000_000i64..1_000_000, 1..6)
}

proptest! {
    #[test]
    fn hmac_is_deterministic_and_key_sensitive(
        key in prop::collection::vec(any::<u8>(), 1..64),
        msg in prop::collection::vec(any::<u8>(), 0..128),
    ) {
        let a = hmac(&key, &msg).unwrap();
        let b = hmac(&key, &msg).unwrap();
        prop_assert_eq!(a, b);
        let mut other_key = key.clone();
        other_key[0] ^= 0x01;
        prop_assert_ne!(a, hmac(&other_key, &msg).unwrap());
    }

    #[test]
    fn canonical_encoding_is_injective(
        id1 in 1u64..10_000, vals1 in arb_values(),
        id2 in 1u64..10_000, vals2 in arb_values(),
    ) {
        let e1 = canonical_encode(id1, &vals1);
        let e2 = canonical_encode(id2, &vals2);
        if (id1, &vals1) != (id2, &vals2) {
            prop_assert_ne!(e1, e2);
        } else {
            prop_assert_eq!(e1, e2);
        }
    }

    #[test]
    fn query_json_roundtrip(
        kind in 0usize..5,
        attr_pick in 0usize..2,
        low in -100i64..100,
        width in 0i64..100,
    ) {
        let attr = ["a", "b"][attr_pick].to_string();
        let kind = match kind {
            0 => QueryKind::Count,
            1 => QueryKind::Sum(attr.clone()),
            2 => QueryKind::Avg(attr.clone()),
            3 => QueryKind::StdDev(attr.clone()),
            _ => QueryKind::Select,
        };
        let predicate = Predicate::and(
            Predicate::Range { attr, low: Some(low), high: Some(low + width), inclusive: true },
            Predicate::or(Predicate::eq("a", low), Predicate::True),
        );
        let q = Query { kind, predicate };
        let json = serde_json::to_string(&q).unwrap();
        let back: Query = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(q, back);
    }

    #[test]
    fn mcdiarmid_bound_clamped_and_monotone(
        eps_base in 0.0f64..2.0,
        c in 0.001f64..10.0,
        k in 1u64..5000,
    ) {
        let b0 = mcdiarmid_bound_mean(eps_base, k, c).unwrap();
        let b1 = mcdiarmid_bound_mean(eps_base + 0.1, k, c).unwrap();
        prop_assert!((0.0..=1.0).contains(&b0));
        prop_assert!(b1 <= b0 + 1e-12);
        let clamped = mcdiarmid_bound(eps_base, &vec![c / k as f64; k as usize]).unwrap();
        prop_assert!((clamped - b0).abs() < 1e-9);
    }

    #[test]
    fn solved_sample_size_is_minimal(
        eps in 0.01f64..5.0,
        delta in 0.0001f64..0.5,
        c in 0.1f64..20.0,
    ) {
        let k = solve_sample_size(eps, delta, c).unwrap();
        prop_assert!(mcdiarmid_bound_mean(eps, k, c).unwrap() <= delta + 1e-12);
        if k > 1 {
            prop_assert!(mcdiarmid_bound_mean(eps, k - 1, c).unwrap() > delta - 1e-12);
        }
    }

    #[test]
    fn thresholds_are_probabilities_and_monotone_in_fine(
        gain in 0.0f64..50.0,
        fine in 1.0f64..1000.0,
        price in 1.0f64..50.0,
    ) {
        let t = alpha_threshold_two_cloud(gain, fine, price).unwrap();
        prop_assert!((0.0..1.0).contains(&t));
        let t2 = alpha_threshold_two_cloud(gain, fine * 2.0, price).unwrap();
        prop_assert!(t2 <= t);
        let practical = alpha_practical_two_cloud(price, fine).unwrap();
        if gain <= price {
            prop_assert!(practical.consistent >= t - 1e-12);
        }
    }

    #[test]
    fn best_response_flips_at_the_equalizer(seed in 0u64..500) {
        let mut rng = seed_rng(seed);
        let mut cfg = random_valid_config(&mut rng, GameForm::TwoCloud);
        let flip = alpha_equalizer_two_cloud(&cfg).unwrap();
        if flip > 0.011 && flip < 0.98 {
            cfg.alpha = flip + 0.01;
            cfg.info_value_honest = cfg.info_value_honest.max((1.0 + cfg.alpha) * cfg.price);
            prop_assert_eq!(
                best_response_two_cloud(&cfg, TwoCloudContract::One).unwrap(),
                Action::Honest
            );
            cfg.alpha = (flip - 0.01).max(0.0);
            prop_assert_eq!(
                best_response_two_cloud(&cfg, TwoCloudContract::One).unwrap(),
                Action::Cheat
            );
        }
    }

    #[test]
    fn single_cloud_best_response_flips_at_threshold(seed in 0u64..500) {
        let mut rng = seed_rng(seed);
        let mut cfg = random_valid_config(&mut rng, GameForm::SingleCloud);
        let flip = veriq_core::alpha_threshold_single_cloud(&cfg).unwrap();
        if flip > 0.011 && flip < 0.98 {
            cfg.alpha = flip + 0.01;
            prop_assert_eq!(best_response_single_cloud(&cfg).unwrap(), Action::Honest);
            cfg.alpha = (flip - 0.01).max(0.0);
            prop_assert_eq!(best_response_single_cloud(&cfg).unwrap(), Action::Cheat);
        }
    }
}

fn tiny_relation(rows: i64) -> veriq_core::SignedRelation {
    let schema = Schema::new(vec!["a"]).unwrap();
    let data: Vec<Vec<i64>> = (0..rows).map(|i| vec![(i * 13) % 101]).collect();
    sign_relation(schema, data, KEY).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transfers_conserve_cash_in_both_games(seed in 0u64..10_000) {
        let rel = tiny_relation(100);
        let query = Query { kind: QueryKind::Avg("a".into()), predicate: Predicate::True };
        let mut rng = seed_rng(seed);
        let strategies = [
            ServerStrategy::Honest,
            ServerStrategy::Sample { k: 10 },
            ServerStrategy::Laplace { divisor: 5.0 },
        ];
        let cfg = random_valid_config(&mut rng, GameForm::TwoCloud);
        let s1 = &strategies[(seed % 3) as usize];
        let s2 = &strategies[(seed / 3 % 3) as usize];
        for contract in [TwoCloudContract::One, TwoCloudContract::Two { audit_reimbursed: true }] {
            let run = run_two_cloud(
                &rel, &query, &cfg, s1, s2, contract,
                &TwoCloudMode::Real { key: KEY.to_vec() }, 50, seed, true,
            ).unwrap();
            for r in &run.rounds {
                prop_assert!(r.transfer_balance().abs() < 1e-9);
            }
        }
        let run = run_single_cloud(
            &rel, &query, &cfg, s1,
            &SingleCloudVerifier::Sketch {
                policy: veriq_core::EpsilonPolicy::relative(0.1).unwrap(),
                k: 20,
                key: KEY.to_vec(),
            },
            50, seed, true,
        ).unwrap();
        for r in &run.rounds {
            prop_assert!(r.transfer_balance().abs() < 1e-9);
        }
    }

    #[test]
    fn sampling_cheater_selections_only_omit(seed in 0u64..10_000, k in 1usize..60) {
        let rel = tiny_relation(80);
        let query = Query {
            kind: QueryKind::Select,
            predicate: Predicate::gt("a", 30),
        };
        let truth: std::collections::BTreeSet<u64> = match eval_exact(&rel, &query).unwrap() {
            QueryResult::Selection(ts) => ts.iter().map(|t| t.id).collect(),
            _ => unreachable!(),
        };
        let mut rng = seed_rng(seed);
        let cfg = random_valid_config(&mut rng, GameForm::SingleCloud);
        let responder =
            Responder::new(ServerStrategy::Sample { k }, &rel, &query, &cfg).unwrap();
        let resp = responder.respond(&rel, &mut rng).unwrap();
        if let QueryResult::Selection(claimed) = resp.claim {
            for t in claimed {
                prop_assert!(truth.contains(&t.id), "fabricated id {}", t.id);
            }
        } else {
            prop_assert!(false, "expected a selection claim");
        }
    }
}
