use std::collections::BTreeMap;

use proptest::prelude::*;
use serde_json::{json, Map, Value};

use didbench_core::did::OperationKind;
use didbench_core::mls::{
    aggregate_mls, flatten_payload, mls_per_operation, shannon_entropy, FlattenOptions, ListPaths, Token,
    TokenDistribution,
};

fn payload(fields: &[(u8, u8)]) -> Value {
    Value::Object(fields.iter().map(|(k, v)| (format!("k{k}"), json!(format!("v{v}")))).collect::<Map<_, _>>())
}

fn corpus() -> impl Strategy<Value = Vec<Vec<(u8, u8)>>> {
    let fields = prop::collection::btree_map(0u8..6, 0u8..4, 1..6).prop_map(|m| m.into_iter().collect::<Vec<_>>());
    prop::collection::vec(fields, 1..6)
}

fn entropy_of(corpus: &[Vec<(u8, u8)>]) -> f64 {
    let payloads: Vec<Value> = corpus.iter().map(|p| payload(p)).collect();
    mls_per_operation(&payloads, &FlattenOptions::default()).unwrap().raw_entropy
}

proptest! {
    #[test]
    fn entropy_is_bounded(c in corpus()) {
        let payloads: Vec<Value> = c.iter().map(|p| payload(p)).collect();
        let r = mls_per_operation(&payloads, &FlattenOptions::default()).unwrap();
        prop_assert!(r.raw_entropy >= 0.0);
        prop_assert!(r.raw_entropy <= (r.distinct_tokens as f64).log2() + 1e-12);
        prop_assert_eq!(r.bits_per_txn, r.bits_per_token * r.avg_tokens_per_txn);
    }

    #[test]
    fn payload_order_is_irrelevant(mut c in corpus(), rotate in 0usize..5) {
        let before = entropy_of(&c);
        let n = c.len();
        c.rotate_left(rotate % n);
        for p in &mut c {
            p.reverse();
        }
        prop_assert_eq!(before, entropy_of(&c));
    }

    #[test]
    fn equifrequent_tokens_reach_the_bound(k in 1usize..64, repeats in 1usize..5) {
        let lists: Vec<Vec<Token>> =
            (0..repeats).map(|_| (0..k).map(|i| Token::new(format!("f{i}"), "x")).collect()).collect();
        let dist = TokenDistribution::from_token_lists(lists);
        let h = shannon_entropy(&dist).unwrap();
        prop_assert!((h - (k as f64).log2()).abs() <= 1e-12);
    }

    #[test]
    fn aggregate_is_arithmetic_over_ops(c in prop::collection::vec(corpus(), 1..4)) {
        let ops = [OperationKind::Update, OperationKind::Revoke, OperationKind::Delete];
        let per_op: BTreeMap<_, _> = ops
            .iter()
            .zip(&c)
            .map(|(op, corpus)| {
                let payloads: Vec<Value> = corpus.iter().map(|p| payload(p)).collect();
                (*op, mls_per_operation(&payloads, &FlattenOptions::default()).unwrap())
            })
            .collect();
        let agg = aggregate_mls(&per_op).unwrap();
        let sum: f64 = per_op.values().map(|r| r.bits_per_txn).sum();
        let weighted: f64 = per_op.values().map(|r| r.bits_per_txn * r.txn_count as f64).sum();
        let txns: usize = per_op.values().map(|r| r.txn_count).sum();
        prop_assert!((agg.bits_per_txn_total - sum).abs() <= 1e-12);
        prop_assert!((agg.bits_total_weighted - weighted).abs() <= 1e-9);
        prop_assert!((agg.bits_total - sum * txns as f64).abs() <= 1e-9);
    }
}

#[test]
fn flattening_uses_dotted_paths_and_list_indices() {
    let p = json!({"message": {"operation": "update", "keys": ["a", "b"]}, "n": 3});
    let tokens = flatten_payload(&p, &FlattenOptions::default());
    assert!(tokens.contains(&Token::new("message.operation", "update")));
    assert!(tokens.contains(&Token::new("message.keys[1]", "b")));
    assert!(tokens.contains(&Token::new("n", "3")));
    assert_eq!(tokens.len(), 4);
    let free = FlattenOptions { list_paths: ListPaths::IndexFree, ..Default::default() };
    assert!(flatten_payload(&p, &free).contains(&Token::new("message.keys[]", "b")));
}

#[test]
fn identical_multi_token_payloads_carry_path_entropy() {
    // Only single-token corpora reach zero; k distinct paths repeated give log2(k).
    let payloads = vec![json!({"a": 1, "b": "x"}); 100];
    let r = mls_per_operation(&payloads, &FlattenOptions::default()).unwrap();
    assert_eq!(r.raw_entropy, 1.0);
    assert_eq!(r.bits_per_txn, 0.01);
    let single = vec![json!({"op": "update"}); 100];
    assert_eq!(mls_per_operation(&single, &FlattenOptions::default()).unwrap().bits_per_txn, 0.0);
}

#[test]
fn copying_a_payload_can_raise_entropy() {
    let small = vec![(0, 0)];
    let large = vec![(1, 0), (2, 0), (3, 0)];
    let before = entropy_of(&[small.clone(), small, large.clone()]);
    let after = entropy_of(&[large.clone(), vec![(0, 0)], large]);
    let h = |ps: &[f64]| -ps.iter().map(|p| p * p.log2()).sum::<f64>();
    assert!((before - h(&[0.4, 0.2, 0.2, 0.2])).abs() < 1e-12);
    assert!((after - h(&[1.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0])).abs() < 1e-12);
    assert!(after > before);
}
