mod common;

use aptkit::ingest::{CooccurrenceEvent, Feature};
use aptkit::store::{
    accumulate, filter, load, save, sppmi, FilterThresholds, ShiftK, StoreMeta, VectorStore,
};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn counts(seed: u64) -> std::collections::BTreeMap<(String, String), u64> {
    random_counts(&mut ChaCha8Rng::seed_from_u64(seed), 20, 20)
}

fn k(v: f64) -> ShiftK {
    ShiftK::new(v).unwrap()
}

fn total_nnz(s: &VectorStore) -> usize {
    s.vocab.values().map(|v| v.nnz()).sum()
}

proptest! {
    #[test]
    fn k1_is_plain_ppmi(seed in any::<u64>()) {
        let c = counts(seed);
        let weighted = sppmi(&raw_store(&c), k(1.0)).unwrap();
        for ((w, f), want) in direct_sppmi(&c, 1.0) {
            let got = weighted.weight(&w, &f).unwrap_or(0.0);
            prop_assert!((got - want).abs() <= 1e-9, "{} {}: {} vs {}", w, f, got, want);
        }
    }

    #[test]
    fn weights_shrink_as_k_grows(seed in any::<u64>(), k1 in 1.0f64..50.0, dk in 0.0f64..50.0) {
        let raw = raw_store(&counts(seed));
        let lo = sppmi(&raw, k(k1)).unwrap();
        let hi = sppmi(&raw, k(k1 + dk)).unwrap();
        for (target, v) in &hi.vocab {
            for (id, w) in v.iter() {
                let before = lo.vocab[target].get(id).unwrap_or(0.0);
                prop_assert!(before >= w);
            }
        }
    }

    #[test]
    fn weighted_cells_are_positive_and_fewer(seed in any::<u64>(), kv in 1.0f64..100.0) {
        let raw = raw_store(&counts(seed));
        let weighted = sppmi(&raw, k(kv)).unwrap();
        prop_assert!(weighted.vocab.values().flat_map(|v| v.iter()).all(|(_, w)| w > 0.0));
        prop_assert!(total_nnz(&weighted) <= total_nnz(&raw));
    }

    #[test]
    fn filtering_never_adds_cells(
        seed in any::<u64>(),
        min_feature_count in 0u64..60,
        min_nnz in 0usize..10,
        min_term_freq in 0u64..200,
    ) {
        let raw = raw_store(&counts(seed));
        let t = FilterThresholds { min_feature_count, min_nnz, min_term_freq };
        let filtered = filter(&raw, t).unwrap();
        prop_assert!(total_nnz(&filtered) <= total_nnz(&raw));
        // every surviving cell keeps its count
        for (target, v) in &filtered.vocab {
            for (text, w) in filtered.named_entries(target).unwrap() {
                prop_assert_eq!(raw.weight(target, text), Some(w));
            }
            prop_assert!(v.nnz() >= min_nnz);
            prop_assert!(raw.target_marginals[target] >= min_term_freq as f64);
        }
        // the feature stage sees raw totals; later stages may lower them
        for target in filtered.vocab.keys() {
            for (text, _) in filtered.named_entries(target).unwrap() {
                let id = raw.interner.id(text).unwrap();
                prop_assert!(raw.feature_marginals[&id] >= min_feature_count as f64);
            }
        }
    }

    #[test]
    fn raw_marginals_are_consistent(seed in any::<u64>(), min_nnz in 0usize..6) {
        let raw = raw_store(&counts(seed));
        let filtered = filter(&raw, FilterThresholds { min_nnz, ..FilterThresholds::NONE }).unwrap();
        for s in [&raw, &filtered] {
            let rows: f64 = s.target_marginals.values().sum();
            let cols: f64 = s.feature_marginals.values().sum();
            let cells: f64 = s.vocab.values().map(|v| v.sum()).sum();
            let tol = 1e-6 * s.grand_total.max(1.0);
            prop_assert!((rows - s.grand_total).abs() <= tol);
            prop_assert!((cols - s.grand_total).abs() <= tol);
            prop_assert!((cells - s.grand_total).abs() <= tol);
        }
    }

    #[test]
    fn save_load_round_trip(seed in any::<u64>(), weighted in any::<bool>(), gz in any::<bool>()) {
        let mut store = raw_store(&counts(seed));
        if weighted {
            store = sppmi(&store, k(2.0)).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(if gz { "s.gz" } else { "s.txt" });
        save(&store, &path).unwrap();
        let back = load(&path).unwrap();
        prop_assert_eq!(&back, &store);
        for (target, v) in &store.vocab {
            let a: Vec<(u32, u64)> = v.iter().map(|(i, w)| (i, w.to_bits())).collect();
            let b: Vec<(u32, u64)> = back.vocab[target].iter().map(|(i, w)| (i, w.to_bits())).collect();
            prop_assert_eq!(a, b);
        }
    }
}

fn event(t: &str, f: &str, n: u64) -> CooccurrenceEvent {
    CooccurrenceEvent {
        target: t.into(),
        feature: Feature::Untyped(f.into()),
        count: n,
    }
}

#[test]
fn hand_worked_cell() {
    // grand total 100, count 10, both marginals 20
    let events = [
        event("w", "c", 10),
        event("w", "x", 10),
        event("y", "c", 10),
        event("y", "z", 70),
    ];
    let raw = accumulate(&events, StoreMeta::untyped(2));
    assert_eq!(raw.grand_total, 100.0);
    let w1 = sppmi(&raw, k(1.0)).unwrap().weight("w", "c").unwrap();
    assert!((w1 - 2.5f64.ln()).abs() < 1e-12);
    assert!((w1 - 0.9163).abs() < 1e-4);
    assert_eq!(sppmi(&raw, k(5.0)).unwrap().weight("w", "c"), None);
}

#[test]
fn duplicate_events_add_up() {
    let raw = accumulate(
        &[event("a", "b", 1), event("a", "b", 1)],
        StoreMeta::untyped(2),
    );
    assert_eq!(raw.weight("a", "b"), Some(2.0));
}

#[test]
fn empty_events_give_an_empty_store() {
    let raw = accumulate(&[], StoreMeta::typed(3));
    assert!(raw.is_empty());
    assert_eq!(raw.grand_total, 0.0);
}

#[test]
fn filter_stages_run_in_order() {
    // f3 has total count 3 and goes first; "b" then keeps a single feature
    // and fails nnz >= 2, although it had two features before
    let events = [
        event("a", "f1", 5),
        event("a", "f2", 5),
        event("b", "f1", 5),
        event("b", "f3", 3),
    ];
    let raw = accumulate(&events, StoreMeta::untyped(2));
    let t = FilterThresholds {
        min_feature_count: 4,
        min_nnz: 2,
        min_term_freq: 0,
    };
    let out = filter(&raw, t).unwrap();
    assert_eq!(out.vocab.keys().collect::<Vec<_>>(), vec!["a"]);
    assert!(out.interner.id("f3").is_none());
    assert!(!out.feature_marginals.values().any(|m| *m == 3.0));
}

#[test]
fn filter_requires_a_raw_store() {
    let raw = accumulate(&[event("a", "b", 3)], StoreMeta::untyped(2));
    let weighted = sppmi(&raw, k(1.0)).unwrap();
    assert!(filter(&weighted, FilterThresholds::NONE).is_err());
    assert!(sppmi(&weighted, k(1.0)).is_err());
}

#[test]
fn shift_below_one_is_rejected() {
    assert!(ShiftK::new(0.5).is_err());
    assert!(ShiftK::new(f64::NAN).is_err());
}

#[test]
fn corrupt_files_fail_to_load() {
    let dir = tempfile::tempdir().unwrap();
    let raw = accumulate(&[event("a", "b", 3)], StoreMeta::untyped(2));
    let path = dir.path().join("s.txt");
    save(&raw, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();

    let bad_magic = dir.path().join("magic.txt");
    std::fs::write(&bad_magic, text.replacen("aptkit-vsm", "something-else", 1)).unwrap();
    assert!(load(&bad_magic).is_err());

    let bad_version = dir.path().join("version.txt");
    std::fs::write(
        &bad_version,
        text.replacen("format_version\t1", "format_version\t99", 1),
    )
    .unwrap();
    assert!(load(&bad_version).is_err());

    let truncated = dir.path().join("truncated.txt");
    std::fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    assert!(load(&truncated).is_err());
}
