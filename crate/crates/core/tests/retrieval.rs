mod common;

use std::collections::BTreeSet;
use std::io::Cursor;

use aptkit::retrieval::{neighbours_over_union, NeighbourIndex, Query, SynonymLexicon};
use aptkit::{cosine, SparseVector};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn none() -> BTreeSet<String> {
    BTreeSet::new()
}

proptest! {
    #[test]
    fn results_are_ordered_and_positive(seed in any::<u64>(), n in 1usize..40) {
        let store = weighted_store(&mut ChaCha8Rng::seed_from_u64(seed), 60, 30, 8);
        let index = NeighbourIndex::new(&store);
        for entry in store.vocab.keys().take(5) {
            let got = index.top_n(Query::Entry(entry), n, &none()).unwrap();
            prop_assert!(got.len() <= n);
            prop_assert!(!got.names().contains(&entry.as_str()));
            for pair in got.neighbours.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                prop_assert!(a.similarity > b.similarity
                    || (a.similarity == b.similarity && a.name < b.name));
            }
            prop_assert!(got.iter().all(|x| x.similarity > 0.0 && x.similarity <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn top_n_matches_a_full_scan(seed in any::<u64>(), n in 1usize..20) {
        let store = weighted_store(&mut ChaCha8Rng::seed_from_u64(seed), 40, 20, 6);
        let index = NeighbourIndex::new(&store);
        for (entry, q) in store.vocab.iter().take(5) {
            let got = index.top_n(Query::Entry(entry), n, &none()).unwrap();
            let mut scan: Vec<(i64, &String)> = store
                .vocab
                .iter()
                .filter(|(name, _)| *name != entry)
                .map(|(name, v)| ((cosine(q, v) * 1e12).round() as i64, name))
                .filter(|(s, _)| *s > 0)
                .collect();
            scan.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
            let want: Vec<&str> = scan.iter().take(n).map(|(_, name)| name.as_str()).collect();
            prop_assert_eq!(got.names(), want);
        }
    }

    #[test]
    fn rankings_ignore_query_scale(seed in any::<u64>(), factor in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let store = weighted_store(&mut rng, 50, 20, 6);
        let index = NeighbourIndex::new(&store);
        let q = SparseVector::from_pairs(random_vector(&mut rng, 20, 6));
        let scaled = q.scale(factor);
        let a = index.top_n(Query::Vector(&q), 15, &none()).unwrap();
        let b = index.top_n(Query::Vector(&scaled), 15, &none()).unwrap();
        prop_assert_eq!(a.names(), b.names());
    }

    #[test]
    fn density_window_is_a_prefix_of_top_n(seed in any::<u64>(), delta in 0.01f64..=1.0, cap in 1usize..30) {
        let store = weighted_store(&mut ChaCha8Rng::seed_from_u64(seed), 50, 20, 6);
        let index = NeighbourIndex::new(&store);
        for entry in store.vocab.keys().take(5) {
            let window = index.density_window(Query::Entry(entry), delta, cap, &none()).unwrap();
            let top = index.top_n(Query::Entry(entry), cap, &none()).unwrap();
            prop_assert!(window.len() <= top.len());
            prop_assert_eq!(&top.neighbours[..window.len()], &window.neighbours[..]);
            if let Some(best) = window.neighbours.first() {
                prop_assert!(window.iter().all(|n| n.similarity >= best.similarity - delta));
            }
            // with the widest window the cap is all that limits it
            let wide = index.density_window(Query::Entry(entry), 1.0, cap, &none()).unwrap();
            prop_assert_eq!(&wide, &top);
        }
    }

    #[test]
    fn excluded_entries_are_never_returned(seed in any::<u64>()) {
        let store = weighted_store(&mut ChaCha8Rng::seed_from_u64(seed), 30, 15, 6);
        let index = NeighbourIndex::new(&store);
        let exclude: BTreeSet<String> = store.vocab.keys().step_by(3).cloned().collect();
        for entry in store.vocab.keys().take(5) {
            let got = index.top_n(Query::Entry(entry), 30, &exclude).unwrap();
            prop_assert!(got.iter().all(|n| !exclude.contains(&n.name)));
        }
    }
}

#[test]
fn unknown_entries_are_errors() {
    let store = weighted_store(&mut ChaCha8Rng::seed_from_u64(1), 5, 5, 3);
    let index = NeighbourIndex::new(&store);
    assert!(index.top_n(Query::Entry("missing"), 3, &none()).is_err());
    assert!(index.top_n(Query::Entry("missing"), 0, &none()).is_err());
}

#[test]
fn density_window_rejects_bad_parameters() {
    let store = weighted_store(&mut ChaCha8Rng::seed_from_u64(1), 5, 5, 3);
    let index = NeighbourIndex::new(&store);
    let q = Query::Entry("e0000");
    assert!(index.density_window(q, 0.0, 10, &none()).is_err());
    assert!(index.density_window(q, 1.5, 10, &none()).is_err());
    assert!(index.density_window(q, 0.1, 0, &none()).is_err());
}

#[test]
fn lexicon_neighbours_are_in_vocabulary_synonyms() {
    let store = weighted_store(&mut ChaCha8Rng::seed_from_u64(2), 10, 8, 4);
    let index = NeighbourIndex::new(&store);
    let lexicon =
        SynonymLexicon::read(Cursor::new("e0000\te0001,e0002,not-there,e0000\n")).unwrap();
    let got = index
        .lexicon_neighbours(&lexicon, "e0000", 10, &none())
        .unwrap();
    let names: BTreeSet<&str> = got.names().into_iter().collect();
    assert_eq!(names, BTreeSet::from(["e0001", "e0002"]));
    let capped = index
        .lexicon_neighbours(&lexicon, "e0000", 1, &none())
        .unwrap();
    assert_eq!(capped.len(), 1);
    assert_eq!(capped.neighbours[0], got.neighbours[0]);
}

#[test]
fn ad_hoc_vectors_join_the_pool() {
    let store = weighted_store(&mut ChaCha8Rng::seed_from_u64(3), 20, 10, 5);
    let copy = store.vocab["e0003"].clone();
    let extra = vec![("phrase".to_string(), copy.clone())];
    let got = neighbours_over_union(&store, extra, &copy, 3);
    let names = got.names();
    assert!(names.contains(&"phrase") && names.contains(&"e0003"));
    // equal vectors tie exactly and fall back to name order
    assert_eq!(got.neighbours[0].name, "e0003");
    assert_eq!(got.neighbours[1].name, "phrase");
    assert_eq!(got.neighbours[0].similarity, got.neighbours[1].similarity);
}
