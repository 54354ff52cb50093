mod common;

use std::collections::BTreeMap;
use std::io::Cursor;

use aptkit::ingest::{
    extract_typed, extract_window, open_input, parse_conll, ConllReader, Feature, IngestConfig,
    KeyScheme,
};
use aptkit::TypedFeature;
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tree(seed: u64) -> Vec<Tok> {
    random_tree(&mut ChaCha8Rng::seed_from_u64(seed), 8)
}

proptest! {
    #[test]
    fn typed_events_match_brute_force(seed in any::<u64>(), order in 1usize..=4) {
        let toks = tree(seed);
        let got = event_multiset(&extract_typed(&sentence(&toks), order, &IngestConfig::default()));
        prop_assert_eq!(got, brute_typed(&toks, order));
    }

    #[test]
    fn every_typed_event_has_its_inverse(seed in any::<u64>(), order in 1usize..=4) {
        let toks = tree(seed);
        let events = extract_typed(&sentence(&toks), order, &IngestConfig::default());
        let mut counts: BTreeMap<(String, TypedFeature), u64> = BTreeMap::new();
        for e in &events {
            let Feature::Typed(f) = &e.feature else { panic!("untyped event") };
            *counts.entry((e.target.clone(), f.clone())).or_default() += e.count;
        }
        for ((target, f), n) in &counts {
            let dual = (f.lexeme.clone(), TypedFeature::new(f.path.inverse(), target.clone()));
            prop_assert_eq!(counts.get(&dual), Some(n), "no dual for {} {}", target, f);
        }
    }

    #[test]
    fn typed_paths_respect_the_order_limit(seed in any::<u64>(), order in 0usize..=4) {
        let toks = tree(seed);
        for e in extract_typed(&sentence(&toks), order, &IngestConfig::default()) {
            let Feature::Typed(f) = &e.feature else { panic!("untyped event") };
            prop_assert!(!f.path.is_empty() && f.path.len() <= order);
            prop_assert!(e.count >= 1);
        }
    }

    #[test]
    fn window_counts_are_symmetric(seed in any::<u64>(), window in 0usize..=6) {
        let toks = tree(seed);
        let events = extract_window(&sentence(&toks), window, &IngestConfig::default());
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for e in &events {
            *counts.entry((e.target.clone(), e.feature.to_string())).or_default() += e.count;
        }
        for ((t, c), n) in &counts {
            prop_assert_eq!(counts.get(&(c.clone(), t.clone())), Some(n));
        }
    }

    #[test]
    fn extraction_is_deterministic(seed in any::<u64>()) {
        let toks = tree(seed);
        let cfg = IngestConfig::default();
        prop_assert_eq!(
            extract_typed(&sentence(&toks), 3, &cfg),
            extract_typed(&sentence(&toks), 3, &cfg)
        );
        prop_assert_eq!(
            extract_window(&sentence(&toks), 2, &cfg),
            extract_window(&sentence(&toks), 2, &cfg)
        );
    }
}

/// (target, feature) counts from a CoNLL snippet.
fn typed_counts(conll: &str, order: usize) -> BTreeMap<(String, String), u64> {
    let cfg = IngestConfig::default();
    let (sentences, _) = parse_conll(Cursor::new(conll), &cfg).unwrap();
    let events: Vec<_> = sentences
        .iter()
        .flat_map(|s| extract_typed(s, order, &cfg))
        .collect();
    event_multiset(&events)
}

const WHITE_HOUSE: &str = "\
1\tThe\tthe\tDET\t_\t_\t3\tdet\t_\t_
2\twhite\twhite\tADJ\t_\t_\t3\tamod\t_\t_
3\thouse\thouse\tNOUN\t_\t_\t0\troot\t_\t_
";

#[test]
fn white_house_second_order() {
    let got = typed_counts(WHITE_HOUSE, 2);
    let want: BTreeMap<(String, String), u64> = [
        ("house", "det:the"),
        ("house", "amod:white"),
        ("the", "_det:house"),
        ("the", "_det»amod:white"),
        ("white", "_amod:house"),
        ("white", "_amod»det:the"),
    ]
    .iter()
    .map(|(t, f)| ((t.to_string(), f.to_string()), 1))
    .collect();
    assert_eq!(got, want);
}

#[test]
fn punctuation_is_neither_target_nor_context() {
    let conll = "\
1\thouses\thouse\tNOUN\t_\t_\t2\tnsubj\t_\t_
2\tstand\tstand\tVERB\t_\t_\t0\troot\t_\t_
3\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_
";
    let typed = typed_counts(conll, 3);
    assert!(typed.keys().all(|(t, f)| t != "." && !f.ends_with(":.")));
    assert_eq!(typed.len(), 2);

    let cfg = IngestConfig::default();
    let (sentences, _) = parse_conll(Cursor::new(conll), &cfg).unwrap();
    let window = extract_window(&sentences[0], 5, &cfg);
    assert_eq!(window.len(), 2);
}

#[test]
fn invalid_sentences_are_skipped_and_counted() {
    let conll = format!(
        "{WHITE_HOUSE}\n\
1\ta\ta\tX\t_\t_\t2\tdep\t_\t_
2\tb\tb\tX\t_\t_\t1\tdep\t_\t_

1\ta\ta\tX\t_\t_\t0\troot\t_\t_
2\tb\tb\tX\t_\t_\t0\troot\t_\t_

{WHITE_HOUSE}"
    );
    let mut reader = ConllReader::new(Cursor::new(conll), IngestConfig::default());
    let sentences: Vec<_> = reader.by_ref().collect::<Result<_, _>>().unwrap();
    assert_eq!(sentences.len(), 2);
    let stats = reader.stats();
    assert_eq!((stats.sentences, stats.skipped), (2, 2));
}

#[test]
fn comments_ranges_and_empty_nodes_are_ignored() {
    let conll = "\
# text = The white house
1-2\tThewhite\t_\t_\t_\t_\t_\t_\t_\t_
1\tThe\tthe\tDET\t_\t_\t3\tdet\t_\t_
2\twhite\twhite\tADJ\t_\t_\t3\tamod\t_\t_
2.1\tghost\tghost\tX\t_\t_\t_\t_\t_\t_
3\thouse\thouse\tNOUN\t_\t_\t0\troot\t_\t_
";
    assert_eq!(typed_counts(conll, 2), typed_counts(WHITE_HOUSE, 2));
}

#[test]
fn lemma_pos_keys() {
    let cfg = IngestConfig {
        key_scheme: KeyScheme::LemmaPos,
        ..IngestConfig::default()
    };
    let (sentences, _) = parse_conll(Cursor::new(WHITE_HOUSE), &cfg).unwrap();
    let events = extract_typed(&sentences[0], 1, &cfg);
    assert!(events
        .iter()
        .any(|e| e.target == "white/ADJ" && e.feature.to_string() == "_amod:house/NOUN"));
}

#[test]
fn gzip_and_plain_inputs_agree() {
    use std::io::Write;
    let dir = tempfile::tempdir().unwrap();
    let plain = data_dir().join("mini_corpus.conll");
    let gz = dir.path().join("mini.conll.gz");
    let mut enc = flate2::write::GzEncoder::new(
        std::fs::File::create(&gz).unwrap(),
        flate2::Compression::default(),
    );
    enc.write_all(&std::fs::read(&plain).unwrap()).unwrap();
    enc.finish().unwrap();

    let cfg = IngestConfig::default();
    let (a, sa) = parse_conll(open_input(&plain).unwrap(), &cfg).unwrap();
    let (b, sb) = parse_conll(open_input(&gz).unwrap(), &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    assert_eq!(sa.sentences, 12);
}

#[test]
fn missing_input_is_an_error() {
    assert!(open_input(std::path::Path::new("/nonexistent/corpus.conll")).is_err());
}
