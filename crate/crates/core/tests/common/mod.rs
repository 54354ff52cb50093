//! Independent reference implementations and random fixtures shared by the
//! integration tests. Nothing here calls the code it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;

use aptkit::ingest::{CooccurrenceEvent, Feature};
use aptkit::ingest::{DependencySentence, TokenRecord};
use aptkit::store::{accumulate, ShiftK, StoreMeta, VectorStore, Weighting};
use aptkit::SparseVector;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// A token as (lemma, pos, head, rel) with 1-based heads, 0 for the root.
pub type Tok = (String, String, usize, String);

pub const LABELS: &[&str] = &["amod", "nsubj", "dobj", "det", "nmod:poss"];
pub const LEMMAS: &[&str] = &["white", "house", "cat", "see", "the", "big", "dog"];

/// A random tree of 1..=max_len tokens; roughly one token in six is PUNCT.
pub fn random_tree(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Tok> {
    let n = rng.random_range(1..=max_len);
    // attach each token to a random earlier one in a shuffled order
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut heads = vec![0usize; n];
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        heads[order[i]] = parent + 1;
    }
    (0..n)
        .map(|i| {
            let pos = if rng.random_bool(1.0 / 6.0) {
                "PUNCT"
            } else {
                "X"
            };
            let rel = if heads[i] == 0 {
                "root".to_string()
            } else {
                LABELS.choose(rng).unwrap().to_string()
            };
            (
                LEMMAS.choose(rng).unwrap().to_string(),
                pos.to_string(),
                heads[i],
                rel,
            )
        })
        .collect()
}

pub fn sentence(toks: &[Tok]) -> DependencySentence {
    DependencySentence::new(
        toks.iter()
            .enumerate()
            .map(|(i, (lemma, pos, head, rel))| TokenRecord {
                index: i + 1,
                lemma: lemma.clone(),
                pos: pos.clone(),
                head: *head,
                rel: rel.clone(),
            })
            .collect(),
    )
    .expect("generated trees are valid")
}

/// Every (target, `path:lexeme`) pair over tree paths of 1..=max_order
/// edges, found by breadth-first search from each token. PUNCT endpoints
/// are dropped.
pub fn brute_typed(toks: &[Tok], max_order: usize) -> BTreeMap<(String, String), u64> {
    let n = toks.len();
    let mut adj = vec![Vec::new(); n];
    for (i, t) in toks.iter().enumerate() {
        if t.2 > 0 {
            adj[i].push(t.2 - 1);
            adj[t.2 - 1].push(i);
        }
    }
    let step = |from: usize, to: usize| -> String {
        if toks[from].2 == to + 1 {
            format!("_{}", toks[from].3)
        } else {
            toks[to].3.clone()
        }
    };
    let mut out = BTreeMap::new();
    for s in 0..n {
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        for t in 0..n {
            if t == s || toks[s].1 == "PUNCT" || toks[t].1 == "PUNCT" {
                continue;
            }
            let mut nodes = vec![t];
            while *nodes.last().unwrap() != s {
                nodes.push(parent[*nodes.last().unwrap()]);
            }
            nodes.reverse();
            if nodes.len() - 1 > max_order {
                continue;
            }
            let path: Vec<String> = nodes.windows(2).map(|w| step(w[0], w[1])).collect();
            let feature = format!("{}:{}", path.join("»"), toks[t].0);
            *out.entry((toks[s].0.clone(), feature)).or_insert(0) += 1;
        }
    }
    out
}

pub fn event_multiset(events: &[CooccurrenceEvent]) -> BTreeMap<(String, String), u64> {
    let mut out = BTreeMap::new();
    for e in events {
        *out.entry((e.target.clone(), e.feature.to_string()))
            .or_insert(0) += e.count;
    }
    out
}

/// Random raw count table of up to `rows` x `cols` cells.
pub fn random_counts(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
) -> BTreeMap<(String, String), u64> {
    let r = rng.random_range(1..=rows);
    let c = rng.random_range(1..=cols);
    let density = rng.random_range(0.1..0.9);
    let mut out = BTreeMap::new();
    for i in 0..r {
        for j in 0..c {
            if rng.random_bool(density) {
                out.insert((format!("w{i}"), format!("c{j}")), rng.random_range(1..=40));
            }
        }
    }
    if out.is_empty() {
        out.insert(("w0".to_string(), "c0".to_string()), 1);
    }
    out
}

pub fn raw_store(counts: &BTreeMap<(String, String), u64>) -> VectorStore {
    let events: Vec<CooccurrenceEvent> = counts
        .iter()
        .map(|((w, c), &n)| CooccurrenceEvent {
            target: w.clone(),
            feature: Feature::Untyped(c.clone()),
            count: n,
        })
        .collect();
    accumulate(&events, StoreMeta::untyped(2))
}

/// max(ln(count * total / (row * col)) - ln k, 0) straight from the table.
pub fn direct_sppmi(
    counts: &BTreeMap<(String, String), u64>,
    k: f64,
) -> BTreeMap<(String, String), f64> {
    let mut rows: BTreeMap<&str, f64> = BTreeMap::new();
    let mut cols: BTreeMap<&str, f64> = BTreeMap::new();
    let mut total = 0.0;
    for ((w, c), &n) in counts {
        *rows.entry(w).or_default() += n as f64;
        *cols.entry(c).or_default() += n as f64;
        total += n as f64;
    }
    counts
        .iter()
        .map(|((w, c), &n)| {
            let pmi = (n as f64 * total / (rows[w.as_str()] * cols[c.as_str()])).ln();
            ((w.clone(), c.clone()), (pmi - k.ln()).max(0.0))
        })
        .collect()
}

/// Ranks by counting, ties sharing the average rank, then Pearson.
pub fn naive_spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|x| {
                let below = v.iter().filter(|y| *y < x).count() as f64;
                let equal = v.iter().filter(|y| *y == x).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Random list with deliberate ties (values drawn from a small set).
pub fn tied_list(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let levels = rng.random_range(2..=n.max(2));
    (0..n)
        .map(|_| rng.random_range(0..levels) as f64 * 0.5)
        .collect()
}

/// Random sparse vectors as feature-id -> weight maps.
pub fn random_vector(rng: &mut ChaCha8Rng, dims: u32, max_nnz: usize) -> BTreeMap<u32, f64> {
    let nnz = rng.random_range(0..=max_nnz);
    let mut out = BTreeMap::new();
    for _ in 0..nnz {
        let w = if rng.random_bool(0.3) {
            rng.random_range(1..4) as f64
        } else {
            rng.random_range(0.01..5.0)
        };
        out.insert(rng.random_range(0..dims), w);
    }
    out
}

pub fn naive_cosine(a: &BTreeMap<u32, f64>, b: &BTreeMap<u32, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn support<K: Ord + Clone, V>(m: &BTreeMap<K, V>) -> BTreeSet<K> {
    m.keys().cloned().collect()
}

/// A store marked as weighted, filled with random vectors named `e0000`...
pub fn weighted_store(
    rng: &mut ChaCha8Rng,
    entries: usize,
    dims: u32,
    max_nnz: usize,
) -> VectorStore {
    let mut store = VectorStore::empty(StoreMeta::untyped(2));
    store.meta.weighting = Weighting::Sppmi(ShiftK::new(1.0).unwrap());
    for i in 0..entries {
        let v = random_vector(rng, dims, max_nnz);
        store
            .vocab
            .insert(format!("e{i:04}"), SparseVector::from_pairs(v));
    }
    store
}
