//! Regenerates the bundled toy data in `data/`:
//!
//! - `toy_corpus.conll.gz`: a dependency-parsed corpus drawn from a small
//!   grammar over synthetic words
//! - `toy_wordsim.tsv`: 20 word pairs with similarity ratings
//! - `toy_phrases.tsv`: phrase pairs (AN, NN, VO) with ratings
//! - `toy_lexicon.tsv`: a synonym lexicon
//!
//! Words belong to classes, and classes to superclasses. Nouns of a class
//! take the class's verbs and adjectives most of the time and their
//! superclass's otherwise, so ratings follow class membership. Everything
//! is determined by the seed.
//!
//!     cargo run --example gen_toy_corpus -- data [sentences]

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use flate2::write::GzEncoder;
use flate2::Compression;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUPERCLASSES: usize = 8;
const CLASSES_PER_SUPER: usize = 5;
const NOUNS: usize = 6;
const CLASS_ADJ: usize = 3;
const CLASS_VERBS: usize = 3;
const SHARED: usize = 2;

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "gl", "kr",
    "pl", "st", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];
const CODAS: &[&str] = &["", "", "", "n", "l", "r", "s", "t", "m"];

struct Class {
    superclass: usize,
    nouns: Vec<String>,
    adjectives: Vec<String>,
    verbs: Vec<String>,
}

struct Lexicon {
    classes: Vec<Class>,
    shared_adj: Vec<Vec<String>>,
    shared_verbs: Vec<Vec<String>>,
    adverbs: Vec<String>,
}

fn word(rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>, suffix: &str) -> String {
    loop {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).unwrap());
            w.push_str(VOWELS.choose(rng).unwrap());
        }
        w.push_str(CODAS.choose(rng).unwrap());
        w.push_str(suffix);
        if used.insert(w.clone()) {
            return w;
        }
    }
}

fn lexicon(rng: &mut ChaCha8Rng) -> Lexicon {
    let mut used = BTreeSet::new();
    let mut classes = Vec::new();
    for s in 0..SUPERCLASSES {
        for _ in 0..CLASSES_PER_SUPER {
            classes.push(Class {
                superclass: s,
                nouns: (0..NOUNS).map(|_| word(rng, &mut used, "")).collect(),
                adjectives: (0..CLASS_ADJ).map(|_| word(rng, &mut used, "ic")).collect(),
                verbs: (0..CLASS_VERBS)
                    .map(|_| word(rng, &mut used, "ate"))
                    .collect(),
            });
        }
    }
    let shared_adj = (0..SUPERCLASSES)
        .map(|_| (0..SHARED).map(|_| word(rng, &mut used, "ous")).collect())
        .collect();
    let shared_verbs = (0..SUPERCLASSES)
        .map(|_| (0..SHARED).map(|_| word(rng, &mut used, "ize")).collect())
        .collect();
    let adverbs = (0..4).map(|_| word(rng, &mut used, "ly")).collect();
    Lexicon {
        classes,
        shared_adj,
        shared_verbs,
        adverbs,
    }
}

struct Token {
    lemma: String,
    pos: &'static str,
    head: Option<usize>,
    rel: &'static str,
}

/// Mildly skewed choice among a class's nouns.
fn pick_noun<'a>(rng: &mut ChaCha8Rng, nouns: &'a [String]) -> &'a str {
    let weights: Vec<f64> = (0..nouns.len()).map(|i| 1.0 / (i as f64 + 2.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.random_range(0.0..total);
    for (n, w) in nouns.iter().zip(&weights) {
        if x < *w {
            return n;
        }
        x -= w;
    }
    nouns.last().unwrap()
}

fn adjective(rng: &mut ChaCha8Rng, lex: &Lexicon, class: usize) -> String {
    let c = &lex.classes[class];
    if rng.random_bool(0.75) {
        c.adjectives.choose(rng).unwrap().clone()
    } else {
        lex.shared_adj[c.superclass].choose(rng).unwrap().clone()
    }
}

fn noun_phrase(
    rng: &mut ChaCha8Rng,
    lex: &Lexicon,
    out: &mut Vec<Token>,
    class: usize,
    head: Option<usize>,
    rel: &'static str,
) {
    let with_det = rng.random_bool(0.8);
    let with_adj = rng.random_bool(0.6);
    let compound = rng.random_bool(0.25);
    let noun_pos = out.len() + with_det as usize + with_adj as usize + compound as usize;
    if with_det {
        out.push(Token {
            lemma: "the".into(),
            pos: "DET",
            head: Some(noun_pos),
            rel: "det",
        });
    }
    if with_adj {
        let adj = adjective(rng, lex, class);
        out.push(Token {
            lemma: adj,
            pos: "ADJ",
            head: Some(noun_pos),
            rel: "amod",
        });
    }
    if compound {
        // modifier from a sibling class
        let s = lex.classes[class].superclass;
        let sibling = s * CLASSES_PER_SUPER + rng.random_range(0..CLASSES_PER_SUPER);
        let m = pick_noun(rng, &lex.classes[sibling].nouns).to_string();
        out.push(Token {
            lemma: m,
            pos: "NOUN",
            head: Some(noun_pos),
            rel: "compound",
        });
    }
    let noun = pick_noun(rng, &lex.classes[class].nouns).to_string();
    out.push(Token {
        lemma: noun,
        pos: "NOUN",
        head,
        rel,
    });
}

fn sentence(rng: &mut ChaCha8Rng, lex: &Lexicon) -> Vec<Token> {
    let mut out = Vec::new();
    // subjects come from the first superclass, places from the second
    let subject_class = rng.random_range(0..CLASSES_PER_SUPER);
    let object_class = rng.random_range(0..lex.classes.len());
    noun_phrase(rng, lex, &mut out, subject_class, None, "nsubj");
    let verb_pos = out.len();
    for t in out.iter_mut() {
        if t.head.is_none() {
            t.head = Some(verb_pos);
        }
    }
    let oc = &lex.classes[object_class];
    let verb = if rng.random_bool(0.75) {
        oc.verbs.choose(rng).unwrap().clone()
    } else {
        lex.shared_verbs[oc.superclass].choose(rng).unwrap().clone()
    };
    out.push(Token {
        lemma: verb,
        pos: "VERB",
        head: None,
        rel: "root",
    });
    if rng.random_bool(0.2) {
        let adv = lex.adverbs.choose(rng).unwrap().clone();
        out.push(Token {
            lemma: adv,
            pos: "ADV",
            head: Some(verb_pos),
            rel: "advmod",
        });
    }
    noun_phrase(rng, lex, &mut out, object_class, Some(verb_pos), "dobj");
    if rng.random_bool(0.3) {
        let place_pos = out.len() + 2;
        out.push(Token {
            lemma: "in".into(),
            pos: "ADP",
            head: Some(place_pos),
            rel: "case",
        });
        out.push(Token {
            lemma: "the".into(),
            pos: "DET",
            head: Some(place_pos),
            rel: "det",
        });
        let place_class = CLASSES_PER_SUPER + rng.random_range(0..CLASSES_PER_SUPER);
        let place = pick_noun(rng, &lex.classes[place_class].nouns).to_string();
        out.push(Token {
            lemma: place,
            pos: "NOUN",
            head: Some(verb_pos),
            rel: "obl",
        });
    }
    out.push(Token {
        lemma: ".".into(),
        pos: "PUNCT",
        head: Some(verb_pos),
        rel: "punct",
    });
    out
}

fn write_corpus(
    path: &Path,
    rng: &mut ChaCha8Rng,
    lex: &Lexicon,
    count: usize,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(GzEncoder::new(File::create(path)?, Compression::best()));
    for i in 0..count {
        writeln!(w, "# sent_id = {}", i + 1)?;
        for (pos, t) in sentence(rng, lex).iter().enumerate() {
            let head = t.head.map_or(0, |h| h + 1);
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                pos + 1,
                t.lemma,
                t.lemma,
                t.pos,
                head,
                t.rel
            )?;
        }
        writeln!(w)?;
    }
    w.into_inner()?.finish()?;
    Ok(())
}

/// Rating on a 0-10 scale from class relatedness plus noise.
fn rating(rng: &mut ChaCha8Rng, lex: &Lexicon, a: usize, b: usize) -> f64 {
    let base = if a == b {
        8.5
    } else if lex.classes[a].superclass == lex.classes[b].superclass {
        5.0
    } else {
        1.5
    };
    let r: f64 = base + rng.random_range(-1.0..1.0);
    (r * 100.0).round() / 100.0
}

fn write_wordsim(path: &Path, rng: &mut ChaCha8Rng, lex: &Lexicon) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = lex.classes.len();
    let mut seen = BTreeSet::new();
    // the two most frequent nouns of a class, so the pairs survive filtering
    let common = |c: usize, i: usize| lex.classes[c].nouns[i % 2].clone();
    let mut pairs = 0;
    while pairs < 20 {
        let a = rng.random_range(0..n);
        let b = match pairs % 3 {
            0 => a,
            1 => {
                lex.classes[a].superclass * CLASSES_PER_SUPER
                    + rng.random_range(0..CLASSES_PER_SUPER)
            }
            _ => rng.random_range(0..n),
        };
        let (w1, w2) = (common(a, 0), common(b, 1));
        if w1 == w2 || !seen.insert((w1.clone(), w2.clone())) {
            continue;
        }
        writeln!(w, "{w1}\t{w2}\t{}", rating(rng, lex, a, b))?;
        pairs += 1;
    }
    Ok(())
}

fn write_phrases(path: &Path, rng: &mut ChaCha8Rng, lex: &Lexicon) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = lex.classes.len();
    for kind in ["AN", "NN", "VO"] {
        for i in 0..8 {
            let a = rng.random_range(0..n);
            let b = if i % 2 == 0 {
                a
            } else {
                rng.random_range(0..n)
            };
            let phrase = |c: usize, rng: &mut ChaCha8Rng| {
                let class = &lex.classes[c];
                let noun = class.nouns[rng.random_range(0..2)].clone();
                match kind {
                    "AN" => (class.adjectives.choose(rng).unwrap().clone(), noun),
                    "NN" => {
                        let s = class.superclass * CLASSES_PER_SUPER;
                        let sibling = &lex.classes[s + rng.random_range(0..CLASSES_PER_SUPER)];
                        (sibling.nouns[0].clone(), noun)
                    }
                    _ => (class.verbs.choose(rng).unwrap().clone(), noun),
                }
            };
            let (p1, p2) = (phrase(a, rng), phrase(b, rng));
            // two raters per pair; loaders average them
            for _ in 0..2 {
                let r = (rating(rng, lex, a, b) * 0.6 + 1.0).clamp(1.0, 7.0);
                writeln!(w, "{kind}\t{}\t{}\t{}\t{}\t{r:.2}", p1.0, p1.1, p2.0, p2.1)?;
            }
        }
    }
    Ok(())
}

fn write_lexicon(path: &Path, lex: &Lexicon) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# lemma\tsynonyms")?;
    for class in &lex.classes {
        for noun in &class.nouns {
            let others: Vec<&str> = class
                .nouns
                .iter()
                .filter(|m| *m != noun)
                .map(String::as_str)
                .collect();
            writeln!(w, "{noun}\t{}", others.join(","))?;
        }
    }
    Ok(())
}

fn main() -> std::io::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let dir = Path::new(args.get(1).map(String::as_str).unwrap_or("data"));
    let count: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(12000);
    fs::create_dir_all(dir)?;

    let mut rng = ChaCha8Rng::seed_from_u64(20160701);
    let lex = lexicon(&mut rng);
    write_corpus(&dir.join("toy_corpus.conll.gz"), &mut rng, &lex, count)?;
    write_wordsim(&dir.join("toy_wordsim.tsv"), &mut rng, &lex)?;
    write_phrases(&dir.join("toy_phrases.tsv"), &mut rng, &lex)?;
    write_lexicon(&dir.join("toy_lexicon.tsv"), &lex)?;
    Ok(())
}
