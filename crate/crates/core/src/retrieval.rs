//! Cosine neighbour retrieval over a weighted store.
//!
//! The index keeps one posting list per feature and accumulates dot
//! products only for entries sharing a feature with the query. Postings are
//! visited in ascending feature order, the same order a merge-join dot
//! product uses, so every raw score is bit-identical to
//! [`cosine`](crate::vector::cosine) on the same pair.
//!
//! Reported similarities are that cosine rounded to a multiple of
//! [`SIMILARITY_RESOLUTION`]. Scores that are equal in exact arithmetic but
//! differ in the last bits (say, after rescaling the query) then tie and
//! fall back to name order, which keeps rankings invariant under scaling.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ingest::open_input;
use crate::store::VectorStore;
use crate::vector::{cosine, SparseVector};

pub const SIMILARITY_RESOLUTION: f64 = 1e-12;

/// A cosine rounded to the reporting resolution.
pub fn rounded_similarity(cos: f64) -> f64 {
    (cos / SIMILARITY_RESOLUTION).round() * SIMILARITY_RESOLUTION
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbour {
    pub name: String,
    pub similarity: f64,
}

/// Neighbours ordered by decreasing similarity, ties by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighbourSet {
    pub neighbours: Vec<Neighbour>,
}

impl NeighbourSet {
    pub fn len(&self) -> usize {
        self.neighbours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbours.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.neighbours.iter().map(|n| n.name.as_str()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Neighbour> {
        self.neighbours.iter()
    }
}

fn rank(a: &Neighbour, b: &Neighbour) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then_with(|| a.name.cmp(&b.name))
}

#[derive(Debug, Clone, Copy)]
pub enum Query<'a> {
    /// A named entry of the index; it is never returned as its own neighbour.
    Entry(&'a str),
    Vector(&'a SparseVector),
}

/// Synonym table, one `lemma<TAB>syn1,syn2,...` record per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymLexicon {
    synonyms: BTreeMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, lemma: &str, synonyms: &[&str]) {
        let entry = self.synonyms.entry(lemma.to_lowercase()).or_default();
        for s in synonyms {
            let s = s.trim().to_lowercase();
            if !s.is_empty() && !entry.contains(&s) {
                entry.push(s);
            }
        }
    }

    pub fn synonyms(&self, lemma: &str) -> &[String] {
        self.synonyms.get(lemma).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.synonyms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synonyms.is_empty()
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lex = SynonymLexicon::new();
        for (no, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (lemma, syns) = line.split_once('\t').ok_or_else(|| Error::Dataset {
                path: "lexicon".into(),
                line: no + 1,
                message: "expected lemma<TAB>synonyms".into(),
            })?;
            let syns: Vec<&str> = syns.split(',').collect();
            lex.insert(lemma.trim(), &syns);
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(open_input(path)?)
    }
}

#[derive(Debug, Clone)]
pub enum RetrievalPolicy {
    StaticTopN {
        n: usize,
    },
    DensityWindow {
        delta: f64,
        cap: usize,
    },
    Lexicon {
        lexicon: Arc<SynonymLexicon>,
        cap: usize,
    },
}

impl RetrievalPolicy {
    pub const DEFAULT_DELTA: f64 = 0.05;
    pub const DEFAULT_CAP: usize = 100;

    /// The number of neighbours the policy may hand out at most.
    pub fn budget(&self) -> usize {
        match self {
            RetrievalPolicy::StaticTopN { n } => *n,
            RetrievalPolicy::DensityWindow { cap, .. } | RetrievalPolicy::Lexicon { cap, .. } => {
                *cap
            }
        }
    }

    /// Same policy with its size parameter replaced.
    pub fn with_budget(&self, budget: usize) -> Self {
        match self {
            RetrievalPolicy::StaticTopN { .. } => RetrievalPolicy::StaticTopN { n: budget },
            RetrievalPolicy::DensityWindow { delta, .. } => RetrievalPolicy::DensityWindow {
                delta: *delta,
                cap: budget,
            },
            RetrievalPolicy::Lexicon { lexicon, .. } => RetrievalPolicy::Lexicon {
                lexicon: Arc::clone(lexicon),
                cap: budget,
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            RetrievalPolicy::StaticTopN { n } => format!("static(n={n})"),
            RetrievalPolicy::DensityWindow { delta, cap } => {
                format!("density(delta={delta},cap={cap})")
            }
            RetrievalPolicy::Lexicon { cap, .. } => format!("lexicon(cap={cap})"),
        }
    }

    pub fn retrieve(
        &self,
        index: &NeighbourIndex<'_>,
        query: Query<'_>,
        exclude: &BTreeSet<String>,
    ) -> Result<NeighbourSet> {
        match self {
            RetrievalPolicy::StaticTopN { n } => index.top_n(query, *n, exclude),
            RetrievalPolicy::DensityWindow { delta, cap } => {
                index.density_window(query, *delta, *cap, exclude)
            }
            RetrievalPolicy::Lexicon { lexicon, cap } => match query {
                Query::Entry(name) => index.lexicon_neighbours(lexicon, name, *cap, exclude),
                Query::Vector(_) => Ok(NeighbourSet::default()),
            },
        }
    }
}

/// Candidate pool with an inverted feature index.
pub struct NeighbourIndex<'s> {
    names: Vec<String>,
    vectors: Vec<Cow<'s, SparseVector>>,
    norms: Vec<f64>,
    by_name: HashMap<String, usize>,
    postings: Vec<Vec<(u32, f64)>>,
}

impl<'s> NeighbourIndex<'s> {
    /// Indexes every entry of the store.
    pub fn new(store: &'s VectorStore) -> Self {
        Self::with_extra(store, Vec::new()).0
    }

    /// Indexes the store plus ad-hoc named vectors. Extra names clashing
    /// with an existing entry get a `#n` suffix; the final names are
    /// returned in input order.
    pub fn with_extra(
        store: &'s VectorStore,
        extra: Vec<(String, SparseVector)>,
    ) -> (Self, Vec<String>) {
        let mut names = Vec::with_capacity(store.len() + extra.len());
        let mut vectors = Vec::with_capacity(store.len() + extra.len());
        let mut by_name = HashMap::with_capacity(store.len() + extra.len());
        for (name, v) in &store.vocab {
            by_name.insert(name.clone(), names.len());
            names.push(name.clone());
            vectors.push(Cow::Borrowed(v));
        }
        let mut extra_names = Vec::with_capacity(extra.len());
        for (name, v) in extra {
            let mut unique = name.clone();
            let mut suffix = 1;
            while by_name.contains_key(&unique) {
                unique = format!("{name}#{suffix}");
                suffix += 1;
            }
            by_name.insert(unique.clone(), names.len());
            names.push(unique.clone());
            vectors.push(Cow::Owned(v));
            extra_names.push(unique);
        }

        let max_id = vectors
            .iter()
            .filter_map(|v| v.entries().last().map(|&(id, _)| id as usize))
            .max();
        let mut postings: Vec<Vec<(u32, f64)>> = vec![Vec::new(); max_id.map_or(0, |m| m + 1)];
        for (e, v) in vectors.iter().enumerate() {
            for (id, w) in v.iter() {
                postings[id as usize].push((e as u32, w));
            }
        }
        let norms = vectors.iter().map(|v| v.norm()).collect();
        (
            NeighbourIndex {
                names,
                vectors,
                norms,
                by_name,
                postings,
            },
            extra_names,
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn vector(&self, name: &str) -> Option<&SparseVector> {
        self.by_name.get(name).map(|&i| self.vectors[i].as_ref())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    fn resolve<'q>(&'q self, query: Query<'q>) -> Result<(&'q SparseVector, Option<usize>)> {
        match query {
            Query::Entry(name) => {
                let &i = self
                    .by_name
                    .get(name)
                    .ok_or_else(|| Error::OutOfVocabulary(name.to_string()))?;
                Ok((self.vectors[i].as_ref(), Some(i)))
            }
            Query::Vector(v) => Ok((v, None)),
        }
    }

    /// Every candidate with positive similarity, fully ranked.
    fn ranked(&self, query: Query<'_>, exclude: &BTreeSet<String>) -> Result<Vec<Neighbour>> {
        let (q, own) = self.resolve(query)?;
        let qnorm = q.norm();
        if qnorm == 0.0 {
            return Ok(Vec::new());
        }
        let mut acc = vec![0.0f64; self.names.len()];
        let mut touched: Vec<u32> = Vec::new();
        for (id, qw) in q.iter() {
            let Some(list) = self.postings.get(id as usize) else {
                continue;
            };
            for &(e, w) in list {
                let slot = &mut acc[e as usize];
                if *slot == 0.0 {
                    touched.push(e);
                }
                *slot += qw * w;
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let mut out = Vec::with_capacity(touched.len());
        for e in touched {
            let e = e as usize;
            if Some(e) == own || exclude.contains(&self.names[e]) {
                continue;
            }
            let denom = qnorm * self.norms[e];
            if denom == 0.0 {
                continue;
            }
            let sim = rounded_similarity(acc[e] / denom);
            if sim > 0.0 {
                out.push(Neighbour {
                    name: self.names[e].clone(),
                    similarity: sim,
                });
            }
        }
        out.sort_by(rank);
        Ok(out)
    }

    /// The `n` most similar entries. Entries with zero similarity are never
    /// returned.
    pub fn top_n(
        &self,
        query: Query<'_>,
        n: usize,
        exclude: &BTreeSet<String>,
    ) -> Result<NeighbourSet> {
        if n == 0 {
            // still reject unknown entries
            self.resolve(query)?;
            return Ok(NeighbourSet::default());
        }
        let mut all = self.ranked(query, exclude)?;
        all.truncate(n);
        Ok(NeighbourSet { neighbours: all })
    }

    /// Entries whose similarity lies within `delta` of the best candidate,
    /// at most `cap` of them.
    pub fn density_window(
        &self,
        query: Query<'_>,
        delta: f64,
        cap: usize,
        exclude: &BTreeSet<String>,
    ) -> Result<NeighbourSet> {
        if !(delta > 0.0 && delta <= 1.0) || cap == 0 {
            return Err(Error::InvalidArgument(format!(
                "density window needs delta in (0,1] and cap >= 1, got delta={delta} cap={cap}"
            )));
        }
        let all = self.ranked(query, exclude)?;
        let Some(best) = all.first().map(|n| n.similarity) else {
            return Ok(NeighbourSet::default());
        };
        let floor = best - delta;
        let neighbours = all
            .into_iter()
            .take_while(|n| n.similarity >= floor)
            .take(cap)
            .collect();
        Ok(NeighbourSet { neighbours })
    }

    /// In-vocabulary synonyms of `entry`, ranked by cosine to it.
    pub fn lexicon_neighbours(
        &self,
        lexicon: &SynonymLexicon,
        entry: &str,
        cap: usize,
        exclude: &BTreeSet<String>,
    ) -> Result<NeighbourSet> {
        let (q, _) = self.resolve(Query::Entry(entry))?;
        let mut out: Vec<Neighbour> = lexicon
            .synonyms(entry)
            .iter()
            .filter(|s| s.as_str() != entry && !exclude.contains(*s))
            .filter_map(|s| {
                let v = self.vector(s)?;
                Some(Neighbour {
                    name: s.clone(),
                    similarity: rounded_similarity(cosine(q, v)),
                })
            })
            .collect();
        out.sort_by(rank);
        out.truncate(cap);
        Ok(NeighbourSet { neighbours: out })
    }
}

/// Top-n over the store's words plus named ad-hoc vectors (e.g. phrases).
pub fn neighbours_over_union(
    store: &VectorStore,
    extra: Vec<(String, SparseVector)>,
    query: &SparseVector,
    n: usize,
) -> NeighbourSet {
    let (index, _) = NeighbourIndex::with_extra(store, extra);
    index
        .top_n(Query::Vector(query), n, &BTreeSet::new())
        .expect("vector queries cannot be out of vocabulary")
}
