//! Distributional inference: enriching a sparse vector with the vectors of
//! its neighbours.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::retrieval::{NeighbourIndex, NeighbourSet, Query, RetrievalPolicy};
use crate::store::VectorStore;
use crate::vector::SparseVector;

pub const DEFAULT_NEIGHBOURS: usize = 30;

#[derive(Debug, Clone)]
pub struct InferenceConfig {
    pub policy: RetrievalPolicy,
    /// Scale every neighbour vector to unit length before adding it.
    pub normalize_neighbours: bool,
    /// Scale every neighbour vector by its similarity to the query.
    pub weight_by_similarity: bool,
    /// Entries never consumed as neighbours.
    pub stop_list: BTreeSet<String>,
}

impl InferenceConfig {
    pub fn static_top_n(n: usize) -> Self {
        InferenceConfig {
            policy: RetrievalPolicy::StaticTopN { n },
            normalize_neighbours: false,
            weight_by_similarity: false,
            stop_list: BTreeSet::new(),
        }
    }

    pub fn with_policy(policy: RetrievalPolicy) -> Self {
        InferenceConfig {
            policy,
            ..Self::default()
        }
    }

    /// Same configuration consuming `n` neighbours at most.
    pub fn with_budget(&self, n: usize) -> Self {
        InferenceConfig {
            policy: self.policy.with_budget(n),
            ..self.clone()
        }
    }

    pub fn label(&self) -> String {
        let mut label = self.policy.label();
        if self.normalize_neighbours {
            label.push_str("+unit");
        }
        if self.weight_by_similarity {
            label.push_str("+simweight");
        }
        label
    }
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self::static_top_n(DEFAULT_NEIGHBOURS)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedVector {
    pub base: SparseVector,
    pub contribution: SparseVector,
    pub result: SparseVector,
    pub neighbours: NeighbourSet,
}

/// A weighted store prepared for neighbour queries.
pub struct Inference<'s> {
    store: &'s VectorStore,
    index: NeighbourIndex<'s>,
}

impl<'s> Inference<'s> {
    pub fn new(store: &'s VectorStore) -> Result<Self> {
        if !store.is_weighted() {
            return Err(Error::NotWeighted);
        }
        Ok(Inference {
            store,
            index: NeighbourIndex::new(store),
        })
    }

    pub fn store(&self) -> &'s VectorStore {
        self.store
    }

    pub fn index(&self) -> &NeighbourIndex<'s> {
        &self.index
    }

    /// `base + sum of t(neighbour)`; the base vector is never rescaled.
    pub fn enrich(&self, query: Query<'_>, cfg: &InferenceConfig) -> Result<EnrichedVector> {
        let base = match query {
            Query::Entry(name) => self
                .index
                .vector(name)
                .ok_or_else(|| Error::OutOfVocabulary(name.to_string()))?
                .clone(),
            Query::Vector(v) => v.clone(),
        };
        let neighbours = cfg.policy.retrieve(&self.index, query, &cfg.stop_list)?;
        let contribution = SparseVector::from_pairs(neighbours.iter().flat_map(|n| {
            let v = self
                .index
                .vector(&n.name)
                .expect("neighbour comes from the index");
            let mut factor = 1.0;
            if cfg.normalize_neighbours {
                let norm = v.norm();
                if norm > 0.0 {
                    factor /= norm;
                }
            }
            if cfg.weight_by_similarity {
                factor *= n.similarity;
            }
            v.iter().map(move |(id, w)| (id, w * factor))
        }));
        let result = base.add(&contribution);
        Ok(EnrichedVector {
            base,
            contribution,
            result,
            neighbours,
        })
    }

    pub fn enrich_entry(&self, entry: &str, cfg: &InferenceConfig) -> Result<SparseVector> {
        Ok(self.enrich(Query::Entry(entry), cfg)?.result)
    }
}
