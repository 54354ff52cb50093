//! Phrase composition.
//!
//! Untyped vectors compose by pointwise addition (union) or pointwise
//! multiplication (intersection). Typed vectors are first aligned: the
//! dependent's features are re-anchored at the head by prefixing each path
//! with the head→dependent relation and cancelling adjacent inverse pairs.
//! Only then are the two vectors merged, which makes typed composition
//! order-sensitive.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inference::{Inference, InferenceConfig};
use crate::path::{DepPath, TypedFeature};
use crate::retrieval::Query;
use crate::store::{FeatureInterner, ModelType, VectorStore};
use crate::vector::{FeatureId, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhraseType {
    AdjectiveNoun,
    NounNoun,
    VerbObject,
}

impl PhraseType {
    pub const ALL: [PhraseType; 3] = [
        PhraseType::AdjectiveNoun,
        PhraseType::NounNoun,
        PhraseType::VerbObject,
    ];

    pub fn code(self) -> &'static str {
        match self {
            PhraseType::AdjectiveNoun => "AN",
            PhraseType::NounNoun => "NN",
            PhraseType::VerbObject => "VO",
        }
    }
}

impl fmt::Display for PhraseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for PhraseType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "an" | "adjectivenouns" | "adjective-noun" => Ok(PhraseType::AdjectiveNoun),
            "nn" | "compoundnouns" | "noun-noun" => Ok(PhraseType::NounNoun),
            "vo" | "verbobjects" | "verb-object" => Ok(PhraseType::VerbObject),
            _ => Err(Error::InvalidArgument(format!("unknown phrase type {s:?}"))),
        }
    }
}

/// Dependency labels accepted for each phrase type; the first is the default.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationMap {
    relations: BTreeMap<PhraseType, Vec<String>>,
}

impl Default for RelationMap {
    fn default() -> Self {
        let mut relations = BTreeMap::new();
        relations.insert(PhraseType::AdjectiveNoun, vec!["amod".to_string()]);
        relations.insert(
            PhraseType::NounNoun,
            vec!["compound".to_string(), "nn".to_string()],
        );
        relations.insert(
            PhraseType::VerbObject,
            vec!["dobj".to_string(), "obj".to_string()],
        );
        RelationMap { relations }
    }
}

impl RelationMap {
    /// Makes `relation` the default label for `phrase_type`.
    pub fn set_default(&mut self, phrase_type: PhraseType, relation: &str) {
        let labels = self.relations.entry(phrase_type).or_default();
        labels.retain(|l| l != relation);
        labels.insert(0, relation.to_string());
    }

    pub fn default_relation(&self, phrase_type: PhraseType) -> Option<&str> {
        self.relations
            .get(&phrase_type)
            .and_then(|l| l.first())
            .map(String::as_str)
    }

    pub fn allows(&self, phrase_type: PhraseType, relation: &str) -> bool {
        self.relations
            .get(&phrase_type)
            .is_some_and(|l| l.iter().any(|r| r == relation))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhraseSpec {
    pub phrase_type: PhraseType,
    pub head: String,
    pub dependent: String,
    pub relation: String,
}

impl PhraseSpec {
    pub fn new(
        phrase_type: PhraseType,
        head: impl Into<String>,
        dependent: impl Into<String>,
        relation: impl Into<String>,
    ) -> Self {
        PhraseSpec {
            phrase_type,
            head: head.into(),
            dependent: dependent.into(),
            relation: relation.into(),
        }
    }

    /// Builds a spec from the phrase as written. Adjective-noun and
    /// noun-noun phrases are head-final, verb-object phrases head-initial.
    pub fn from_surface(
        phrase_type: PhraseType,
        first: &str,
        second: &str,
        relations: &RelationMap,
    ) -> Result<Self> {
        let relation =
            relations
                .default_relation(phrase_type)
                .ok_or_else(|| Error::UnknownRelation {
                    phrase_type: phrase_type.to_string(),
                    relation: String::new(),
                })?;
        let (head, dependent) = match phrase_type {
            PhraseType::AdjectiveNoun | PhraseType::NounNoun => (second, first),
            PhraseType::VerbObject => (first, second),
        };
        Ok(PhraseSpec::new(phrase_type, head, dependent, relation))
    }

    /// `head_dependent_relation`, the name used for exported phrase vectors.
    pub fn name(&self) -> String {
        format!("{}_{}_{}", self.head, self.dependent, self.relation)
    }

    /// The phrase in surface word order.
    pub fn surface(&self) -> String {
        match self.phrase_type {
            PhraseType::AdjectiveNoun | PhraseType::NounNoun => {
                format!("{} {}", self.dependent, self.head)
            }
            PhraseType::VerbObject => format!("{} {}", self.head, self.dependent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CompositionMode {
    /// Pointwise addition.
    Union,
    /// Pointwise multiplication over shared features.
    Intersection,
}

impl fmt::Display for CompositionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompositionMode::Union => "union",
            CompositionMode::Intersection => "intersection",
        })
    }
}

impl FromStr for CompositionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "union" | "add" => Ok(CompositionMode::Union),
            "intersection" | "intersect" | "mult" => Ok(CompositionMode::Intersection),
            _ => Err(Error::InvalidArgument(format!(
                "unknown composition mode {s:?}"
            ))),
        }
    }
}

pub fn reduce_path(path: &DepPath) -> DepPath {
    path.reduce()
}

pub fn compose_untyped(a: &SparseVector, b: &SparseVector, mode: CompositionMode) -> SparseVector {
    match mode {
        CompositionMode::Union => a.add(b),
        CompositionMode::Intersection => a.mul(b),
    }
}

/// The store's features plus any created while offsetting. New features
/// get ids past the store's range, in order of first use.
pub struct FeatureSpace<'s> {
    base: &'s FeatureInterner,
    model_type: ModelType,
    extra: Vec<String>,
    extra_ids: HashMap<String, FeatureId>,
    parsed: HashMap<FeatureId, TypedFeature>,
}

impl<'s> FeatureSpace<'s> {
    pub fn new(store: &'s VectorStore) -> Self {
        FeatureSpace {
            base: &store.interner,
            model_type: store.meta.model_type,
            extra: Vec::new(),
            extra_ids: HashMap::new(),
            parsed: HashMap::new(),
        }
    }

    pub fn model_type(&self) -> ModelType {
        self.model_type
    }

    pub fn text(&self, id: FeatureId) -> Option<&str> {
        let base_len = self.base.len() as FeatureId;
        if id < base_len {
            self.base.text(id)
        } else {
            self.extra.get((id - base_len) as usize).map(String::as_str)
        }
    }

    pub fn intern(&mut self, text: &str) -> FeatureId {
        if let Some(id) = self.base.id(text) {
            return id;
        }
        if let Some(&id) = self.extra_ids.get(text) {
            return id;
        }
        let id = (self.base.len() + self.extra.len()) as FeatureId;
        self.extra.push(text.to_string());
        self.extra_ids.insert(text.to_string(), id);
        id
    }

    fn feature(&mut self, id: FeatureId) -> Result<TypedFeature> {
        if let Some(f) = self.parsed.get(&id) {
            return Ok(f.clone());
        }
        let text = self
            .text(id)
            .ok_or_else(|| Error::MalformedFeature(format!("#{id}")))?;
        let f: TypedFeature = text.parse()?;
        self.parsed.insert(id, f.clone());
        Ok(f)
    }

    /// Rewrites every feature `(p, c)` to `(reduce(prefix » p), c)`, summing
    /// collisions and dropping paths longer than `max_order`.
    pub fn offset(
        &mut self,
        v: &SparseVector,
        prefix: &DepPath,
        max_order: Option<usize>,
    ) -> Result<SparseVector> {
        if self.model_type != ModelType::Typed {
            return Err(Error::Untyped);
        }
        if prefix.is_empty() {
            return Ok(v.clone());
        }
        let mut out = Vec::with_capacity(v.nnz());
        for (id, w) in v.iter() {
            let feature = self.feature(id)?;
            let path = prefix.concat(&feature.path).reduce();
            if max_order.is_some_and(|m| path.len() > m) {
                continue;
            }
            let text = TypedFeature::new(path, feature.lexeme).to_string();
            out.push((self.intern(&text), w));
        }
        Ok(SparseVector::from_pairs(out))
    }
}

/// Composes phrases over one store, sharing a feature space so that
/// composed vectors are comparable with each other and with the store.
pub struct Composer<'s> {
    store: &'s VectorStore,
    space: FeatureSpace<'s>,
    pub relations: RelationMap,
    /// Path order bound applied when offsetting; `None` keeps every path.
    pub order_limit: Option<usize>,
}

impl<'s> Composer<'s> {
    pub fn new(store: &'s VectorStore) -> Self {
        Composer {
            store,
            space: FeatureSpace::new(store),
            relations: RelationMap::default(),
            order_limit: Some(store.meta.max_order),
        }
    }

    pub fn unlimited(mut self) -> Self {
        self.order_limit = None;
        self
    }

    pub fn with_relations(mut self, relations: RelationMap) -> Self {
        self.relations = relations;
        self
    }

    pub fn space(&self) -> &FeatureSpace<'s> {
        &self.space
    }

    pub fn space_mut(&mut self) -> &mut FeatureSpace<'s> {
        &mut self.space
    }

    pub fn offset(&mut self, v: &SparseVector, prefix: &DepPath) -> Result<SparseVector> {
        self.space.offset(v, prefix, self.order_limit)
    }

    /// Typed composition with a caller-supplied merge of the head vector and
    /// the aligned dependent vector.
    pub fn compose_typed_with<F>(
        &mut self,
        head: &SparseVector,
        dependent: &SparseVector,
        spec: &PhraseSpec,
        merge: F,
    ) -> Result<SparseVector>
    where
        F: FnOnce(&SparseVector, &SparseVector) -> SparseVector,
    {
        if !self.relations.allows(spec.phrase_type, &spec.relation) {
            return Err(Error::UnknownRelation {
                phrase_type: spec.phrase_type.to_string(),
                relation: spec.relation.clone(),
            });
        }
        let aligned = self.offset(dependent, &DepPath::forward(spec.relation.clone()))?;
        Ok(merge(head, &aligned))
    }

    pub fn compose_typed(
        &mut self,
        head: &SparseVector,
        dependent: &SparseVector,
        spec: &PhraseSpec,
        mode: CompositionMode,
    ) -> Result<SparseVector> {
        self.compose_typed_with(head, dependent, spec, |h, d| compose_untyped(h, d, mode))
    }

    /// Dispatches on the store's model type.
    pub fn compose(
        &mut self,
        head: &SparseVector,
        dependent: &SparseVector,
        spec: &PhraseSpec,
        mode: CompositionMode,
    ) -> Result<SparseVector> {
        match self.store.meta.model_type {
            ModelType::Typed => self.compose_typed(head, dependent, spec, mode),
            ModelType::Untyped => Ok(compose_untyped(head, dependent, mode)),
        }
    }

    /// Enriches both constituents (when `di` is given), then composes.
    pub fn compose_with_di(
        &mut self,
        inference: &Inference<'_>,
        spec: &PhraseSpec,
        mode: CompositionMode,
        di: Option<&InferenceConfig>,
    ) -> Result<SparseVector> {
        let constituent = |lemma: &str| -> Result<SparseVector> {
            match di {
                Some(cfg) => Ok(inference.enrich(Query::Entry(lemma), cfg)?.result),
                None => self
                    .store
                    .get(lemma)
                    .cloned()
                    .ok_or_else(|| Error::OutOfVocabulary(lemma.to_string())),
            }
        };
        let head = constituent(&spec.head)?;
        let dependent = constituent(&spec.dependent)?;
        self.compose(&head, &dependent, spec, mode)
    }
}
