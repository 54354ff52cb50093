//! Sparse distributional vector spaces over dependency-typed (APT) and
//! window-based co-occurrences.
//!
//! The pipeline runs corpus ingestion ([`ingest`]), count accumulation and
//! shifted-PPMI weighting ([`store`]), neighbour retrieval ([`retrieval`]),
//! distributional inference ([`inference`]), phrase composition
//! ([`composition`]) and evaluation against human judgements
//! ([`evaluation`]). The [`cli`] module wires these into the `aptkit` binary.

pub mod cli;
pub mod composition;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod ingest;
pub mod path;
pub mod retrieval;
pub mod store;
pub mod vector;

pub use error::{Error, Result};
pub use path::{DepPath, Direction, Step, TypedFeature};
pub use vector::{cosine, FeatureId, SparseVector};
