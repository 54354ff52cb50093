//! Sparse non-negative vectors keyed by dense feature ids.
//!
//! Entries are kept sorted by feature id with no explicit zeros, so that
//! dot products and pointwise merges are single linear passes. Every
//! pairwise operation walks features in ascending id order, which keeps
//! floating-point summation order (and therefore the result bits)
//! independent of how a vector was built.

use std::collections::HashMap;

pub type FeatureId = u32;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(FeatureId, f64)>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from unordered pairs. Duplicate ids are summed in
    /// input order and zero results are dropped.
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (FeatureId, f64)>,
    {
        let mut acc: HashMap<FeatureId, f64> = HashMap::new();
        for (id, w) in pairs {
            *acc.entry(id).or_insert(0.0) += w;
        }
        let mut entries: Vec<_> = acc.into_iter().filter(|&(_, w)| w != 0.0).collect();
        entries.sort_unstable_by_key(|&(id, _)| id);
        Self { entries }
    }

    /// Wraps already sorted, zero-free entries.
    ///
    /// Panics in debug builds when the ordering invariant does not hold.
    pub fn from_sorted(entries: Vec<(FeatureId, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, w)| w != 0.0));
        Self { entries }
    }

    pub fn entries(&self) -> &[(FeatureId, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = FeatureId> + '_ {
        self.entries.iter().map(|&(id, _)| id)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: FeatureId) -> Option<f64> {
        self.entries
            .binary_search_by_key(&id, |&(i, _)| i)
            .ok()
            .map(|pos| self.entries[pos].1)
    }

    pub fn contains(&self, id: FeatureId) -> bool {
        self.get(id).is_some()
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Featurewise sum over the union of supports.
    pub fn add(&self, other: &SparseVector) -> SparseVector {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return other.clone();
        }
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let w = a[i].1 + b[j].1;
                    if w != 0.0 {
                        out.push((a[i].0, w));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        SparseVector { entries: out }
    }

    /// Featurewise product over the intersection of supports.
    pub fn mul(&self, other: &SparseVector) -> SparseVector {
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let w = a[i].1 * b[j].1;
                    if w != 0.0 {
                        out.push((a[i].0, w));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        SparseVector { entries: out }
    }

    pub fn scale(&self, factor: f64) -> SparseVector {
        if factor == 0.0 {
            return SparseVector::new();
        }
        SparseVector {
            entries: self
                .entries
                .iter()
                .map(|&(id, w)| (id, w * factor))
                .collect(),
        }
    }

    /// Unit L2 copy; the zero vector stays zero.
    pub fn normalized(&self) -> SparseVector {
        let norm = self.norm();
        if norm == 0.0 {
            return self.clone();
        }
        self.scale(1.0 / norm)
    }

    /// Sums many vectors. Each feature accumulates its contributions in
    /// iteration order.
    pub fn sum_all<'a, I>(vectors: I) -> SparseVector
    where
        I: IntoIterator<Item = &'a SparseVector>,
    {
        SparseVector::from_pairs(vectors.into_iter().flat_map(|v| v.iter()))
    }
}

impl FromIterator<(FeatureId, f64)> for SparseVector {
    fn from_iter<T: IntoIterator<Item = (FeatureId, f64)>>(iter: T) -> Self {
        SparseVector::from_pairs(iter)
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    a.dot(b) / denom
}
