//! Sparse vector spaces: count accumulation, frequency filtering, shifted
//! PPMI weighting and the on-disk text format.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::ingest::{open_input, CooccurrenceEvent};
use crate::vector::{FeatureId, SparseVector};

pub const MAGIC: &str = "aptkit-vsm";
pub const FORMAT_VERSION: u32 = 1;
const SEPARATOR: &str = "##";
const TARGET_SECTION: &str = "## target_marginals";
const FEATURE_SECTION: &str = "## feature_marginals";
const END_SECTION: &str = "## end";

/// Bidirectional map between feature text and dense ids.
#[derive(Debug, Clone, Default)]
pub struct FeatureInterner {
    texts: Vec<String>,
    ids: HashMap<String, FeatureId>,
}

impl PartialEq for FeatureInterner {
    fn eq(&self, other: &Self) -> bool {
        self.texts == other.texts
    }
}

impl FeatureInterner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, text: &str) -> FeatureId {
        if let Some(&id) = self.ids.get(text) {
            return id;
        }
        let id = self.texts.len() as FeatureId;
        self.texts.push(text.to_string());
        self.ids.insert(text.to_string(), id);
        id
    }

    pub fn id(&self, text: &str) -> Option<FeatureId> {
        self.ids.get(text).copied()
    }

    pub fn text(&self, id: FeatureId) -> Option<&str> {
        self.texts.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureId, &str)> {
        self.texts
            .iter()
            .enumerate()
            .map(|(i, t)| (i as FeatureId, t.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelType {
    Typed,
    Untyped,
}

impl fmt::Display for ModelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelType::Typed => "typed",
            ModelType::Untyped => "untyped",
        })
    }
}

impl FromStr for ModelType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "typed" => Ok(ModelType::Typed),
            "untyped" => Ok(ModelType::Untyped),
            _ => Err(Error::InvalidArgument(format!("unknown model type {s:?}"))),
        }
    }
}

/// Shift applied inside the PPMI threshold; natural-log base like PMI.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ShiftK(f64);

impl ShiftK {
    pub fn new(k: f64) -> Result<Self> {
        if k.is_finite() && k >= 1.0 {
            Ok(ShiftK(k))
        } else {
            Err(Error::InvalidShift(k))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    Raw,
    Sppmi(ShiftK),
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weighting::Raw => f.write_str("raw"),
            Weighting::Sppmi(k) => write!(f, "sppmi(k={})", k.value()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreMeta {
    pub model_type: ModelType,
    /// Path order limit for typed stores, 0 for untyped.
    pub max_order: usize,
    /// Window radius for untyped stores, 0 for typed.
    pub window: usize,
    pub weighting: Weighting,
    /// Resolved run configuration that produced the store, as JSON.
    pub config: Option<String>,
}

impl StoreMeta {
    pub fn typed(max_order: usize) -> Self {
        StoreMeta {
            model_type: ModelType::Typed,
            max_order,
            window: 0,
            weighting: Weighting::Raw,
            config: None,
        }
    }

    pub fn untyped(window: usize) -> Self {
        StoreMeta {
            model_type: ModelType::Untyped,
            max_order: 0,
            window,
            weighting: Weighting::Raw,
            config: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    pub vocab: BTreeMap<String, SparseVector>,
    pub interner: FeatureInterner,
    pub target_marginals: BTreeMap<String, f64>,
    pub feature_marginals: BTreeMap<FeatureId, f64>,
    pub grand_total: f64,
    pub meta: StoreMeta,
}

impl VectorStore {
    pub fn empty(meta: StoreMeta) -> Self {
        VectorStore {
            vocab: BTreeMap::new(),
            interner: FeatureInterner::new(),
            target_marginals: BTreeMap::new(),
            feature_marginals: BTreeMap::new(),
            grand_total: 0.0,
            meta,
        }
    }

    pub fn get(&self, entry: &str) -> Option<&SparseVector> {
        self.vocab.get(entry)
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.vocab.values().map(SparseVector::nnz).sum()
    }

    pub fn is_weighted(&self) -> bool {
        self.meta.weighting != Weighting::Raw
    }

    /// Vector of `entry` with feature text in place of ids, sorted by text.
    pub fn named_entries(&self, entry: &str) -> Option<Vec<(&str, f64)>> {
        let v = self.vocab.get(entry)?;
        let mut out: Vec<(&str, f64)> = v
            .iter()
            .map(|(id, w)| (self.interner.text(id).unwrap_or(""), w))
            .collect();
        out.sort_by(|a, b| a.0.cmp(b.0));
        Some(out)
    }

    pub fn weight(&self, entry: &str, feature: &str) -> Option<f64> {
        let id = self.interner.id(feature)?;
        self.vocab.get(entry)?.get(id)
    }

    /// Recomputes marginals and the grand total from the stored cells.
    fn recompute_marginals(&mut self) {
        self.target_marginals = self
            .vocab
            .iter()
            .map(|(t, v)| (t.clone(), v.sum()))
            .collect();
        let mut features: BTreeMap<FeatureId, f64> = BTreeMap::new();
        for v in self.vocab.values() {
            for (id, w) in v.iter() {
                *features.entry(id).or_insert(0.0) += w;
            }
        }
        self.feature_marginals = features;
        self.grand_total = self.target_marginals.values().sum();
    }
}

/// Sums co-occurrence events into per-cell counts. Shards can be merged in
/// any order; ids are assigned at `finish` in feature-text order so the
/// resulting store does not depend on how the corpus was split.
#[derive(Debug, Clone, Default)]
pub struct Accumulator {
    cells: HashMap<String, HashMap<String, u64>>,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, event: &CooccurrenceEvent) {
        *self
            .cells
            .entry(event.target.clone())
            .or_default()
            .entry(event.feature.to_string())
            .or_insert(0) += event.count;
    }

    pub fn extend<'a, I: IntoIterator<Item = &'a CooccurrenceEvent>>(&mut self, events: I) {
        for e in events {
            self.add(e);
        }
    }

    pub fn merge(&mut self, other: Accumulator) {
        for (target, row) in other.cells {
            let mine = self.cells.entry(target).or_default();
            for (feature, count) in row {
                *mine.entry(feature).or_insert(0) += count;
            }
        }
    }

    pub fn finish(self, meta: StoreMeta) -> VectorStore {
        let mut texts: Vec<&String> = self.cells.values().flat_map(|row| row.keys()).collect();
        texts.sort_unstable();
        texts.dedup();
        let mut interner = FeatureInterner::new();
        for t in texts {
            interner.intern(t);
        }

        let mut feature_counts: BTreeMap<FeatureId, u64> = BTreeMap::new();
        let mut target_counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut vocab = BTreeMap::new();
        for (target, row) in &self.cells {
            let mut total = 0u64;
            let mut entries = Vec::with_capacity(row.len());
            for (text, &count) in row {
                let id = interner.id(text).expect("interned above");
                *feature_counts.entry(id).or_insert(0) += count;
                total += count;
                entries.push((id, count as f64));
            }
            entries.sort_unstable_by_key(|&(id, _)| id);
            target_counts.insert(target.clone(), total);
            vocab.insert(target.clone(), SparseVector::from_sorted(entries));
        }
        let grand_total: u64 = target_counts.values().sum();
        VectorStore {
            vocab,
            interner,
            target_marginals: target_counts
                .into_iter()
                .map(|(t, c)| (t, c as f64))
                .collect(),
            feature_marginals: feature_counts
                .into_iter()
                .map(|(id, c)| (id, c as f64))
                .collect(),
            grand_total: grand_total as f64,
            meta,
        }
    }
}

/// Builds a raw count store from events.
pub fn accumulate<'a, I>(events: I, meta: StoreMeta) -> VectorStore
where
    I: IntoIterator<Item = &'a CooccurrenceEvent>,
{
    let mut acc = Accumulator::new();
    acc.extend(events);
    acc.finish(meta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterThresholds {
    pub min_feature_count: u64,
    pub min_nnz: usize,
    pub min_term_freq: u64,
}

impl FilterThresholds {
    pub const TYPED: FilterThresholds = FilterThresholds {
        min_feature_count: 10,
        min_nnz: 50,
        min_term_freq: 0,
    };
    pub const UNTYPED: FilterThresholds = FilterThresholds {
        min_feature_count: 0,
        min_nnz: 0,
        min_term_freq: 50,
    };
    pub const NONE: FilterThresholds = FilterThresholds {
        min_feature_count: 0,
        min_nnz: 0,
        min_term_freq: 0,
    };
}

/// Drops rare features, then sparse vectors, then rare targets, and
/// recomputes marginals from what survives. A target's frequency is its
/// total count in the input store. Feature ids are compacted, keeping
/// their relative order.
pub fn filter(store: &VectorStore, thresholds: FilterThresholds) -> Result<VectorStore> {
    if store.is_weighted() {
        return Err(Error::NotRaw);
    }
    let keep_feature = |id: &FeatureId| {
        store.feature_marginals.get(id).copied().unwrap_or(0.0)
            >= thresholds.min_feature_count as f64
    };

    let mut vocab = BTreeMap::new();
    for (target, v) in &store.vocab {
        let pruned: Vec<_> = v.iter().filter(|(id, _)| keep_feature(id)).collect();
        if pruned.is_empty() || pruned.len() < thresholds.min_nnz {
            continue;
        }
        let freq = store.target_marginals.get(target).copied().unwrap_or(0.0);
        if freq < thresholds.min_term_freq as f64 {
            continue;
        }
        vocab.insert(target.clone(), pruned);
    }

    let mut used: Vec<FeatureId> = vocab
        .values()
        .flat_map(|row: &Vec<(FeatureId, f64)>| row.iter().map(|&(id, _)| id))
        .collect();
    used.sort_unstable();
    used.dedup();
    let mut interner = FeatureInterner::new();
    let mut remap = HashMap::with_capacity(used.len());
    for old in used {
        let text = store.interner.text(old).expect("stored id is interned");
        remap.insert(old, interner.intern(text));
    }

    let mut out = VectorStore {
        vocab: vocab
            .into_iter()
            .map(|(t, row)| {
                let v = SparseVector::from_sorted(
                    row.into_iter().map(|(id, w)| (remap[&id], w)).collect(),
                );
                (t, v)
            })
            .collect(),
        interner,
        target_marginals: BTreeMap::new(),
        feature_marginals: BTreeMap::new(),
        grand_total: 0.0,
        meta: store.meta.clone(),
    };
    out.recompute_marginals();
    Ok(out)
}

/// Shifted PPMI: `max(ln(P(w,c) / (P(w)P(c))) - ln k, 0)` per cell, using
/// the store's own marginals. Zero cells are dropped; marginals are kept.
pub fn sppmi(store: &VectorStore, k: ShiftK) -> Result<VectorStore> {
    if let Weighting::Sppmi(_) = store.meta.weighting {
        return Err(Error::AlreadyWeighted(store.meta.weighting.to_string()));
    }
    let shift = k.value().ln();
    let total = store.grand_total;
    let mut vocab = BTreeMap::new();
    for (target, v) in &store.vocab {
        let target_margin = store.target_marginals[target];
        let entries: Vec<_> = v
            .iter()
            .filter_map(|(id, count)| {
                let feature_margin = store.feature_marginals[&id];
                let pmi = ((count * total) / (target_margin * feature_margin)).ln();
                let w = pmi - shift;
                (w > 0.0).then_some((id, w))
            })
            .collect();
        vocab.insert(target.clone(), SparseVector::from_sorted(entries));
    }
    let mut meta = store.meta.clone();
    meta.weighting = Weighting::Sppmi(k);
    Ok(VectorStore {
        vocab,
        interner: store.interner.clone(),
        target_marginals: store.target_marginals.clone(),
        feature_marginals: store.feature_marginals.clone(),
        grand_total: store.grand_total,
        meta,
    })
}

fn header_lines(store: &VectorStore) -> Vec<String> {
    let meta = &store.meta;
    let (weighting, k) = match meta.weighting {
        Weighting::Raw => ("raw", "-".to_string()),
        Weighting::Sppmi(k) => ("sppmi", k.value().to_string()),
    };
    let mut lines = vec![
        MAGIC.to_string(),
        format!("format_version\t{FORMAT_VERSION}"),
        format!("model_type\t{}", meta.model_type),
        format!("max_order\t{}", meta.max_order),
        format!("window\t{}", meta.window),
        format!("weighting\t{weighting}"),
        format!("k\t{k}"),
        "log_base\te".to_string(),
        format!("grand_total\t{}", store.grand_total),
        format!("targets\t{}", store.len()),
        format!("features\t{}", store.interner.len()),
        format!("counts\t{}", store.nnz()),
    ];
    if let Some(config) = &meta.config {
        lines.push(format!("config\t{config}"));
    }
    lines
}

/// Writes the store as text; gzip-compressed when `path` ends in `.gz`.
pub fn save(store: &VectorStore, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut w = BufWriter::new(GzEncoder::new(file, Compression::default()));
        write_store(store, &mut w)?;
        w.into_inner()
            .map_err(|e| e.into_error())?
            .finish()?
            .flush()?;
    } else {
        let mut w = BufWriter::new(file);
        write_store(store, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

pub fn write_store<W: Write>(store: &VectorStore, w: &mut W) -> Result<()> {
    for line in header_lines(store) {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "{SEPARATOR}")?;
    for target in store.vocab.keys() {
        for (text, weight) in store.named_entries(target).unwrap_or_default() {
            writeln!(w, "{target}\t{text}\t{weight}")?;
        }
    }
    writeln!(w, "{TARGET_SECTION}")?;
    for (target, m) in &store.target_marginals {
        writeln!(w, "{target}\t{m}")?;
    }
    writeln!(w, "{FEATURE_SECTION}")?;
    for (id, text) in store.interner.iter() {
        let m = store.feature_marginals.get(&id).copied().unwrap_or(0.0);
        writeln!(w, "{id}\t{text}\t{m}")?;
    }
    writeln!(w, "{END_SECTION}")?;
    Ok(())
}

/// Header lines of a saved store, verbatim, up to the `##` separator.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in open_input(path)?.lines() {
        let line = line?;
        if line == SEPARATOR {
            return Ok(out);
        }
        out.push(line);
    }
    Err(Error::Truncated("missing header separator".into()))
}

pub fn load(path: &Path) -> Result<VectorStore> {
    read_store(open_input(path)?)
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

fn parse_num<T: FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| format_err(line, format!("cannot parse number {s:?}")))
}

pub fn read_store<R: BufRead>(reader: R) -> Result<VectorStore> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    match lines.next() {
        Some((_, Ok(first))) if first == MAGIC => {}
        Some((_, Ok(first))) => {
            return Err(format_err(
                1,
                format!("bad magic header {first:?}, expected {MAGIC:?}"),
            ))
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => return Err(Error::Truncated("empty file".into())),
    }

    let mut header: HashMap<String, (usize, String)> = HashMap::new();
    let mut saw_separator = false;
    for (no, line) in lines.by_ref() {
        let line = line?;
        if line == SEPARATOR {
            saw_separator = true;
            break;
        }
        let (key, value) = line
            .split_once('\t')
            .ok_or_else(|| format_err(no, "header line without TAB"))?;
        header.insert(key.to_string(), (no, value.to_string()));
    }
    if !saw_separator {
        return Err(Error::Truncated("header not terminated".into()));
    }
    let field = |key: &str| {
        header
            .get(key)
            .map(|(no, v)| (*no, v.as_str()))
            .ok_or_else(|| format_err(0, format!("missing header key {key:?}")))
    };

    let (_, version) = field("format_version")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::Version(version.to_string()));
    }
    let model_type: ModelType = field("model_type")?.1.parse()?;
    let (no, v) = field("max_order")?;
    let max_order = parse_num(v, no)?;
    let (no, v) = field("window")?;
    let window = parse_num(v, no)?;
    let weighting = match field("weighting")?.1 {
        "raw" => Weighting::Raw,
        "sppmi" => {
            let (no, v) = field("k")?;
            Weighting::Sppmi(ShiftK::new(parse_num(v, no)?)?)
        }
        other => return Err(format_err(0, format!("unknown weighting {other:?}"))),
    };
    let (no, v) = field("grand_total")?;
    let grand_total: f64 = parse_num(v, no)?;
    let (no, v) = field("counts")?;
    let expected_records: usize = parse_num(v, no)?;
    let (no, v) = field("features")?;
    let expected_features: usize = parse_num(v, no)?;
    let config = header.get("config").map(|(_, v)| v.clone());

    let mut records: Vec<(usize, String, String, f64)> = Vec::with_capacity(expected_records);
    let mut target_marginals = BTreeMap::new();
    let mut feature_rows: Vec<(FeatureId, String, f64)> = Vec::with_capacity(expected_features);

    #[derive(PartialEq)]
    enum Section {
        Records,
        Targets,
        Features,
    }
    let mut section = Section::Records;
    let mut ended = false;
    for (no, line) in lines {
        let line = line?;
        match line.as_str() {
            TARGET_SECTION => {
                section = Section::Targets;
                continue;
            }
            FEATURE_SECTION => {
                section = Section::Features;
                continue;
            }
            END_SECTION => {
                ended = true;
                break;
            }
            _ => {}
        }
        let cols: Vec<&str> = line.split('\t').collect();
        match section {
            Section::Records => {
                if cols.len() != 3 {
                    return Err(format_err(no, "record must have 3 TAB-separated columns"));
                }
                records.push((
                    no,
                    cols[0].to_string(),
                    cols[1].to_string(),
                    parse_num(cols[2], no)?,
                ));
            }
            Section::Targets => {
                if cols.len() != 2 {
                    return Err(format_err(no, "target marginal must have 2 columns"));
                }
                target_marginals.insert(cols[0].to_string(), parse_num(cols[1], no)?);
            }
            Section::Features => {
                if cols.len() != 3 {
                    return Err(format_err(no, "feature marginal must have 3 columns"));
                }
                feature_rows.push((
                    parse_num(cols[0], no)?,
                    cols[1].to_string(),
                    parse_num(cols[2], no)?,
                ));
            }
        }
    }
    if !ended {
        return Err(Error::Truncated("missing end marker".into()));
    }
    if records.len() != expected_records {
        return Err(Error::Truncated(format!(
            "expected {expected_records} records, found {}",
            records.len()
        )));
    }
    if feature_rows.len() != expected_features {
        return Err(Error::Truncated(format!(
            "expected {expected_features} features, found {}",
            feature_rows.len()
        )));
    }

    let mut interner = FeatureInterner::new();
    let mut feature_marginals = BTreeMap::new();
    for (id, text, m) in feature_rows {
        if interner.intern(&text) != id {
            return Err(format_err(0, format!("feature ids not dense at {id}")));
        }
        if m != 0.0 {
            feature_marginals.insert(id, m);
        }
    }

    let mut rows: BTreeMap<String, Vec<(FeatureId, f64)>> = BTreeMap::new();
    for (no, target, text, w) in records {
        let id = interner
            .id(&text)
            .ok_or_else(|| format_err(no, format!("unknown feature {text:?}")))?;
        rows.entry(target).or_default().push((id, w));
    }
    let vocab = rows
        .into_iter()
        .map(|(t, mut entries)| {
            entries.sort_unstable_by_key(|&(id, _)| id);
            (t, SparseVector::from_sorted(entries))
        })
        .collect::<BTreeMap<_, _>>();
    // weighted stores may hold targets whose every cell was dropped
    let mut vocab = vocab;
    for t in target_marginals.keys() {
        vocab.entry(t.clone()).or_default();
    }

    Ok(VectorStore {
        vocab,
        interner,
        target_marginals,
        feature_marginals,
        grand_total,
        meta: StoreMeta {
            model_type,
            max_order,
            window,
            weighting,
            config,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Feature;

    fn ev(target: &str, feature: &str) -> CooccurrenceEvent {
        CooccurrenceEvent {
            target: target.into(),
            feature: Feature::Untyped(feature.into()),
            count: 1,
        }
    }

    fn toy() -> VectorStore {
        let events = vec![
            ev("a", "x"),
            ev("a", "x"),
            ev("a", "y"),
            ev("b", "x"),
            ev("b", "z"),
            ev("b", "z"),
            ev("c", "y"),
        ];
        accumulate(&events, StoreMeta::untyped(2))
    }

    #[test]
    fn accumulate_empty() {
        let s = accumulate(&[], StoreMeta::untyped(5));
        assert!(s.is_empty());
        assert_eq!(s.grand_total, 0.0);
    }

    #[test]
    fn accumulate_sums_duplicates() {
        let s = toy();
        assert_eq!(s.weight("a", "x"), Some(2.0));
        assert_eq!(s.grand_total, 7.0);
        assert_eq!(s.target_marginals["b"], 3.0);
        assert_eq!(s.feature_marginals[&s.interner.id("x").unwrap()], 3.0);
    }

    #[test]
    fn accumulator_merge_is_order_free() {
        let events = [ev("a", "x"), ev("b", "y"), ev("a", "y")];
        let mut left = Accumulator::new();
        left.add(&events[0]);
        let mut right = Accumulator::new();
        right.extend(&events[1..]);
        let mut merged = right.clone();
        merged.merge(left.clone());
        left.merge(right);
        let meta = StoreMeta::untyped(1);
        assert_eq!(left.finish(meta.clone()), merged.finish(meta));
    }

    #[test]
    fn filter_identity() {
        let s = toy();
        let t = FilterThresholds {
            min_feature_count: 1,
            min_nnz: 1,
            min_term_freq: 1,
        };
        assert_eq!(filter(&s, t).unwrap(), s);
        assert_eq!(filter(&s, FilterThresholds::NONE).unwrap(), s);
    }

    #[test]
    fn filter_drops_rare_feature() {
        // x: 3, y: 2, z: 2
        let s = toy();
        let out = filter(
            &s,
            FilterThresholds {
                min_feature_count: 3,
                ..FilterThresholds::NONE
            },
        )
        .unwrap();
        assert!(out.interner.id("y").is_none());
        assert!(out.interner.id("z").is_none());
        assert_eq!(out.weight("a", "x"), Some(2.0));
        assert!(!out.vocab.contains_key("c"));
        assert_eq!(out.feature_marginals.len(), 1);
        assert_eq!(out.grand_total, 3.0);
    }

    #[test]
    fn filter_drops_sparse_vectors_and_rare_terms() {
        let s = toy();
        let nnz = filter(
            &s,
            FilterThresholds {
                min_nnz: 2,
                ..FilterThresholds::NONE
            },
        )
        .unwrap();
        assert_eq!(nnz.vocab.keys().collect::<Vec<_>>(), vec!["a", "b"]);

        let freq = filter(
            &s,
            FilterThresholds {
                min_term_freq: 3,
                ..FilterThresholds::NONE
            },
        )
        .unwrap();
        assert_eq!(freq.vocab.keys().collect::<Vec<_>>(), vec!["a", "b"]);
        assert_eq!(freq.grand_total, 6.0);
    }

    #[test]
    fn filter_refuses_weighted() {
        let w = sppmi(&toy(), ShiftK::new(1.0).unwrap()).unwrap();
        assert!(matches!(
            filter(&w, FilterThresholds::NONE),
            Err(Error::NotRaw)
        ));
    }

    #[test]
    fn sppmi_hand_example() {
        // grand total 100, count 10, margins 20 and 20
        let mut acc = Accumulator::new();
        let mut push = |t: &str, f: &str, n: u64| {
            acc.add(&CooccurrenceEvent {
                target: t.into(),
                feature: Feature::Untyped(f.into()),
                count: n,
            })
        };
        push("w", "c", 10);
        push("w", "d", 10);
        push("v", "c", 10);
        push("v", "e", 70);
        let s = acc.finish(StoreMeta::untyped(1));
        assert_eq!(s.grand_total, 100.0);

        let k1 = sppmi(&s, ShiftK::new(1.0).unwrap()).unwrap();
        assert!((k1.weight("w", "c").unwrap() - 2.5f64.ln()).abs() < 1e-12);
        assert!((k1.weight("w", "c").unwrap() - 0.9163).abs() < 1e-4);

        let k5 = sppmi(&s, ShiftK::new(5.0).unwrap()).unwrap();
        assert_eq!(k5.weight("w", "c"), None);
        assert_eq!(
            k5.meta.weighting,
            Weighting::Sppmi(ShiftK::new(5.0).unwrap())
        );
        assert_eq!(k5.target_marginals, s.target_marginals);
    }

    #[test]
    fn sppmi_independence_cell_dropped() {
        // P(w,c) = P(w) P(c) for every cell
        let mut acc = Accumulator::new();
        for (t, f) in [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")] {
            acc.add(&ev(t, f));
        }
        let s = acc.finish(StoreMeta::untyped(1));
        let w = sppmi(&s, ShiftK::new(1.0).unwrap()).unwrap();
        assert_eq!(w.nnz(), 0);
    }

    #[test]
    fn double_weighting_is_an_error() {
        let w = sppmi(&toy(), ShiftK::new(1.0).unwrap()).unwrap();
        assert!(matches!(
            sppmi(&w, ShiftK::new(1.0).unwrap()),
            Err(Error::AlreadyWeighted(_))
        ));
    }

    #[test]
    fn shift_must_be_at_least_one() {
        assert!(ShiftK::new(0.5).is_err());
        assert!(ShiftK::new(f64::NAN).is_err());
        assert!(ShiftK::new(1.0).is_ok());
    }

    fn round_trip(store: &VectorStore) -> VectorStore {
        let mut buf = Vec::new();
        write_store(store, &mut buf).unwrap();
        read_store(buf.as_slice()).unwrap()
    }

    #[test]
    fn empty_round_trip() {
        let s = VectorStore::empty(StoreMeta::typed(3));
        assert_eq!(round_trip(&s), s);
    }

    #[test]
    fn weighted_round_trip_and_gzip() {
        let mut s = sppmi(&toy(), ShiftK::new(1.0).unwrap()).unwrap();
        s.meta.config = Some("{\"k\":1}".into());
        assert_eq!(round_trip(&s), s);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.tsv.gz");
        save(&s, &path).unwrap();
        assert_eq!(load(&path).unwrap(), s);
        let header = read_header(&path).unwrap();
        assert_eq!(header[0], MAGIC);
        assert!(header.contains(&"weighting\tsppmi".to_string()));
    }

    #[test]
    fn load_rejects_bad_magic_and_truncation() {
        assert!(matches!(
            read_store("not-a-store\n##\n".as_bytes()),
            Err(Error::Format { line: 1, .. })
        ));

        let mut buf = Vec::new();
        write_store(&toy(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut = &text[..text.find("## target_marginals").unwrap()];
        assert!(matches!(
            read_store(cut.as_bytes()),
            Err(Error::Truncated(_))
        ));

        let bumped = text.replace("format_version\t1", "format_version\t9");
        assert!(matches!(
            read_store(bumped.as_bytes()),
            Err(Error::Version(_))
        ));
    }
}
