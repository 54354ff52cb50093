//! Gold-standard datasets, Spearman correlation and experiment drivers.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::composition::{Composer, CompositionMode, PhraseSpec, PhraseType, RelationMap};
use crate::error::{Error, Result};
use crate::inference::{Inference, InferenceConfig};
use crate::ingest::open_input;
use crate::retrieval::{NeighbourIndex, NeighbourSet, Query, RetrievalPolicy, SynonymLexicon};
use crate::store::{sppmi, ShiftK, VectorStore, Weighting};
use crate::vector::{cosine, SparseVector};

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold one tie group, ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::UndefinedCorrelation(format!(
            "length mismatch {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 2 observations, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::UndefinedCorrelation("NaN in input".into()));
    }
    let rx = fractional_ranks(xs);
    let ry = fractional_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero rank variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Tab,
    Whitespace,
    Comma,
}

impl Delimiter {
    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Tab => line.split('\t').map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// Malformed rows abort loading.
    #[default]
    Strict,
    /// Malformed rows are skipped and counted.
    Lenient,
}

/// Column layout of a word-pair file (0-based columns).
#[derive(Debug, Clone, PartialEq)]
pub struct WordSchema {
    pub delimiter: Delimiter,
    pub header: bool,
    pub first: usize,
    pub second: usize,
    pub score: usize,
    /// Strip `-n`/`-v`/`-j` style POS suffixes (MEN).
    pub strip_pos_suffix: bool,
    pub range: Option<(f64, f64)>,
}

impl WordSchema {
    pub fn tsv() -> Self {
        WordSchema {
            delimiter: Delimiter::Tab,
            header: false,
            first: 0,
            second: 1,
            score: 2,
            strip_pos_suffix: false,
            range: None,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::tsv();
        Ok(match name {
            "tsv" => base,
            "men" => WordSchema {
                delimiter: Delimiter::Whitespace,
                strip_pos_suffix: true,
                range: Some((0.0, 50.0)),
                ..base
            },
            "simlex" => WordSchema {
                header: true,
                score: 3,
                range: Some((0.0, 10.0)),
                ..base
            },
            "wordsim" => WordSchema {
                range: Some((0.0, 10.0)),
                ..base
            },
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown word schema preset {name:?}"
                )))
            }
        })
    }
}

/// Column layout of a phrase-pair file (0-based columns). Each phrase is
/// given in surface order.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseSchema {
    pub delimiter: Delimiter,
    pub header: bool,
    pub phrase_type: usize,
    pub phrase1: (usize, usize),
    pub phrase2: (usize, usize),
    pub score: usize,
    pub range: Option<(f64, f64)>,
}

impl PhraseSchema {
    /// `type<TAB>w1<TAB>w2<TAB>w3<TAB>w4<TAB>score`
    pub fn tsv() -> Self {
        PhraseSchema {
            delimiter: Delimiter::Tab,
            header: false,
            phrase_type: 0,
            phrase1: (1, 2),
            phrase2: (3, 4),
            score: 5,
            range: None,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name {
            "tsv" => Self::tsv(),
            // participant type group w1 w2 w3 w4 score
            "ml2010" => PhraseSchema {
                delimiter: Delimiter::Whitespace,
                header: true,
                phrase_type: 1,
                phrase1: (3, 4),
                phrase2: (5, 6),
                score: 7,
                range: Some((1.0, 7.0)),
            },
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown phrase schema preset {name:?}"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordPairItem {
    pub w1: String,
    pub w2: String,
    pub gold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhrasePairItem {
    pub phrase_type: PhraseType,
    /// Surface word order.
    pub phrase1: (String, String),
    pub phrase2: (String, String),
    pub gold: f64,
}

impl PhrasePairItem {
    pub fn specs(&self, relations: &RelationMap) -> Result<(PhraseSpec, PhraseSpec)> {
        Ok((
            PhraseSpec::from_surface(
                self.phrase_type,
                &self.phrase1.0,
                &self.phrase1.1,
                relations,
            )?,
            PhraseSpec::from_surface(
                self.phrase_type,
                &self.phrase2.0,
                &self.phrase2.1,
                relations,
            )?,
        ))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Loaded<T> {
    pub items: Vec<T>,
    pub skipped: usize,
}

fn strip_pos(word: &str) -> &str {
    match word.rsplit_once('-') {
        Some((w, tag)) if tag.len() == 1 && !w.is_empty() => w,
        _ => word,
    }
}

/// Groups rows by key, averaging the scores, in order of first appearance.
struct MeanAggregator<K> {
    order: Vec<K>,
    sums: HashMap<K, (f64, usize)>,
}

impl<K: std::hash::Hash + Eq + Clone> MeanAggregator<K> {
    fn new() -> Self {
        MeanAggregator {
            order: Vec::new(),
            sums: HashMap::new(),
        }
    }

    fn add(&mut self, key: K, score: f64) {
        let slot = self.sums.entry(key.clone()).or_insert_with(|| {
            self.order.push(key);
            (0.0, 0)
        });
        slot.0 += score;
        slot.1 += 1;
    }

    fn finish(self) -> Vec<(K, f64)> {
        let sums = self.sums;
        self.order
            .into_iter()
            .map(|k| {
                let (s, n) = sums[&k];
                (k, s / n as f64)
            })
            .collect()
    }
}

fn parse_rows<R, F>(
    reader: R,
    source: &str,
    header: bool,
    mode: LoadMode,
    mut row: F,
) -> Result<usize>
where
    R: BufRead,
    F: FnMut(&str) -> std::result::Result<(), String>,
{
    let mut skipped = 0;
    let mut first = true;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if std::mem::take(&mut first) && header {
            continue;
        }
        if let Err(message) = row(&line) {
            match mode {
                LoadMode::Strict => {
                    return Err(Error::Dataset {
                        path: source.to_string(),
                        line: i + 1,
                        message,
                    })
                }
                LoadMode::Lenient => skipped += 1,
            }
        }
    }
    Ok(skipped)
}

fn score_of(
    cols: &[&str],
    col: usize,
    range: Option<(f64, f64)>,
) -> std::result::Result<f64, String> {
    let raw = cols
        .get(col)
        .ok_or_else(|| format!("missing score column {}", col + 1))?;
    let score: f64 = raw
        .parse()
        .map_err(|_| format!("cannot parse score {raw:?}"))?;
    if !score.is_finite() {
        return Err(format!("non-finite score {raw:?}"));
    }
    if let Some((lo, hi)) = range {
        if score < lo || score > hi {
            return Err(format!("score {score} outside [{lo}, {hi}]"));
        }
    }
    Ok(score)
}

pub fn read_word_pairs<R: BufRead>(
    reader: R,
    source: &str,
    schema: &WordSchema,
    mode: LoadMode,
) -> Result<Loaded<WordPairItem>> {
    let mut agg = MeanAggregator::new();
    let skipped = parse_rows(reader, source, schema.header, mode, |line| {
        let cols = schema.delimiter.split(line);
        let word = |c: usize| {
            cols.get(c)
                .filter(|w| !w.is_empty())
                .map(|w| {
                    let w = if schema.strip_pos_suffix {
                        strip_pos(w)
                    } else {
                        w
                    };
                    w.to_lowercase()
                })
                .ok_or_else(|| format!("missing word column {}", c + 1))
        };
        let (w1, w2) = (word(schema.first)?, word(schema.second)?);
        let score = score_of(&cols, schema.score, schema.range)?;
        agg.add((w1, w2), score);
        Ok(())
    })?;
    let items = agg
        .finish()
        .into_iter()
        .map(|((w1, w2), gold)| WordPairItem { w1, w2, gold })
        .collect();
    Ok(Loaded { items, skipped })
}

pub fn load_word_pairs(
    path: &Path,
    schema: &WordSchema,
    mode: LoadMode,
) -> Result<Loaded<WordPairItem>> {
    read_word_pairs(open_input(path)?, &path.display().to_string(), schema, mode)
}

/// Reads phrase pairs; multiple ratings of one pair are averaged.
pub fn read_phrase_pairs<R: BufRead>(
    reader: R,
    source: &str,
    schema: &PhraseSchema,
    mode: LoadMode,
) -> Result<Loaded<PhrasePairItem>> {
    type Key = (PhraseType, (String, String), (String, String));
    let mut agg: MeanAggregator<Key> = MeanAggregator::new();
    let skipped = parse_rows(reader, source, schema.header, mode, |line| {
        let cols = schema.delimiter.split(line);
        let word = |c: usize| {
            cols.get(c)
                .filter(|w| !w.is_empty())
                .map(|w| w.to_lowercase())
                .ok_or_else(|| format!("missing word column {}", c + 1))
        };
        let phrase_type: PhraseType = cols
            .get(schema.phrase_type)
            .ok_or("missing phrase type column")?
            .parse()
            .map_err(|e: Error| e.to_string())?;
        let p1 = (word(schema.phrase1.0)?, word(schema.phrase1.1)?);
        let p2 = (word(schema.phrase2.0)?, word(schema.phrase2.1)?);
        let score = score_of(&cols, schema.score, schema.range)?;
        agg.add((phrase_type, p1, p2), score);
        Ok(())
    })?;
    let items = agg
        .finish()
        .into_iter()
        .map(|((phrase_type, phrase1, phrase2), gold)| PhrasePairItem {
            phrase_type,
            phrase1,
            phrase2,
            gold,
        })
        .collect();
    Ok(Loaded { items, skipped })
}

pub fn load_phrase_pairs(
    path: &Path,
    schema: &PhraseSchema,
    mode: LoadMode,
) -> Result<Loaded<PhrasePairItem>> {
    read_phrase_pairs(open_input(path)?, &path.display().to_string(), schema, mode)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub rho: f64,
    pub scored: usize,
    pub total: usize,
    pub k: Option<f64>,
    /// Retrieval policy label, or `none` without inference.
    pub di: String,
    pub mode: Option<CompositionMode>,
}

impl EvalReport {
    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.scored as f64 / self.total as f64
        }
    }

    pub fn excluded(&self) -> usize {
        self.total - self.scored
    }
}

fn store_k(store: &VectorStore) -> Option<f64> {
    match store.meta.weighting {
        Weighting::Sppmi(k) => Some(k.value()),
        Weighting::Raw => None,
    }
}

fn di_label(di: Option<&InferenceConfig>) -> String {
    di.map_or_else(|| "none".to_string(), InferenceConfig::label)
}

fn correlate(dataset: &str, pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::NothingScored(dataset.to_string()));
    }
    let (sims, golds): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    spearman(&sims, &golds)
}

/// Cosine of every in-vocabulary pair against gold; pairs with an
/// out-of-vocabulary word are excluded and show up in coverage.
pub fn eval_wordsim(
    inference: &Inference<'_>,
    dataset: &str,
    items: &[WordPairItem],
    di: Option<&InferenceConfig>,
) -> Result<EvalReport> {
    let store = inference.store();
    let mut reprs: HashMap<&str, SparseVector> = HashMap::new();
    let mut pairs = Vec::with_capacity(items.len());
    for item in items {
        for w in [item.w1.as_str(), item.w2.as_str()] {
            if reprs.contains_key(w) || store.get(w).is_none() {
                continue;
            }
            let v = match di {
                Some(cfg) => inference.enrich(Query::Entry(w), cfg)?.result,
                None => store.get(w).cloned().unwrap_or_default(),
            };
            reprs.insert(w, v);
        }
        if let (Some(a), Some(b)) = (reprs.get(item.w1.as_str()), reprs.get(item.w2.as_str())) {
            pairs.push((cosine(a, b), item.gold));
        }
    }
    let rho = correlate(dataset, &pairs)?;
    Ok(EvalReport {
        dataset: dataset.to_string(),
        rho,
        scored: pairs.len(),
        total: items.len(),
        k: store_k(store),
        di: di_label(di),
        mode: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionReport {
    pub per_type: Vec<EvalReport>,
    /// Unweighted mean of the per-type rhos.
    pub average: f64,
}

/// Phrase similarity per phrase type. `per_type_n` overrides the number of
/// neighbours consumed for a given type.
pub fn eval_composition(
    inference: &Inference<'_>,
    composer: &mut Composer<'_>,
    dataset: &str,
    items: &[PhrasePairItem],
    mode: CompositionMode,
    di: Option<&InferenceConfig>,
    per_type_n: &BTreeMap<PhraseType, usize>,
) -> Result<CompositionReport> {
    let k = store_k(inference.store());
    let mut per_type = Vec::new();
    for phrase_type in PhraseType::ALL {
        let subset: Vec<&PhrasePairItem> = items
            .iter()
            .filter(|i| i.phrase_type == phrase_type)
            .collect();
        if subset.is_empty() {
            continue;
        }
        let cfg = di.map(|c| match per_type_n.get(&phrase_type) {
            Some(&n) => c.with_budget(n),
            None => c.clone(),
        });
        let mut cache: HashMap<PhraseSpec, Option<SparseVector>> = HashMap::new();
        let mut pairs = Vec::with_capacity(subset.len());
        for item in &subset {
            let (s1, s2) = item.specs(&composer.relations)?;
            let mut vecs = [None, None];
            for (slot, spec) in vecs.iter_mut().zip([s1, s2]) {
                if !cache.contains_key(&spec) {
                    let v = match composer.compose_with_di(inference, &spec, mode, cfg.as_ref()) {
                        Ok(v) => Some(v),
                        Err(Error::OutOfVocabulary(_)) => None,
                        Err(e) => return Err(e),
                    };
                    cache.insert(spec.clone(), v);
                }
                *slot = cache[&spec].clone();
            }
            if let [Some(a), Some(b)] = vecs {
                pairs.push((cosine(&a, &b), item.gold));
            }
        }
        let name = format!("{dataset}:{phrase_type}");
        let rho = correlate(&name, &pairs)?;
        per_type.push(EvalReport {
            dataset: name,
            rho,
            scored: pairs.len(),
            total: subset.len(),
            k,
            di: di_label(cfg.as_ref()),
            mode: Some(mode),
        });
    }
    if per_type.is_empty() {
        return Err(Error::NothingScored(dataset.to_string()));
    }
    let average = per_type.iter().map(|r| r.rho).sum::<f64>() / per_type.len() as f64;
    Ok(CompositionReport { per_type, average })
}

pub const REPORT_HEADER: &str = "dataset\tk\tdi\tmode\trho\tcoverage\tscored\ttotal";

/// Full-precision TSV rows.
pub fn reports_tsv(reports: &[EvalReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.dataset,
            r.k.map_or("-".to_string(), |k| k.to_string()),
            r.di,
            r.mode.map_or("-".to_string(), |m| m.to_string()),
            r.rho,
            r.coverage(),
            r.scored,
            r.total
        );
    }
    out
}

/// Column-aligned table with 4-decimal numbers.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
    }
    let mut out = String::new();
    let line = |cells: &mut dyn Iterator<Item = &str>, out: &mut String| {
        let parts: Vec<String> = cells
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut header.iter().copied(), &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("  "));
    out.push('\n');
    for row in rows {
        line(&mut row.iter().map(String::as_str), &mut out);
    }
    out
}

pub fn reports_table(reports: &[EvalReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.dataset.clone(),
                r.k.map_or("-".to_string(), |k| k.to_string()),
                r.di.clone(),
                r.mode.map_or("-".to_string(), |m| m.to_string()),
                format!("{:.4}", r.rho),
                format!("{:.4}", r.coverage()),
            ]
        })
        .collect();
    render_table(&["dataset", "k", "di", "mode", "rho", "coverage"], &rows)
}

#[derive(Debug, Clone)]
pub enum PolicyKind {
    /// No distributional inference.
    NoInference,
    Static,
    Density {
        delta: f64,
    },
    Lexicon(Arc<SynonymLexicon>),
}

impl PolicyKind {
    fn config(&self, n: usize) -> Option<InferenceConfig> {
        let policy = match self {
            PolicyKind::NoInference => return None,
            PolicyKind::Static => RetrievalPolicy::StaticTopN { n },
            PolicyKind::Density { delta } => RetrievalPolicy::DensityWindow {
                delta: *delta,
                cap: n,
            },
            PolicyKind::Lexicon(lexicon) => RetrievalPolicy::Lexicon {
                lexicon: Arc::clone(lexicon),
                cap: n,
            },
        };
        Some(InferenceConfig::with_policy(policy))
    }

    pub fn name(&self) -> String {
        match self {
            PolicyKind::NoInference => "none".into(),
            PolicyKind::Static => "static".into(),
            PolicyKind::Density { delta } => format!("density({delta})"),
            PolicyKind::Lexicon(_) => "lexicon".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub ks: Vec<f64>,
    pub ns: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    pub modes: Vec<CompositionMode>,
}

#[derive(Debug, Clone)]
pub enum SweepTask {
    WordSim {
        name: String,
        items: Vec<WordPairItem>,
    },
    Composition {
        name: String,
        items: Vec<PhrasePairItem>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: f64,
    pub policy: String,
    pub n: usize,
    pub mode: Option<CompositionMode>,
    pub dataset: String,
    /// rho and coverage, or the error that stopped this cell.
    pub outcome: std::result::Result<(f64, f64), String>,
}

impl SweepRow {
    fn sort_key(&self) -> (&str, usize, Option<CompositionMode>, &str) {
        (&self.policy, self.n, self.mode, &self.dataset)
    }
}

/// Evaluates the Cartesian product of the grid over a raw store. The store
/// is weighted once per k; cell failures are recorded in the row instead of
/// aborting the sweep. Rows come back sorted by configuration.
pub fn sweep(
    raw: &VectorStore,
    grid: &SweepGrid,
    tasks: &[SweepTask],
    relations: &RelationMap,
) -> Result<Vec<SweepRow>> {
    if grid.ks.is_empty() || grid.policies.is_empty() || tasks.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let ns: Vec<usize> = if grid.ns.is_empty() {
        vec![0]
    } else {
        grid.ns.clone()
    };
    let modes: Vec<CompositionMode> = if grid.modes.is_empty() {
        vec![CompositionMode::Union]
    } else {
        grid.modes.clone()
    };

    let weighted: Vec<(f64, VectorStore)> = grid
        .ks
        .par_iter()
        .map(|&k| Ok((k, sppmi(raw, ShiftK::new(k)?)?)))
        .collect::<Result<_>>()?;

    let mut rows: Vec<SweepRow> = weighted
        .par_iter()
        .flat_map_iter(|(k, store)| {
            let inference = Inference::new(store).expect("weighted above");
            let mut rows = Vec::new();
            for policy in &grid.policies {
                let cell_ns: &[usize] = match policy {
                    PolicyKind::NoInference => &[0],
                    _ => &ns,
                };
                for &n in cell_ns {
                    let cfg = policy.config(n);
                    for task in tasks {
                        rows.extend(run_task(
                            &inference,
                            task,
                            *k,
                            policy,
                            n,
                            cfg.as_ref(),
                            &modes,
                            relations,
                        ));
                    }
                }
            }
            rows
        })
        .collect();
    rows.sort_by(|a, b| {
        a.k.total_cmp(&b.k)
            .then_with(|| a.sort_key().cmp(&b.sort_key()))
    });
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn run_task(
    inference: &Inference<'_>,
    task: &SweepTask,
    k: f64,
    policy: &PolicyKind,
    n: usize,
    cfg: Option<&InferenceConfig>,
    modes: &[CompositionMode],
    relations: &RelationMap,
) -> Vec<SweepRow> {
    let row = |mode, dataset: String, outcome| SweepRow {
        k,
        policy: policy.name(),
        n,
        mode,
        dataset,
        outcome,
    };
    match task {
        SweepTask::WordSim { name, items } => {
            let outcome = eval_wordsim(inference, name, items, cfg)
                .map(|r| (r.rho, r.coverage()))
                .map_err(|e| e.to_string());
            vec![row(None, name.clone(), outcome)]
        }
        SweepTask::Composition { name, items } => {
            let mut out = Vec::new();
            for &mode in modes {
                let mut composer =
                    Composer::new(inference.store()).with_relations(relations.clone());
                match eval_composition(
                    inference,
                    &mut composer,
                    name,
                    items,
                    mode,
                    cfg,
                    &BTreeMap::new(),
                ) {
                    Ok(report) => {
                        for r in &report.per_type {
                            out.push(row(
                                Some(mode),
                                r.dataset.clone(),
                                Ok((r.rho, r.coverage())),
                            ));
                        }
                        out.push(row(
                            Some(mode),
                            format!("{name}:average"),
                            Ok((report.average, f64::NAN)),
                        ));
                    }
                    Err(e) => out.push(row(Some(mode), name.clone(), Err(e.to_string()))),
                }
            }
            out
        }
    }
}

pub const SWEEP_HEADER: &str = "k\tpolicy\tn\tmode\tdataset\trho\tcoverage\tstatus";

pub fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let mode = r.mode.map_or("-".to_string(), |m| m.to_string());
        let (rho, coverage, status) = match &r.outcome {
            Ok((rho, cov)) => (
                rho.to_string(),
                if cov.is_nan() {
                    "-".to_string()
                } else {
                    cov.to_string()
                },
                "ok".to_string(),
            ),
            Err(e) => ("-".to_string(), "-".to_string(), format!("failed: {e}")),
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.k, r.policy, r.n, mode, r.dataset, rho, coverage, status
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DumpQuery {
    Word(String),
    Phrase(PhraseSpec),
}

impl DumpQuery {
    pub fn label(&self) -> String {
        match self {
            DumpQuery::Word(w) => w.clone(),
            DumpQuery::Phrase(p) => p.surface(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpRow {
    pub query: String,
    pub condition: String,
    pub neighbours: std::result::Result<NeighbourSet, String>,
}

/// Nearest neighbours of words and phrases over a pool of every store
/// entry plus every composed phrase (the queried phrases and `pool`).
/// Produces a `no-di` row per query, and a `di` row as well when `di` is
/// given.
pub fn dump_neighbours(
    store: &VectorStore,
    queries: &[DumpQuery],
    pool: &[PhraseSpec],
    mode: CompositionMode,
    di: Option<&InferenceConfig>,
    n: usize,
    relations: &RelationMap,
) -> Result<Vec<DumpRow>> {
    let inference = Inference::new(store)?;
    let mut phrases: Vec<PhraseSpec> = pool.to_vec();
    for q in queries {
        if let DumpQuery::Phrase(p) = q {
            if !phrases.contains(p) {
                phrases.push(p.clone());
            }
        }
    }

    let mut conditions: Vec<(&str, Option<&InferenceConfig>)> = vec![("no-di", None)];
    if let Some(cfg) = di {
        conditions.push(("di", Some(cfg)));
    }

    let mut rows_by_condition = Vec::new();
    for (label, cfg) in conditions {
        let mut composer = Composer::new(store).with_relations(relations.clone());
        let mut extra = Vec::new();
        let mut phrase_vectors: HashMap<PhraseSpec, std::result::Result<SparseVector, String>> =
            HashMap::new();
        for spec in &phrases {
            let v = composer
                .compose_with_di(&inference, spec, mode, cfg)
                .map_err(|e| e.to_string());
            if let Ok(v) = &v {
                extra.push((spec.surface(), v.clone()));
            }
            phrase_vectors.insert(spec.clone(), v);
        }
        let (index, names) = NeighbourIndex::with_extra(store, extra);
        let pool_names: HashMap<String, String> = phrases
            .iter()
            .filter(|p| phrase_vectors[*p].is_ok())
            .map(|p| p.surface())
            .zip(names)
            .collect();

        let mut rows = Vec::new();
        for q in queries {
            let outcome = match q {
                DumpQuery::Word(w) => match store.get(w) {
                    None => Err(format!("OOV {w}")),
                    Some(base) => {
                        let v = match cfg {
                            Some(c) => inference.enrich(Query::Entry(w), c)?.result,
                            None => base.clone(),
                        };
                        let exclude = [w.clone()].into();
                        index
                            .top_n(Query::Vector(&v), n, &exclude)
                            .map_err(|e| e.to_string())
                    }
                },
                DumpQuery::Phrase(p) => match &phrase_vectors[p] {
                    Err(e) => Err(e.clone()),
                    Ok(v) => {
                        let exclude = [pool_names[&p.surface()].clone()].into();
                        index
                            .top_n(Query::Vector(v), n, &exclude)
                            .map_err(|e| e.to_string())
                    }
                },
            };
            rows.push(DumpRow {
                query: q.label(),
                condition: label.to_string(),
                neighbours: outcome,
            });
        }
        rows_by_condition.push(rows);
    }

    // one row per query and condition, query-major
    let mut out = Vec::new();
    for i in 0..queries.len() {
        for rows in &rows_by_condition {
            out.push(rows[i].clone());
        }
    }
    Ok(out)
}

pub fn dump_table(rows: &[DumpRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let cell = match &r.neighbours {
                Ok(set) => set
                    .iter()
                    .map(|nb| format!("{} ({:.4})", nb.name, nb.similarity))
                    .collect::<Vec<_>>()
                    .join(", "),
                Err(e) => e.clone(),
            };
            vec![r.query.clone(), r.condition.clone(), cell]
        })
        .collect();
    render_table(&["query", "condition", "neighbours"], &body)
}
