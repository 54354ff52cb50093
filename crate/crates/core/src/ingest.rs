//! CoNLL-style corpus reading and co-occurrence extraction.
//!
//! Typed extraction walks the unique tree path between every token pair up
//! to a configured order; untyped extraction counts lemmas inside a
//! symmetric window. Both are pure per-sentence functions, so a corpus can
//! be sharded freely and the resulting counts merged by addition.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use crate::error::{Error, Result};
use crate::path::{DepPath, Step, TypedFeature, LEXEME_SEPARATOR};

/// 1-based column positions of the fields we read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnMap {
    pub index: usize,
    pub form: usize,
    pub lemma: usize,
    pub pos: usize,
    pub head: usize,
    pub rel: usize,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            index: 1,
            form: 2,
            lemma: 3,
            pos: 4,
            head: 7,
            rel: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeyScheme {
    #[default]
    Lemma,
    /// `lemma/POS`
    LemmaPos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestConfig {
    pub columns: ColumnMap,
    /// POS tags excluded from both targets and contexts.
    pub stop_pos: BTreeSet<String>,
    pub key_scheme: KeyScheme,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            columns: ColumnMap::default(),
            stop_pos: ["PUNCT", "."].iter().map(|s| s.to_string()).collect(),
            key_scheme: KeyScheme::Lemma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRecord {
    pub index: usize,
    pub lemma: String,
    pub pos: String,
    /// 0 is the root.
    pub head: usize,
    pub rel: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencySentence {
    tokens: Vec<TokenRecord>,
    /// dependents[i] lists the 0-based positions whose head is token i+1.
    dependents: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SentenceError {
    Empty,
    NonConsecutiveIndex { expected: usize, found: usize },
    HeadOutOfRange { index: usize, head: usize },
    SelfLoop(usize),
    EmptyLemma(usize),
    RootCount(usize),
    Cycle(usize),
}

impl fmt::Display for SentenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SentenceError::Empty => write!(f, "empty sentence"),
            SentenceError::NonConsecutiveIndex { expected, found } => {
                write!(f, "expected token index {expected}, found {found}")
            }
            SentenceError::HeadOutOfRange { index, head } => {
                write!(f, "token {index} has head {head} outside the sentence")
            }
            SentenceError::SelfLoop(i) => write!(f, "token {i} is its own head"),
            SentenceError::EmptyLemma(i) => write!(f, "token {i} has an empty lemma"),
            SentenceError::RootCount(n) => write!(f, "expected a single root, found {n}"),
            SentenceError::Cycle(i) => write!(f, "token {i} is on a head cycle"),
        }
    }
}

impl DependencySentence {
    /// Validates that the tokens form a single-rooted tree.
    pub fn new(tokens: Vec<TokenRecord>) -> std::result::Result<Self, SentenceError> {
        if tokens.is_empty() {
            return Err(SentenceError::Empty);
        }
        let n = tokens.len();
        let mut roots = 0;
        for (pos, tok) in tokens.iter().enumerate() {
            if tok.index != pos + 1 {
                return Err(SentenceError::NonConsecutiveIndex {
                    expected: pos + 1,
                    found: tok.index,
                });
            }
            if tok.head > n {
                return Err(SentenceError::HeadOutOfRange {
                    index: tok.index,
                    head: tok.head,
                });
            }
            if tok.head == tok.index {
                return Err(SentenceError::SelfLoop(tok.index));
            }
            if tok.lemma.is_empty() {
                return Err(SentenceError::EmptyLemma(tok.index));
            }
            if tok.head == 0 {
                roots += 1;
            }
        }
        if roots != 1 {
            return Err(SentenceError::RootCount(roots));
        }
        // every token must reach the root within n steps
        for tok in &tokens {
            let mut cur = tok.head;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > n {
                    return Err(SentenceError::Cycle(tok.index));
                }
                cur = tokens[cur - 1].head;
            }
        }
        let mut dependents = vec![Vec::new(); n];
        for (pos, tok) in tokens.iter().enumerate() {
            if tok.head > 0 {
                dependents[tok.head - 1].push(pos);
            }
        }
        Ok(DependencySentence { tokens, dependents })
    }

    pub fn tokens(&self) -> &[TokenRecord] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn root(&self) -> usize {
        self.tokens.iter().position(|t| t.head == 0).unwrap_or(0)
    }

    /// Tree neighbours of the token at 0-based `pos`, with the step taken
    /// to reach each: up to the head is inverse, down to a dependent is
    /// forward.
    pub fn neighbours(&self, pos: usize) -> impl Iterator<Item = (usize, Step)> + '_ {
        let tok = &self.tokens[pos];
        let up = (tok.head > 0).then(|| (tok.head - 1, Step::inverse(tok.rel.clone())));
        let down = self.dependents[pos]
            .iter()
            .map(move |&d| (d, Step::forward(self.tokens[d].rel.clone())));
        up.into_iter().chain(down)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    Typed(TypedFeature),
    Untyped(String),
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Typed(t) => t.fmt(f),
            Feature::Untyped(lexeme) => f.write_str(lexeme),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CooccurrenceEvent {
    pub target: String,
    pub feature: Feature,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub sentences: usize,
    pub skipped: usize,
}

/// Opens a corpus file, transparently decompressing gzip input.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let wrap = |source| Error::Ingest {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::open(path).map_err(wrap)?;
    let mut magic = [0u8; 2];
    let read = read_prefix(&mut file, &mut magic).map_err(wrap)?;
    let file = File::open(path).map_err(wrap)?;
    if read == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

fn read_prefix(file: &mut File, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match file.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}

/// Streaming reader over blank-line separated sentence blocks.
pub struct ConllReader<R> {
    lines: io::Lines<R>,
    config: IngestConfig,
    stats: ParseStats,
    line_no: usize,
}

impl<R: BufRead> ConllReader<R> {
    pub fn new(reader: R, config: IngestConfig) -> Self {
        ConllReader {
            lines: reader.lines(),
            config,
            stats: ParseStats::default(),
            line_no: 0,
        }
    }

    pub fn stats(&self) -> ParseStats {
        self.stats
    }

    /// Collects raw token lines of the next block, or `None` at end of input.
    fn next_block(&mut self) -> Option<io::Result<Vec<String>>> {
        let mut block = Vec::new();
        loop {
            match self.lines.next() {
                None => return (!block.is_empty()).then_some(Ok(block)),
                Some(Err(e)) => return Some(Err(e)),
                Some(Ok(line)) => {
                    self.line_no += 1;
                    let line = line.trim_end_matches(['\r', '\n']);
                    if line.trim().is_empty() {
                        if !block.is_empty() {
                            return Some(Ok(block));
                        }
                    } else if !line.starts_with('#') {
                        block.push(line.to_string());
                    }
                }
            }
        }
    }

    fn parse_block(&self, block: &[String]) -> Option<DependencySentence> {
        let cols = &self.config.columns;
        let mut tokens = Vec::with_capacity(block.len());
        for line in block {
            let fields: Vec<&str> = line.split('\t').collect();
            let field = |c: usize| fields.get(c.checked_sub(1)?).copied();
            let index = field(cols.index)?;
            // CoNLL-U multiword ranges and empty nodes
            if index.contains('-') || index.contains('.') {
                continue;
            }
            let index: usize = index.trim().parse().ok()?;
            let head: usize = field(cols.head)?.trim().parse().ok()?;
            let mut lemma = field(cols.lemma)?.trim();
            if lemma == "_" {
                if let Some(form) = field(cols.form).map(str::trim).filter(|f| *f != "_") {
                    lemma = form;
                }
            }
            tokens.push(TokenRecord {
                index,
                lemma: normalize_lemma(lemma),
                pos: field(cols.pos)?.trim().to_string(),
                head,
                rel: field(cols.rel)?.trim().to_string(),
            });
        }
        DependencySentence::new(tokens).ok()
    }
}

/// Lowercases and rewrites the typed-feature separator, which may not occur
/// inside a lexeme.
pub fn normalize_lemma(lemma: &str) -> String {
    lemma.to_lowercase().replace(LEXEME_SEPARATOR, "_")
}

impl<R: BufRead> Iterator for ConllReader<R> {
    type Item = Result<DependencySentence>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let block = match self.next_block()? {
                Ok(block) => block,
                Err(e) => return Some(Err(Error::Io(e))),
            };
            match self.parse_block(&block) {
                Some(sentence) => {
                    self.stats.sentences += 1;
                    return Some(Ok(sentence));
                }
                None => self.stats.skipped += 1,
            }
        }
    }
}

/// Reads a whole stream. Malformed sentences are skipped and counted; an
/// unreadable stream is fatal.
pub fn parse_conll<R: BufRead>(
    reader: R,
    config: &IngestConfig,
) -> Result<(Vec<DependencySentence>, ParseStats)> {
    let mut conll = ConllReader::new(reader, config.clone());
    let sentences = conll.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((sentences, conll.stats()))
}

fn token_key(tok: &TokenRecord, scheme: KeyScheme) -> String {
    match scheme {
        KeyScheme::Lemma => tok.lemma.clone(),
        KeyScheme::LemmaPos => format!("{}/{}", tok.lemma, tok.pos),
    }
}

/// Typed co-occurrences along every tree path of length `1..=max_order`.
pub fn extract_typed(
    sentence: &DependencySentence,
    max_order: usize,
    config: &IngestConfig,
) -> Vec<CooccurrenceEvent> {
    let tokens = sentence.tokens();
    let keep: Vec<bool> = tokens
        .iter()
        .map(|t| !config.stop_pos.contains(&t.pos))
        .collect();
    let keys: Vec<String> = tokens
        .iter()
        .map(|t| token_key(t, config.key_scheme))
        .collect();

    let mut events = Vec::new();
    for start in 0..tokens.len() {
        if !keep[start] {
            continue;
        }
        // depth-first over the tree, never stepping back to where we came from
        let mut path = DepPath::empty();
        walk(
            sentence,
            start,
            None,
            max_order,
            &mut path,
            &mut |node, path| {
                if keep[node] {
                    events.push(CooccurrenceEvent {
                        target: keys[start].clone(),
                        feature: Feature::Typed(TypedFeature::new(
                            path.clone(),
                            keys[node].clone(),
                        )),
                        count: 1,
                    });
                }
            },
        );
    }
    events
}

fn walk(
    sentence: &DependencySentence,
    node: usize,
    came_from: Option<usize>,
    budget: usize,
    path: &mut DepPath,
    emit: &mut impl FnMut(usize, &DepPath),
) {
    if budget == 0 {
        return;
    }
    let next: Vec<(usize, Step)> = sentence
        .neighbours(node)
        .filter(|&(n, _)| Some(n) != came_from)
        .collect();
    for (n, step) in next {
        path.push(step);
        emit(n, path);
        walk(sentence, n, Some(node), budget - 1, path, emit);
        path.pop();
    }
}

/// Untyped co-occurrences within `window` positions on either side.
/// Excluded tokens are removed before windowing.
pub fn extract_window(
    sentence: &DependencySentence,
    window: usize,
    config: &IngestConfig,
) -> Vec<CooccurrenceEvent> {
    let keys: Vec<String> = sentence
        .tokens()
        .iter()
        .filter(|t| !config.stop_pos.contains(&t.pos))
        .map(|t| token_key(t, config.key_scheme))
        .collect();
    let mut events = Vec::new();
    for (i, target) in keys.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(keys.len().saturating_sub(1));
        for (j, context) in keys.iter().enumerate().take(hi + 1).skip(lo) {
            if j == i {
                continue;
            }
            events.push(CooccurrenceEvent {
                target: target.clone(),
                feature: Feature::Untyped(context.clone()),
                count: 1,
            });
        }
    }
    events
}
