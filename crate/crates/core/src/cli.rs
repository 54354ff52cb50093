//! The `aptkit` command line.
//!
//! Every subcommand echoes its resolved options as one JSON line on stderr
//! (`config\t{...}`) and embeds the same JSON in the artifacts it writes.
//! Failures are reported as a single `error\t<kind>\t<message>` line on
//! stderr. Exit status is 0 on success, 1 on a runtime failure and 2 on a
//! usage error (bad flag, missing input file, dataset schema mismatch).

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::composition::{Composer, CompositionMode, PhraseSpec, PhraseType, RelationMap};
use crate::error::{Error, Result};
use crate::evaluation::{
    dump_neighbours, dump_table, eval_composition, eval_wordsim, load_phrase_pairs,
    load_word_pairs, reports_table, reports_tsv, sweep, sweep_tsv, DumpQuery, EvalReport, LoadMode,
    PhraseSchema, PolicyKind, SweepGrid, SweepTask, WordSchema,
};
use crate::inference::{Inference, InferenceConfig};
use crate::ingest::{
    extract_typed, extract_window, open_input, ColumnMap, ConllReader, DependencySentence,
    IngestConfig, KeyScheme,
};
use crate::retrieval::{Query, RetrievalPolicy, SynonymLexicon};
use crate::store::{self, Accumulator, FilterThresholds, ModelType, ShiftK, StoreMeta};

const BATCH: usize = 4096;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "aptkit",
    version,
    about = "Typed and untyped distributional vector spaces"
)]
pub struct Cli {
    /// TOML file of option defaults. Top-level keys apply to every
    /// subcommand, a `[subcommand]` table to that subcommand only; flags
    /// given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build a raw typed (dependency path) count store from parsed corpora.
    BuildTyped(BuildTypedArgs),
    /// Build a raw window-based count store from parsed corpora.
    BuildWindow(BuildWindowArgs),
    /// Drop rare features and sparse or infrequent targets from a raw store.
    Filter(FilterArgs),
    /// Apply shifted PPMI weighting to a raw store.
    Weight(WeightArgs),
    /// Nearest neighbours of an entry.
    Neighbours(NeighboursArgs),
    /// Enrich an entry with its neighbours and print the resulting vector.
    Infer(InferArgs),
    /// Compose a two-word phrase and print the phrase vector.
    Compose(ComposeArgs),
    /// Word similarity evaluation.
    EvalWordsim(EvalWordsimArgs),
    /// Phrase similarity evaluation.
    EvalComp(EvalCompArgs),
    /// Evaluate a grid of shift, policy, neighbour count and composition mode.
    Sweep(SweepArgs),
    /// Print nearest neighbours of words and composed phrases.
    DumpNeighbours(DumpArgs),
    /// Print the header of a saved store.
    Info(InfoArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::BuildTyped(_) => "build-typed",
            Command::BuildWindow(_) => "build-window",
            Command::Filter(_) => "filter",
            Command::Weight(_) => "weight",
            Command::Neighbours(_) => "neighbours",
            Command::Infer(_) => "infer",
            Command::Compose(_) => "compose",
            Command::EvalWordsim(_) => "eval-wordsim",
            Command::EvalComp(_) => "eval-comp",
            Command::Sweep(_) => "sweep",
            Command::DumpNeighbours(_) => "dump-neighbours",
            Command::Info(_) => "info",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyArg {
    Lemma,
    LemmaPos,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Parsed corpus files in CoNLL format, plain or gzip.
    #[arg(long = "input", short = 'i', required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Output store (gzip when the name ends in .gz).
    #[arg(long, short = 'o')]
    pub output: PathBuf,
    /// 1-based columns of index,form,lemma,pos,head,relation.
    #[arg(long, default_value = "1,2,3,4,7,8")]
    pub columns: String,
    /// POS tags dropped as targets and contexts.
    #[arg(long, value_delimiter = ',', default_value = "PUNCT,.")]
    pub stop_pos: Vec<String>,
    #[arg(long, value_enum, default_value_t = KeyArg::Lemma)]
    pub key: KeyArg,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildTypedArgs {
    #[command(flatten)]
    pub ingest: IngestArgs,
    /// Longest dependency path kept.
    #[arg(long, default_value_t = 3)]
    pub max_order: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildWindowArgs {
    #[command(flatten)]
    pub ingest: IngestArgs,
    /// Context positions on either side of the target.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    #[arg(long, short = 'i')]
    pub input: PathBuf,
    #[arg(long, short = 'o')]
    pub output: PathBuf,
    /// Minimum corpus count of a feature [typed: 10, untyped: 0].
    #[arg(long)]
    pub min_feature_count: Option<u64>,
    /// Minimum number of distinct features of a target [typed: 50, untyped: 0].
    #[arg(long)]
    pub min_nnz: Option<usize>,
    /// Minimum total count of a target [typed: 0, untyped: 50].
    #[arg(long)]
    pub min_term_freq: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct WeightArgs {
    #[arg(long, short = 'i')]
    pub input: PathBuf,
    #[arg(long, short = 'o')]
    pub output: PathBuf,
    /// PMI shift; the weight is max(PMI - ln k, 0) [typed: 40, untyped: 1].
    #[arg(long)]
    pub k: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    Static,
    Density,
    Lexicon,
}

#[derive(Debug, Args, Serialize)]
pub struct RetrievalArgs {
    #[arg(long, value_enum, default_value_t = PolicyArg::Static)]
    pub policy: PolicyArg,
    /// Neighbours consumed (static policy).
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    /// Similarity band below the best neighbour (density policy).
    #[arg(long, default_value_t = RetrievalPolicy::DEFAULT_DELTA)]
    pub delta: f64,
    /// Most neighbours consumed by the density and lexicon policies.
    #[arg(long, default_value_t = RetrievalPolicy::DEFAULT_CAP)]
    pub cap: usize,
    /// Synonym file, `lemma<TAB>syn,syn,...` (lexicon policy).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

impl RetrievalArgs {
    fn policy(&self) -> Result<RetrievalPolicy> {
        Ok(match self.policy {
            PolicyArg::Static => RetrievalPolicy::StaticTopN { n: self.n },
            PolicyArg::Density => RetrievalPolicy::DensityWindow {
                delta: self.delta,
                cap: self.cap,
            },
            PolicyArg::Lexicon => RetrievalPolicy::Lexicon {
                lexicon: Arc::new(self.load_lexicon()?),
                cap: self.cap,
            },
        })
    }

    fn load_lexicon(&self) -> Result<SynonymLexicon> {
        match &self.lexicon {
            Some(path) => SynonymLexicon::load(path),
            None => Err(Error::InvalidArgument(
                "the lexicon policy needs --lexicon".into(),
            )),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DiArgs {
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
    /// Skip distributional inference.
    #[arg(long)]
    pub no_di: bool,
    /// Scale neighbour vectors to unit length before adding them.
    #[arg(long)]
    pub unit_neighbours: bool,
    /// Scale neighbour vectors by their similarity to the query.
    #[arg(long)]
    pub sim_weight: bool,
    /// Entries never used as neighbours.
    #[arg(long, value_delimiter = ',')]
    pub stop_words: Vec<String>,
}

impl DiArgs {
    fn config(&self) -> Result<Option<InferenceConfig>> {
        if self.no_di {
            return Ok(None);
        }
        Ok(Some(InferenceConfig {
            policy: self.retrieval.policy()?,
            normalize_neighbours: self.unit_neighbours,
            weight_by_similarity: self.sim_weight,
            stop_list: self.stop_words.iter().cloned().collect(),
        }))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct NeighboursArgs {
    pub entry: String,
    #[arg(long, short = 's')]
    pub store: PathBuf,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct InferArgs {
    pub entry: String,
    #[arg(long, short = 's')]
    pub store: PathBuf,
    #[command(flatten)]
    pub di: DiArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ComposeArgs {
    /// The two words in surface order, e.g. `white house` or `drive car`.
    #[arg(num_args = 2, required = true)]
    pub words: Vec<String>,
    #[arg(long, short = 's')]
    pub store: PathBuf,
    /// Phrase type: AN, NN or VO.
    #[arg(long = "type", short = 't')]
    pub phrase_type: String,
    /// Dependency label joining head and dependent (default per type).
    #[arg(long)]
    pub relation: Option<String>,
    #[arg(long, default_value = "union")]
    pub mode: String,
    /// Keep offset paths longer than the store's maximum order.
    #[arg(long)]
    pub unlimited: bool,
    #[command(flatten)]
    pub di: DiArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalWordsimArgs {
    #[arg(long, short = 's')]
    pub store: PathBuf,
    /// Word-pair files; the file stem names the dataset.
    #[arg(long = "dataset", short = 'd', required = true)]
    pub datasets: Vec<PathBuf>,
    /// Schema preset: tsv, men, simlex or wordsim.
    #[arg(long, default_value = "tsv")]
    pub schema: String,
    /// Skip malformed rows instead of failing.
    #[arg(long)]
    pub lenient: bool,
    #[command(flatten)]
    pub di: DiArgs,
    /// Also write the full-precision TSV report here.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalCompArgs {
    #[arg(long, short = 's')]
    pub store: PathBuf,
    #[arg(long = "dataset", short = 'd', required = true)]
    pub datasets: Vec<PathBuf>,
    /// Schema preset: tsv or ml2010.
    #[arg(long, default_value = "tsv")]
    pub schema: String,
    #[arg(long)]
    pub lenient: bool,
    #[arg(
        long = "mode",
        value_delimiter = ',',
        default_value = "union,intersection"
    )]
    pub modes: Vec<String>,
    /// Neighbours consumed for adjective-noun phrases (overrides --n/--cap).
    #[arg(long)]
    pub n_an: Option<usize>,
    #[arg(long)]
    pub n_nn: Option<usize>,
    #[arg(long)]
    pub n_vo: Option<usize>,
    #[command(flatten)]
    pub di: DiArgs,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Raw (filtered) count store; it is weighted once per k.
    #[arg(long, short = 's')]
    pub store: PathBuf,
    #[arg(long)]
    pub wordsim: Vec<PathBuf>,
    #[arg(long, default_value = "tsv")]
    pub word_schema: String,
    #[arg(long)]
    pub phrases: Vec<PathBuf>,
    #[arg(long, default_value = "tsv")]
    pub phrase_schema: String,
    #[arg(long)]
    pub lenient: bool,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,40,100")]
    pub ks: Vec<f64>,
    /// Neighbour budgets (static n, density and lexicon caps).
    #[arg(long, value_delimiter = ',', default_value = "10,30")]
    pub ns: Vec<usize>,
    /// Any of none, static, density, lexicon.
    #[arg(long, value_delimiter = ',', default_value = "none,static,density")]
    pub policies: Vec<String>,
    #[arg(long, default_value_t = RetrievalPolicy::DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "union,intersection")]
    pub modes: Vec<String>,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DumpArgs {
    #[arg(long, short = 's')]
    pub store: PathBuf,
    /// Words to query.
    #[arg(long = "word", value_delimiter = ',')]
    pub words: Vec<String>,
    /// Phrases to query as `TYPE:w1 w2`, e.g. `AN:white house`.
    #[arg(long = "phrase")]
    pub phrases: Vec<String>,
    /// Phrase dataset whose phrases join the candidate pool.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long, default_value = "tsv")]
    pub schema: String,
    #[arg(long, default_value = "union")]
    pub mode: String,
    /// Neighbours shown per query.
    #[arg(long, default_value_t = 10)]
    pub show: usize,
    #[command(flatten)]
    pub di: DiArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct InfoArgs {
    pub store: PathBuf,
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(argv: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match apply_config_file(argv) {
        Ok(argv) => argv,
        Err(e) => return report(err, &e),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let msg = e.to_string();
                    let first = msg
                        .lines()
                        .next()
                        .unwrap_or("")
                        .trim_start_matches("error: ");
                    let _ = writeln!(err, "error\tusage\t{first}");
                    2
                }
            };
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => return report(err, &Error::InvalidArgument(e.to_string())),
    };
    match pool.install(|| dispatch(&cli, out, err)) {
        Ok(()) => 0,
        Err(e) => report(err, &e),
    }
}

fn report(err: &mut dyn Write, e: &Error) -> i32 {
    let msg = e.to_string().replace(['\n', '\t'], " ");
    let _ = writeln!(err, "error\t{}\t{msg}", error_kind(e));
    exit_code(e)
}

/// Short machine-readable name of an error.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Ingest { .. } => "input",
        Error::Io(_) => "io",
        Error::AlreadyWeighted(_) => "already-weighted",
        Error::NotRaw => "not-raw",
        Error::NotWeighted => "not-weighted",
        Error::InvalidShift(_) => "invalid-shift",
        Error::Format { .. } => "format",
        Error::Version(_) => "version",
        Error::Truncated(_) => "truncated",
        Error::OutOfVocabulary(_) => "oov",
        Error::Untyped => "untyped",
        Error::UnknownRelation { .. } => "unknown-relation",
        Error::MalformedFeature(_) => "malformed-feature",
        Error::Dataset { .. } => "dataset",
        Error::UndefinedCorrelation(_) => "undefined-correlation",
        Error::NothingScored(_) => "nothing-scored",
        Error::InvalidArgument(_) => "usage",
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Ingest { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidShift(_)
        | Error::Dataset { .. }
        | Error::UnknownRelation { .. } => 2,
        _ => 1,
    }
}

fn has_flag(argv: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let prefix = format!("{flag}=");
    argv.iter().any(|a| {
        a.to_str()
            .is_some_and(|a| a == flag || a.starts_with(&prefix))
    })
}

fn flag_value(argv: &[OsString], long: &str) -> Option<OsString> {
    let flag = format!("--{long}");
    let prefix = format!("{flag}=");
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some(s) if s == flag => return it.next().cloned(),
            Some(s) if s.starts_with(&prefix) => return Some(s[prefix.len()..].into()),
            _ => {}
        }
    }
    None
}

/// Appends options from a `--config` TOML file that the command line does
/// not already set. Keys that the subcommand does not accept are ignored.
fn apply_config_file(mut argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = flag_value(&argv, "config") else {
        return Ok(argv);
    };
    let path = PathBuf::from(path);
    let text = fs::read_to_string(&path).map_err(|source| Error::Ingest {
        path: path.clone(),
        source,
    })?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))?;

    let cmd = Cli::command();
    let Some(sub) = argv
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find_map(|a| cmd.find_subcommand(a))
    else {
        return Ok(argv);
    };
    let accepted: BTreeSet<String> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();

    let mut merged: BTreeMap<String, toml::Value> = BTreeMap::new();
    for (key, value) in &table {
        if !value.is_table() {
            merged.insert(key.replace('_', "-"), value.clone());
        }
    }
    if let Some(toml::Value::Table(section)) = table.get(sub.get_name()) {
        for (key, value) in section {
            merged.insert(key.replace('_', "-"), value.clone());
        }
    }

    for (key, value) in merged {
        if !accepted.contains(&key) || has_flag(&argv, &key) {
            continue;
        }
        let flag = OsString::from(format!("--{key}"));
        match value {
            toml::Value::Boolean(true) => argv.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                for item in items {
                    argv.push(flag.clone());
                    argv.push(toml_scalar(&item)?.into());
                }
            }
            other => {
                argv.push(flag);
                argv.push(toml_scalar(&other)?.into());
            }
        }
    }
    Ok(argv)
}

fn toml_scalar(v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unsupported config value {other}"
            )))
        }
    })
}

/// The resolved options of a run as one JSON object.
fn config_json<A: Serialize>(command: &str, threads: Option<usize>, args: &A) -> String {
    let value = serde_json::json!({
        "command": command,
        "threads": threads,
        "version": env!("CARGO_PKG_VERSION"),
        "options": args,
    });
    value.to_string()
}

fn echo(err: &mut dyn Write, config: &str) {
    let _ = writeln!(err, "config\t{config}");
}

fn dispatch(cli: &Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    let name = cli.command.name();
    let threads = cli.threads;
    match &cli.command {
        Command::BuildTyped(a) => {
            let config = config_json(name, threads, a);
            echo(err, &config);
            build(&a.ingest, StoreMeta::typed(a.max_order), config, err)
        }
        Command::BuildWindow(a) => {
            let config = config_json(name, threads, a);
            echo(err, &config);
            build(&a.ingest, StoreMeta::untyped(a.window), config, err)
        }
        Command::Filter(a) => cmd_filter(a, name, threads, err),
        Command::Weight(a) => cmd_weight(a, name, threads, err),
        Command::Neighbours(a) => {
            echo(err, &config_json(name, threads, a));
            cmd_neighbours(a, out)
        }
        Command::Infer(a) => {
            echo(err, &config_json(name, threads, a));
            cmd_infer(a, out)
        }
        Command::Compose(a) => {
            echo(err, &config_json(name, threads, a));
            cmd_compose(a, out)
        }
        Command::EvalWordsim(a) => {
            let config = config_json(name, threads, a);
            echo(err, &config);
            cmd_eval_wordsim(a, &config, out, err)
        }
        Command::EvalComp(a) => {
            let config = config_json(name, threads, a);
            echo(err, &config);
            cmd_eval_comp(a, &config, out, err)
        }
        Command::Sweep(a) => {
            let config = config_json(name, threads, a);
            echo(err, &config);
            cmd_sweep(a, &config, out, err)
        }
        Command::DumpNeighbours(a) => {
            echo(err, &config_json(name, threads, a));
            cmd_dump(a, out)
        }
        Command::Info(a) => {
            for line in store::read_header(&a.store)? {
                writeln!(out, "{line}")?;
            }
            Ok(())
        }
    }
}

fn ingest_config(a: &IngestArgs) -> Result<IngestConfig> {
    let cols: Vec<usize> = a
        .columns
        .split(',')
        .map(|c| c.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("bad --columns {:?}", a.columns)))?;
    let [index, form, lemma, pos, head, rel] = cols[..] else {
        return Err(Error::InvalidArgument(
            "--columns needs six positions: index,form,lemma,pos,head,relation".into(),
        ));
    };
    if cols.contains(&0) {
        return Err(Error::InvalidArgument(
            "--columns positions are 1-based".into(),
        ));
    }
    Ok(IngestConfig {
        columns: ColumnMap {
            index,
            form,
            lemma,
            pos,
            head,
            rel,
        },
        stop_pos: a
            .stop_pos
            .iter()
            .filter(|p| !p.is_empty())
            .cloned()
            .collect(),
        key_scheme: match a.key {
            KeyArg::Lemma => KeyScheme::Lemma,
            KeyArg::LemmaPos => KeyScheme::LemmaPos,
        },
    })
}

fn count_batch(batch: &[DependencySentence], meta: &StoreMeta, cfg: &IngestConfig) -> Accumulator {
    batch
        .par_iter()
        .fold(Accumulator::new, |mut acc, sentence| {
            let events = match meta.model_type {
                ModelType::Typed => extract_typed(sentence, meta.max_order, cfg),
                ModelType::Untyped => extract_window(sentence, meta.window, cfg),
            };
            acc.extend(&events);
            acc
        })
        .reduce(Accumulator::new, |mut a, b| {
            a.merge(b);
            a
        })
}

fn build(a: &IngestArgs, mut meta: StoreMeta, config: String, err: &mut dyn Write) -> Result<()> {
    let cfg = ingest_config(a)?;
    let mut total = Accumulator::new();
    let (mut sentences, mut skipped) = (0, 0);
    for input in &a.inputs {
        let mut reader = ConllReader::new(open_input(input)?, cfg.clone());
        let mut batch = Vec::with_capacity(BATCH);
        loop {
            let next = reader.next().transpose()?;
            let done = next.is_none();
            batch.extend(next);
            if batch.len() == BATCH || (done && !batch.is_empty()) {
                total.merge(count_batch(&batch, &meta, &cfg));
                batch.clear();
            }
            if done {
                break;
            }
        }
        let stats = reader.stats();
        sentences += stats.sentences;
        skipped += stats.skipped;
    }
    meta.config = Some(config);
    let store = total.finish(meta);
    writeln!(
        err,
        "ingest\tsentences={sentences}\tskipped={skipped}\ttargets={}\tfeatures={}",
        store.len(),
        store.interner.len()
    )?;
    store::save(&store, &a.output)
}

fn cmd_filter(
    a: &FilterArgs,
    name: &str,
    threads: Option<usize>,
    err: &mut dyn Write,
) -> Result<()> {
    let raw = store::load(&a.input)?;
    let defaults = match raw.meta.model_type {
        ModelType::Typed => FilterThresholds::TYPED,
        ModelType::Untyped => FilterThresholds::UNTYPED,
    };
    let resolved = FilterArgs {
        input: a.input.clone(),
        output: a.output.clone(),
        min_feature_count: Some(a.min_feature_count.unwrap_or(defaults.min_feature_count)),
        min_nnz: Some(a.min_nnz.unwrap_or(defaults.min_nnz)),
        min_term_freq: Some(a.min_term_freq.unwrap_or(defaults.min_term_freq)),
    };
    let config = config_json(name, threads, &resolved);
    echo(err, &config);
    let mut filtered = store::filter(
        &raw,
        FilterThresholds {
            min_feature_count: resolved.min_feature_count.unwrap_or_default(),
            min_nnz: resolved.min_nnz.unwrap_or_default(),
            min_term_freq: resolved.min_term_freq.unwrap_or_default(),
        },
    )?;
    filtered.meta.config = Some(config);
    writeln!(
        err,
        "filter\ttargets={}->{}\tfeatures={}->{}",
        raw.len(),
        filtered.len(),
        raw.interner.len(),
        filtered.interner.len()
    )?;
    store::save(&filtered, &a.output)
}

fn cmd_weight(
    a: &WeightArgs,
    name: &str,
    threads: Option<usize>,
    err: &mut dyn Write,
) -> Result<()> {
    let raw = store::load(&a.input)?;
    let k = a.k.unwrap_or(match raw.meta.model_type {
        ModelType::Typed => 40.0,
        ModelType::Untyped => 1.0,
    });
    let resolved = WeightArgs {
        input: a.input.clone(),
        output: a.output.clone(),
        k: Some(k),
    };
    let config = config_json(name, threads, &resolved);
    echo(err, &config);
    let mut weighted = store::sppmi(&raw, ShiftK::new(k)?)?;
    weighted.meta.config = Some(config);
    store::save(&weighted, &a.output)
}

fn cmd_neighbours(a: &NeighboursArgs, out: &mut dyn Write) -> Result<()> {
    let store = store::load(&a.store)?;
    let inference = Inference::new(&store)?;
    let policy = a.retrieval.policy()?;
    let set = policy.retrieve(inference.index(), Query::Entry(&a.entry), &BTreeSet::new())?;
    for nb in set.iter() {
        writeln!(out, "{}\t{}", nb.name, nb.similarity)?;
    }
    Ok(())
}

fn print_vector(
    out: &mut dyn Write,
    name: &str,
    entries: impl IntoIterator<Item = (String, f64)>,
) -> Result<()> {
    let mut rows: Vec<(String, f64)> = entries.into_iter().collect();
    rows.sort_by(|x, y| x.0.cmp(&y.0));
    for (feature, weight) in rows {
        writeln!(out, "{name}\t{feature}\t{weight}")?;
    }
    Ok(())
}

fn cmd_infer(a: &InferArgs, out: &mut dyn Write) -> Result<()> {
    let store = store::load(&a.store)?;
    let inference = Inference::new(&store)?;
    let cfg =
        a.di.config()?
            .unwrap_or_else(|| InferenceConfig::static_top_n(0));
    let enriched = inference.enrich(Query::Entry(&a.entry), &cfg)?;
    for nb in enriched.neighbours.iter() {
        writeln!(out, "# neighbour\t{}\t{}", nb.name, nb.similarity)?;
    }
    let text = |id| store.interner.text(id).unwrap_or("?").to_string();
    print_vector(
        out,
        &a.entry,
        enriched.result.iter().map(|(id, w)| (text(id), w)),
    )
}

fn parse_phrase_type(s: &str) -> Result<PhraseType> {
    s.parse()
}

fn cmd_compose(a: &ComposeArgs, out: &mut dyn Write) -> Result<()> {
    let store = store::load(&a.store)?;
    let inference = Inference::new(&store)?;
    let phrase_type = parse_phrase_type(&a.phrase_type)?;
    let mode: CompositionMode = a.mode.parse()?;
    let mut relations = RelationMap::default();
    if let Some(rel) = &a.relation {
        relations.set_default(phrase_type, rel);
    }
    let spec = PhraseSpec::from_surface(phrase_type, &a.words[0], &a.words[1], &relations)?;
    let mut composer = Composer::new(&store).with_relations(relations);
    if a.unlimited {
        composer = composer.unlimited();
    }
    let v = composer.compose_with_di(&inference, &spec, mode, a.di.config()?.as_ref())?;
    let space = composer.space();
    let rows: Vec<(String, f64)> = v
        .iter()
        .map(|(id, w)| (space.text(id).unwrap_or("?").to_string(), w))
        .collect();
    print_vector(out, &spec.name(), rows)
}

fn dataset_name(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = name.strip_suffix(".gz").unwrap_or(&name);
    match name.rsplit_once('.') {
        Some((stem, _)) if !stem.is_empty() => stem.to_string(),
        _ => name.to_string(),
    }
}

fn load_mode(lenient: bool) -> LoadMode {
    if lenient {
        LoadMode::Lenient
    } else {
        LoadMode::Strict
    }
}

fn note_skipped(err: &mut dyn Write, path: &Path, skipped: usize) -> Result<()> {
    if skipped > 0 {
        writeln!(
            err,
            "warning\tskipped {skipped} malformed rows in {}",
            path.display()
        )?;
    }
    Ok(())
}

fn write_report(path: &Path, config: &str, body: &str) -> Result<()> {
    let mut text = format!("# config\t{config}\n");
    text.push_str(body);
    fs::write(path, text)?;
    Ok(())
}

fn cmd_eval_wordsim(
    a: &EvalWordsimArgs,
    config: &str,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let schema = WordSchema::preset(&a.schema)?;
    let di = a.di.config()?;
    let store = store::load(&a.store)?;
    let inference = Inference::new(&store)?;
    let mut reports = Vec::new();
    for path in &a.datasets {
        let loaded = load_word_pairs(path, &schema, load_mode(a.lenient))?;
        note_skipped(err, path, loaded.skipped)?;
        let name = dataset_name(path);
        reports.push(eval_wordsim(&inference, &name, &loaded.items, None)?);
        if let Some(cfg) = &di {
            reports.push(eval_wordsim(&inference, &name, &loaded.items, Some(cfg))?);
        }
    }
    write!(out, "{}", reports_table(&reports))?;
    if let Some(path) = &a.output {
        write_report(path, config, &reports_tsv(&reports))?;
    }
    Ok(())
}

fn cmd_eval_comp(
    a: &EvalCompArgs,
    config: &str,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let schema = PhraseSchema::preset(&a.schema)?;
    let modes: Vec<CompositionMode> = a.modes.iter().map(|m| m.parse()).collect::<Result<_>>()?;
    let di = a.di.config()?;
    let mut per_type_n = BTreeMap::new();
    for (t, n) in [
        (PhraseType::AdjectiveNoun, a.n_an),
        (PhraseType::NounNoun, a.n_nn),
        (PhraseType::VerbObject, a.n_vo),
    ] {
        if let Some(n) = n {
            per_type_n.insert(t, n);
        }
    }
    let store = store::load(&a.store)?;
    let inference = Inference::new(&store)?;
    let mut reports = Vec::new();
    for path in &a.datasets {
        let loaded = load_phrase_pairs(path, &schema, load_mode(a.lenient))?;
        note_skipped(err, path, loaded.skipped)?;
        let name = dataset_name(path);
        let mut conditions = vec![None];
        if di.is_some() {
            conditions.push(di.as_ref());
        }
        for &mode in &modes {
            for cond in &conditions {
                let mut composer = Composer::new(&store);
                let r = eval_composition(
                    &inference,
                    &mut composer,
                    &name,
                    &loaded.items,
                    mode,
                    *cond,
                    &per_type_n,
                )?;
                let scored = r.per_type.iter().map(|p| p.scored).sum();
                let total = r.per_type.iter().map(|p| p.total).sum();
                let di_label = cond.map_or_else(|| "none".to_string(), |c| c.label());
                let k = r.per_type[0].k;
                reports.extend(r.per_type);
                reports.push(EvalReport {
                    dataset: format!("{name}:average"),
                    rho: r.average,
                    scored,
                    total,
                    k,
                    di: di_label,
                    mode: Some(mode),
                });
            }
        }
    }
    write!(out, "{}", reports_table(&reports))?;
    if let Some(path) = &a.output {
        write_report(path, config, &reports_tsv(&reports))?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, config: &str, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut policies = Vec::new();
    for p in &a.policies {
        policies.push(match p.as_str() {
            "none" => PolicyKind::NoInference,
            "static" => PolicyKind::Static,
            "density" => PolicyKind::Density { delta: a.delta },
            "lexicon" => match &a.lexicon {
                Some(path) => PolicyKind::Lexicon(Arc::new(SynonymLexicon::load(path)?)),
                None => {
                    return Err(Error::InvalidArgument(
                        "the lexicon policy needs --lexicon".into(),
                    ))
                }
            },
            other => return Err(Error::InvalidArgument(format!("unknown policy {other:?}"))),
        });
    }
    let modes = a.modes.iter().map(|m| m.parse()).collect::<Result<_>>()?;
    let mut tasks = Vec::new();
    let word_schema = WordSchema::preset(&a.word_schema)?;
    for path in &a.wordsim {
        let loaded = load_word_pairs(path, &word_schema, load_mode(a.lenient))?;
        note_skipped(err, path, loaded.skipped)?;
        tasks.push(SweepTask::WordSim {
            name: dataset_name(path),
            items: loaded.items,
        });
    }
    let phrase_schema = PhraseSchema::preset(&a.phrase_schema)?;
    for path in &a.phrases {
        let loaded = load_phrase_pairs(path, &phrase_schema, load_mode(a.lenient))?;
        note_skipped(err, path, loaded.skipped)?;
        tasks.push(SweepTask::Composition {
            name: dataset_name(path),
            items: loaded.items,
        });
    }
    if tasks.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one --wordsim or --phrases dataset".into(),
        ));
    }
    let raw = store::load(&a.store)?;
    let grid = SweepGrid {
        ks: a.ks.clone(),
        ns: a.ns.clone(),
        policies,
        modes,
    };
    let rows = sweep(&raw, &grid, &tasks, &RelationMap::default())?;
    let tsv = sweep_tsv(&rows);
    write!(out, "{tsv}")?;
    if let Some(path) = &a.output {
        write_report(path, config, &tsv)?;
    }
    Ok(())
}

fn parse_phrase_query(s: &str, relations: &RelationMap) -> Result<PhraseSpec> {
    let bad = || Error::InvalidArgument(format!("phrase {s:?} is not of the form TYPE:w1 w2"));
    let (t, words) = s.split_once(':').ok_or_else(bad)?;
    let words: Vec<&str> = words.split_whitespace().collect();
    let [w1, w2] = words[..] else {
        return Err(bad());
    };
    PhraseSpec::from_surface(parse_phrase_type(t)?, w1, w2, relations)
}

fn cmd_dump(a: &DumpArgs, out: &mut dyn Write) -> Result<()> {
    let relations = RelationMap::default();
    let mode: CompositionMode = a.mode.parse()?;
    let mut queries: Vec<DumpQuery> = a.words.iter().cloned().map(DumpQuery::Word).collect();
    for p in &a.phrases {
        queries.push(DumpQuery::Phrase(parse_phrase_query(p, &relations)?));
    }
    if queries.is_empty() {
        return Err(Error::InvalidArgument(
            "nothing to query; give --word or --phrase".into(),
        ));
    }
    let mut pool = Vec::new();
    if let Some(path) = &a.pool {
        let schema = PhraseSchema::preset(&a.schema)?;
        for item in load_phrase_pairs(path, &schema, LoadMode::Lenient)?.items {
            let (s1, s2) = item.specs(&relations)?;
            for s in [s1, s2] {
                if !pool.contains(&s) {
                    pool.push(s);
                }
            }
        }
    }
    let di = a.di.config()?;
    let store = store::load(&a.store)?;
    let rows = dump_neighbours(
        &store,
        &queries,
        &pool,
        mode,
        di.as_ref(),
        a.show,
        &relations,
    )?;
    write!(out, "{}", dump_table(&rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_names() {
        assert_eq!(dataset_name(Path::new("a/ws353.tsv")), "ws353");
        assert_eq!(dataset_name(Path::new("men.txt.gz")), "men");
        assert_eq!(dataset_name(Path::new("simlex")), "simlex");
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::AlreadyWeighted("sppmi".into())), 1);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 2);
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["aptkit", "weight", "--bogus"], &mut out, &mut err);
        assert_eq!(code, 2);
        let err = String::from_utf8(err).unwrap();
        assert!(err.starts_with("error\tusage\t"), "{err}");
        assert_eq!(err.lines().count(), 1);
    }

    #[test]
    fn phrase_queries() {
        let r = RelationMap::default();
        let p = parse_phrase_query("AN:white house", &r).unwrap();
        assert_eq!((p.head.as_str(), p.dependent.as_str()), ("house", "white"));
        assert!(parse_phrase_query("white house", &r).is_err());
    }
}
