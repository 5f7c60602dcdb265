//! One runner per subcommand, each a thin wrapper over a library
//! operation. Runners are plain functions over their `Args` structs so
//! the `run` orchestrator can drive them from a config file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use tweetforge::bpe::{learn_from_counts, Encoder, LearnParams, MergeTable, WordCounts};
use tweetforge::eval::{
    aggregate_runs, classification_metrics, extract_spans_corpus, ner_f1, parse_conll,
    pos_accuracy, split_train_valid, ClassificationScheme, ColumnSpec, LabeledDoc,
    MajorityClassifier, MatchLevel, MetricReport, MftTagger, RegexTagMap, TaggedSequence,
};
use tweetforge::ingest::{
    write_tweet, CorpusStats, FilterConfig, IngestFormat, RawTweet, TweetFilter, TweetReader,
};
use tweetforge::langid::{LanguageIdentifier, NgramLangId, PassThrough};
use tweetforge::normalize::{
    change_summary, hard_normalize, soft_normalize, EmojiTable, LexNormDict,
};
use tweetforge::pack::{mask_block, BlockPacker, MaskPolicy, SequenceBlock};
use tweetforge::shard::{read_all, write_shards};
use tweetforge::tokenize::tokenize;

use crate::{usage, CliError, StageResult};

// ---------------------------------------------------------------- plumbing

fn open_input(path: &str, stage: &'static str) -> Result<Box<dyn BufRead>, CliError> {
    if path == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    File::open(path)
        .map(|f| Box::new(BufReader::new(f)) as Box<dyn BufRead>)
        .map_err(|e| CliError::Stage { stage, source: tweetforge::Error::io(path, e) })
}

fn open_output(path: &str, stage: &'static str) -> Result<Box<dyn Write>, CliError> {
    if path == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout())));
    }
    File::create(path)
        .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
        .map_err(|e| CliError::Stage { stage, source: tweetforge::Error::io(path, e) })
}

fn io_stage(stage: &'static str, path: &Path, e: io::Error) -> CliError {
    CliError::Stage { stage, source: tweetforge::Error::io(path, e) }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("worker pool")
        .install(f)
}

fn write_kv_lines(path: &Path, stage: &'static str, pairs: &[(String, String)]) -> Result<(), CliError> {
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k);
        out.push(' ');
        out.push_str(v);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_stage(stage, path, e))
}

// ------------------------------------------------------------ shared enums

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Jsonl,
    Text,
}

impl FormatArg {
    fn to_core(self) -> IngestFormat {
        match self {
            FormatArg::Jsonl => IngestFormat::JsonLines,
            FormatArg::Text => IngestFormat::PlainText,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LangIdChoice {
    /// Bundled character n-gram classifier
    Builtin,
    /// Trust the record's language hint verbatim
    Hint,
    /// No language gate
    None,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Soft,
    Hard,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskArg {
    Pos,
    Ner,
    Semeval17,
    Semeval18,
}

impl TaskArg {
    pub fn name(self) -> &'static str {
        match self {
            TaskArg::Pos => "pos",
            TaskArg::Ner => "ner",
            TaskArg::Semeval17 => "semeval17",
            TaskArg::Semeval18 => "semeval18",
        }
    }

    pub fn is_tagging(self) -> bool {
        matches!(self, TaskArg::Pos | TaskArg::Ner)
    }

    pub fn scheme(self) -> Option<ClassificationScheme> {
        match self {
            TaskArg::Semeval17 => Some(ClassificationScheme::Semeval17),
            TaskArg::Semeval18 => Some(ClassificationScheme::Semeval18),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelArg {
    Entity,
    Surface,
}

impl LevelArg {
    fn to_core(self) -> MatchLevel {
        match self {
            LevelArg::Entity => MatchLevel::Entity,
            LevelArg::Surface => MatchLevel::Surface,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorArg {
    /// Most-frequent-tag-per-token tagger (tagging tasks)
    Mft,
    /// Majority-class labeler (classification tasks)
    Majority,
}

/// Tweets after subword segmentation, the interchange record between
/// `bpe-apply` and `pack`.
#[derive(Debug, Serialize, Deserialize)]
pub struct EncodedTweet {
    pub id: String,
    pub pieces: Vec<String>,
    pub ids: Vec<u32>,
}

// ---------------------------------------------------------------- ingest

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Input path, or - for stdin
    #[arg(short, long, default_value = "-")]
    pub input: String,
    /// Output path (JSON lines), or - for stdout
    #[arg(short, long, default_value = "-")]
    pub output: String,
    /// Input format
    #[arg(long, value_enum, default_value_t = FormatArg::Jsonl)]
    pub format: FormatArg,
    /// Minimum token count (inclusive)
    #[arg(long, default_value_t = 10)]
    pub min_tokens: usize,
    /// Maximum token count (inclusive)
    #[arg(long, default_value_t = 64)]
    pub max_tokens: usize,
    /// Language to keep
    #[arg(long, default_value = "en")]
    pub lang: String,
    /// Minimum language-id confidence
    #[arg(long, default_value_t = 0.0)]
    pub min_lang_confidence: f64,
    /// Keep retweets instead of dropping them
    #[arg(long)]
    pub keep_retweets: bool,
    /// Keyword a kept tweet must contain (repeatable; any match keeps)
    #[arg(long)]
    pub keyword: Vec<String>,
    /// Language identifier to gate with
    #[arg(long, value_enum, default_value_t = LangIdChoice::Builtin)]
    pub langid: LangIdChoice,
    /// Write a filter stats report to this path
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

pub fn run_ingest(a: &IngestArgs) -> Result<(), CliError> {
    const STAGE: &str = "ingest";
    let cfg = FilterConfig {
        min_tokens: a.min_tokens,
        max_tokens: a.max_tokens,
        target_lang: a.lang.clone(),
        lang_min_confidence: a.min_lang_confidence,
        drop_retweets: !a.keep_retweets,
        keywords: a.keyword.clone(),
    };
    cfg.validate().stage(STAGE)?;
    let hint_id = PassThrough;
    let lang_id: Option<&dyn LanguageIdentifier> = match a.langid {
        LangIdChoice::Builtin => Some(NgramLangId::bundled()),
        LangIdChoice::Hint => Some(&hint_id),
        LangIdChoice::None => None,
    };
    let filter = TweetFilter::new(&cfg, lang_id);

    let mut reader = TweetReader::new(open_input(&a.input, STAGE)?, a.format.to_core());
    let mut out = open_output(&a.output, STAGE)?;
    let mut stats = CorpusStats::default();
    for item in reader.by_ref() {
        let tweet = item.stage(STAGE)?;
        stats.tweets_in += 1;
        match filter.evaluate(&tweet) {
            Ok(tokens) => {
                stats.tweets_kept += 1;
                stats.tokens_total += tokens.tokens.len() as u64;
                write_tweet(&mut out, &tweet, IngestFormat::JsonLines).stage(STAGE)?;
            }
            Err(reason) => stats.record_drop(reason),
        }
    }
    if reader.skipped() > 0 {
        stats.record_drop_label("malformed", reader.skipped());
    }
    out.flush().map_err(|e| io_stage(STAGE, Path::new(&a.output), e))?;
    if let Some(p) = &a.stats {
        let mut f = File::create(p).map_err(|e| io_stage(STAGE, p, e))?;
        stats.write_report(&mut f).stage(STAGE)?;
    }
    Ok(())
}

// -------------------------------------------------------------- normalize

#[derive(Args, Debug)]
pub struct NormalizeArgs {
    /// Input path (JSON lines), or - for stdin
    #[arg(short, long, default_value = "-")]
    pub input: String,
    /// Output path (JSON lines), or - for stdout
    #[arg(short, long, default_value = "-")]
    pub output: String,
    /// soft: placeholders and emoji aliases; hard: soft plus dictionary
    #[arg(long, value_enum, default_value_t = ModeArg::Soft)]
    pub mode: ModeArg,
    /// Lexical normalization dictionary for hard mode (repeatable;
    /// earlier dictionaries win)
    #[arg(long)]
    pub dict: Vec<PathBuf>,
    /// Emoji alias table overriding the bundled one
    #[arg(long)]
    pub emoji: Option<PathBuf>,
    /// Write a rewrite summary to this path
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

pub fn run_normalize(a: &NormalizeArgs) -> Result<(), CliError> {
    const STAGE: &str = "normalize";
    let owned_emoji;
    let emoji: &EmojiTable = match &a.emoji {
        Some(p) => {
            owned_emoji = EmojiTable::from_path(p).stage(STAGE)?;
            &owned_emoji
        }
        None => EmojiTable::bundled(),
    };
    if a.mode == ModeArg::Hard && a.dict.is_empty() {
        return Err(usage("--mode hard needs at least one --dict"));
    }
    let dicts: Vec<LexNormDict> = a
        .dict
        .iter()
        .map(|p| LexNormDict::from_path(p))
        .collect::<tweetforge::Result<_>>()
        .stage(STAGE)?;

    let reader = TweetReader::new(open_input(&a.input, STAGE)?, IngestFormat::JsonLines);
    let mut out = open_output(&a.output, STAGE)?;
    let mut summary: BTreeMap<String, u64> = BTreeMap::new();
    for item in reader {
        let tweet = item.stage(STAGE)?;
        let mut norm = soft_normalize(&tokenize(&tweet.text), emoji);
        let mut log = std::mem::take(&mut norm.change_log);
        if a.mode == ModeArg::Hard {
            norm = hard_normalize(&norm.tokens, &dicts);
            log.extend(std::mem::take(&mut norm.change_log));
        }
        for (kind, n) in change_summary(&log) {
            *summary.entry(kind).or_insert(0) += n;
        }
        let rewritten = RawTweet { text: norm.tokens.texts().join(" "), ..tweet };
        write_tweet(&mut out, &rewritten, IngestFormat::JsonLines).stage(STAGE)?;
    }
    out.flush().map_err(|e| io_stage(STAGE, Path::new(&a.output), e))?;
    if let Some(p) = &a.stats {
        let pairs: Vec<(String, String)> =
            summary.into_iter().map(|(k, v)| (k, v.to_string())).collect();
        write_kv_lines(p, STAGE, &pairs)?;
    }
    Ok(())
}

// --------------------------------------------------------------- tokenize

#[derive(Args, Debug)]
pub struct TokenizeArgs {
    /// Input path (one tweet text per line), or - for stdin
    #[arg(short, long, default_value = "-")]
    pub input: String,
    /// Output path, or - for stdout
    #[arg(short, long, default_value = "-")]
    pub output: String,
    /// Append a tab plus comma-separated token classes to each line
    #[arg(long)]
    pub classes: bool,
}

pub fn run_tokenize(a: &TokenizeArgs) -> Result<(), CliError> {
    const STAGE: &str = "tokenize";
    let input = open_input(&a.input, STAGE)?;
    let mut out = open_output(&a.output, STAGE)?;
    for line in input.lines() {
        let line = line.map_err(|e| io_stage(STAGE, Path::new(&a.input), e))?;
        let seq = tokenize(&line);
        let texts = seq.texts().join(" ");
        let rendered = if a.classes {
            let classes: Vec<&str> = seq.tokens.iter().map(|t| t.class.as_str()).collect();
            format!("{texts}\t{}", classes.join(","))
        } else {
            texts
        };
        writeln!(out, "{rendered}").map_err(|e| io_stage(STAGE, Path::new(&a.output), e))?;
    }
    out.flush().map_err(|e| io_stage(STAGE, Path::new(&a.output), e))
}

// -------------------------------------------------------------- bpe-learn

#[derive(Args, Debug)]
pub struct BpeLearnArgs {
    /// Normalized corpus (JSON lines), or - for stdin
    #[arg(short, long, default_value = "-")]
    pub input: String,
    /// Target vocabulary size (specials + bases + merges)
    #[arg(long, default_value_t = 64_000)]
    pub vocab_size: usize,
    /// Minimum pair frequency worth merging
    #[arg(long, default_value_t = 2)]
    pub min_pair_freq: u64,
    /// Merge list output path
    #[arg(long)]
    pub merges: PathBuf,
    /// Vocabulary output path
    #[arg(long)]
    pub vocab: PathBuf,
    /// Worker threads for the counting pass
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

pub fn run_bpe_learn(a: &BpeLearnArgs) -> Result<(), CliError> {
    const STAGE: &str = "bpe-learn";
    let reader = TweetReader::new(open_input(&a.input, STAGE)?, IngestFormat::JsonLines);
    let counts = if a.workers > 1 {
        let texts: Vec<String> = reader
            .map(|r| r.map(|t| t.text))
            .collect::<tweetforge::Result<_>>()
            .stage(STAGE)?;
        with_pool(a.workers, || WordCounts::par_from_texts(&texts))
    } else {
        let mut counts = WordCounts::default();
        for item in reader {
            counts.add_sequence(&tokenize(&item.stage(STAGE)?.text));
        }
        counts
    };
    let params = LearnParams { target_vocab: a.vocab_size, min_pair_freq: a.min_pair_freq };
    let table = learn_from_counts(&counts, &params).stage(STAGE)?;
    table.save_merges(&a.merges, &a.vocab).stage(STAGE)
}

// -------------------------------------------------------------- bpe-apply

#[derive(Args, Debug)]
pub struct BpeApplyArgs {
    /// Normalized corpus (JSON lines), or - for stdin
    #[arg(short, long, default_value = "-")]
    pub input: String,
    /// Encoded output (JSON lines), or - for stdout
    #[arg(short, long, default_value = "-")]
    pub output: String,
    /// Merge list path
    #[arg(long)]
    pub merges: PathBuf,
    /// Vocabulary path
    #[arg(long)]
    pub vocab: PathBuf,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

pub fn run_bpe_apply(a: &BpeApplyArgs) -> Result<(), CliError> {
    const STAGE: &str = "bpe-apply";
    let table = MergeTable::load_merges(&a.merges, &a.vocab).stage(STAGE)?;
    let mut reader = TweetReader::new(open_input(&a.input, STAGE)?, IngestFormat::JsonLines);
    let mut out = open_output(&a.output, STAGE)?;
    loop {
        let batch: Vec<RawTweet> =
            reader.by_ref().take(4096).collect::<tweetforge::Result<_>>().stage(STAGE)?;
        if batch.is_empty() {
            break;
        }
        let encoded: Vec<EncodedTweet> = if a.workers > 1 {
            with_pool(a.workers, || {
                use rayon::prelude::*;
                batch
                    .par_chunks(256)
                    .map(|chunk| encode_chunk(&table, chunk))
                    .collect::<Vec<_>>()
                    .into_iter()
                    .flatten()
                    .collect()
            })
        } else {
            encode_chunk(&table, &batch)
        };
        for rec in &encoded {
            let line = serde_json::to_string(rec)
                .map_err(|e| CliError::Stage { stage: STAGE, source: tweetforge::Error::invalid(e.to_string()) })?;
            writeln!(out, "{line}").map_err(|e| io_stage(STAGE, Path::new(&a.output), e))?;
        }
    }
    out.flush().map_err(|e| io_stage(STAGE, Path::new(&a.output), e))
}

fn encode_chunk(table: &MergeTable, tweets: &[RawTweet]) -> Vec<EncodedTweet> {
    let mut enc = Encoder::new(table);
    tweets
        .iter()
        .map(|t| {
            let sub = enc.encode_sequence(&tokenize(&t.text));
            EncodedTweet { id: t.id.clone(), pieces: sub.pieces, ids: sub.ids }
        })
        .collect()
}

// ------------------------------------------------------------------- pack

#[derive(Args, Debug)]
pub struct PackArgs {
    /// Encoded corpus (JSON lines from bpe-apply), or - for stdin
    #[arg(short, long, default_value = "-")]
    pub input: String,
    /// Shard directory to create
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Block length in subword ids
    #[arg(long, default_value_t = 128)]
    pub block_len: usize,
    /// Records per shard
    #[arg(long, default_value_t = 512)]
    pub shard_size: usize,
    /// Write packing stats to this path
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

pub fn run_pack(a: &PackArgs) -> Result<(), CliError> {
    const STAGE: &str = "pack";
    let input = open_input(&a.input, STAGE)?;
    let mut packer = BlockPacker::new(a.block_len).stage(STAGE)?;
    let mut blocks = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| io_stage(STAGE, Path::new(&a.input), e))?;
        if line.is_empty() {
            continue;
        }
        let rec: EncodedTweet = serde_json::from_str(&line)
            .map_err(|e| CliError::Stage {
                stage: STAGE,
                source: tweetforge::Error::Parse { line: i + 1, msg: e.to_string() },
            })?;
        blocks.extend(packer.push(&rec.id, &rec.ids));
    }
    blocks.extend(packer.finish());
    let stats = packer.stats();
    write_shards(&a.out_dir, "blocks", &blocks, a.shard_size, None).stage(STAGE)?;
    if let Some(p) = &a.stats {
        write_kv_lines(
            p,
            STAGE,
            &[
                ("tweets".into(), stats.tweets.to_string()),
                ("truncated".into(), stats.truncated.to_string()),
                ("blocks".into(), stats.blocks.to_string()),
            ],
        )?;
    }
    Ok(())
}

// ------------------------------------------------------------------- mask

#[derive(Args, Debug)]
pub struct MaskArgs {
    /// Shard directory holding packed blocks
    #[arg(long)]
    pub in_dir: PathBuf,
    /// Shard directory to create with masked examples
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Vocabulary path (bounds random replacement ids)
    #[arg(long)]
    pub vocab: PathBuf,
    /// Fraction of eligible positions selected as labels
    #[arg(long, default_value_t = 0.15)]
    pub fraction: f64,
    /// Probability a selected position becomes the mask id
    #[arg(long, default_value_t = 0.8)]
    pub mask_prob: f64,
    /// Probability a selected position becomes a random id
    #[arg(long, default_value_t = 0.1)]
    pub random_prob: f64,
    /// Probability a selected position keeps its id (still a label)
    #[arg(long, default_value_t = 0.1)]
    pub keep_prob: f64,
    /// Masking seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Epoch number; each epoch resamples positions
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

pub fn run_mask(a: &MaskArgs) -> Result<(), CliError> {
    const STAGE: &str = "mask";
    let policy = MaskPolicy {
        mask_fraction: a.fraction,
        mask_prob: a.mask_prob,
        random_prob: a.random_prob,
        keep_prob: a.keep_prob,
        seed: a.seed,
    };
    policy.validate().stage(STAGE)?;
    let vocab_file = File::open(&a.vocab).map_err(|e| io_stage(STAGE, &a.vocab, e))?;
    let vocab = MergeTable::read_vocab(BufReader::new(vocab_file)).stage(STAGE)?;
    let vocab_size = vocab.len() as u32;

    let (manifest, blocks) = read_all::<SequenceBlock>(&a.in_dir).stage(STAGE)?;
    let epoch = a.epoch;
    let masked: Vec<_> = if a.workers > 1 {
        with_pool(a.workers, || {
            use rayon::prelude::*;
            blocks
                .par_iter()
                .enumerate()
                .map(|(i, b)| mask_block(b, i as u64, epoch, &policy, vocab_size))
                .collect()
        })
    } else {
        blocks
            .iter()
            .enumerate()
            .map(|(i, b)| mask_block(b, i as u64, epoch, &policy, vocab_size))
            .collect()
    };
    write_shards(&a.out_dir, "masked", &masked, manifest.shard_size, Some(policy))
        .stage(STAGE)?;
    Ok(())
}

// ------------------------------------------------------------------- eval

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Task to score
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Gold data: CoNLL file (tagging) or JSON lines docs (classification)
    #[arg(long)]
    pub gold: PathBuf,
    /// Predictions: CoNLL file (tagging) or one label per line
    /// (classification); mutually exclusive with --predictor
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Reference predictor trained on --train instead of --pred
    #[arg(long, value_enum)]
    pub predictor: Option<PredictorArg>,
    /// Training data for --predictor
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Span match level (ner only)
    #[arg(long, value_enum, default_value_t = LevelArg::Entity)]
    pub level: LevelArg,
    /// 0-based tag column in CoNLL input (token is column 0)
    #[arg(long, default_value_t = 1)]
    pub tag_column: usize,
    /// Repair BIO violations while parsing
    #[arg(long)]
    pub bio_repair: bool,
    /// Overwrite predictions on mention/URL/hashtag/RT tokens with
    /// their closed-class tags (pos only)
    #[arg(long)]
    pub regex_override: bool,
    /// Run seed recorded in the report
    #[arg(long)]
    pub seed: Option<u64>,
    /// Text report path; defaults to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Machine-readable report path (JSON)
    #[arg(long)]
    pub json: Option<PathBuf>,
}

pub fn run_eval(a: &EvalArgs) -> Result<(), CliError> {
    const STAGE: &str = "eval";
    match (&a.pred, &a.predictor) {
        (Some(_), Some(_)) => return Err(usage("pass either --pred or --predictor, not both")),
        (None, None) => return Err(usage("one of --pred or --predictor is required")),
        (None, Some(_)) if a.train.is_none() => {
            return Err(usage("--predictor needs --train"));
        }
        _ => {}
    }

    let report = if a.task.is_tagging() {
        let spec = ColumnSpec { tag_column: a.tag_column, bio_repair: a.bio_repair };
        let gold = parse_conll(&a.gold, &spec).stage(STAGE)?;
        let pred = match (&a.pred, a.predictor) {
            (Some(p), _) => parse_conll(p, &spec).stage(STAGE)?.sentences,
            (None, Some(PredictorArg::Mft)) => {
                let train = parse_conll(a.train.as_ref().unwrap(), &spec).stage(STAGE)?;
                let tagger = MftTagger::train(&train.sentences).stage(STAGE)?;
                tagger.predict_corpus(&gold.sentences)
            }
            (None, Some(PredictorArg::Majority)) => {
                return Err(usage("majority labels documents; tagging tasks need --predictor mft"));
            }
            (None, None) => unreachable!("checked above"),
        };
        score_tagging(a.task, &gold.sentences, &pred, a.level, a.regex_override).stage(STAGE)?
    } else {
        let docs = read_labeled_docs(&a.gold, STAGE)?;
        let gold_labels: Vec<String> = docs.into_iter().map(|d| d.gold_label).collect();
        let pred_labels = match (&a.pred, a.predictor) {
            (Some(p), _) => read_label_lines(p, STAGE)?,
            (None, Some(PredictorArg::Majority)) => {
                let train_docs = read_labeled_docs(a.train.as_ref().unwrap(), STAGE)?;
                let labels: Vec<String> = train_docs.into_iter().map(|d| d.gold_label).collect();
                let clf = MajorityClassifier::train(&labels).stage(STAGE)?;
                clf.predict_n(gold_labels.len())
            }
            (None, Some(PredictorArg::Mft)) => {
                return Err(usage("mft tags tokens; classification tasks need --predictor majority"));
            }
            (None, None) => unreachable!("checked above"),
        };
        let scheme = a.task.scheme().expect("classification task");
        classification_metrics(&gold_labels, &pred_labels, scheme).stage(STAGE)?
    };

    let report = match a.seed {
        Some(s) => report.with_seed(s),
        None => report,
    };
    write_report(&report, a.out.as_deref(), a.json.as_deref(), STAGE)
}

pub(crate) fn score_tagging(
    task: TaskArg,
    gold: &[TaggedSequence],
    pred: &[TaggedSequence],
    level: LevelArg,
    regex_override: bool,
) -> tweetforge::Result<MetricReport> {
    match task {
        TaskArg::Pos => {
            let map = RegexTagMap::default();
            pos_accuracy(gold, pred, regex_override.then_some(&map))
        }
        TaskArg::Ner => {
            let gold_spans = extract_spans_corpus(gold);
            let pred_spans = extract_spans_corpus(pred);
            Ok(ner_f1(&gold_spans, &pred_spans, level.to_core()))
        }
        _ => Err(tweetforge::Error::invalid("not a tagging task")),
    }
}

pub(crate) fn read_labeled_docs(path: &Path, stage: &'static str) -> Result<Vec<LabeledDoc>, CliError> {
    let file = File::open(path).map_err(|e| io_stage(stage, path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_stage(stage, path, e))?;
        if line.is_empty() {
            continue;
        }
        let doc: LabeledDoc = serde_json::from_str(&line).map_err(|e| CliError::Stage {
            stage,
            source: tweetforge::Error::Parse {
                line: i + 1,
                msg: format!("{}: {e}", path.display()),
            },
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

fn read_label_lines(path: &Path, stage: &'static str) -> Result<Vec<String>, CliError> {
    let file = File::open(path).map_err(|e| io_stage(stage, path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<io::Result<Vec<String>>>()
        .map_err(|e| io_stage(stage, path, e))
        .map(|lines| lines.into_iter().filter(|l| !l.is_empty()).collect())
}

pub(crate) fn write_report(
    report: &MetricReport,
    out: Option<&Path>,
    json: Option<&Path>,
    stage: &'static str,
) -> Result<(), CliError> {
    match out {
        Some(p) => {
            let mut f = File::create(p).map_err(|e| io_stage(stage, p, e))?;
            report.write_text(&mut f).stage(stage)?;
        }
        None => {
            let stdout = io::stdout();
            report.write_text(&mut stdout.lock()).stage(stage)?;
        }
    }
    if let Some(p) = json {
        write_json(report, p, stage)?;
    }
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path, stage: &'static str) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Stage { stage, source: tweetforge::Error::invalid(e.to_string()) })?;
    std::fs::write(path, body + "\n").map_err(|e| io_stage(stage, path, e))
}

// ------------------------------------------------------------------ split

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitFormat {
    /// One document per line
    Lines,
    /// Blank-line separated CoNLL sentences
    Conll,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Input path, or - for stdin
    #[arg(short, long, default_value = "-")]
    pub input: String,
    /// Unit of splitting
    #[arg(long, value_enum, default_value_t = SplitFormat::Lines)]
    pub format: SplitFormat,
    /// Fraction of units assigned to the validation part
    #[arg(long, default_value_t = 0.1)]
    pub valid_fraction: f64,
    /// Shuffle seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training-part output path
    #[arg(long)]
    pub train_out: PathBuf,
    /// Validation-part output path
    #[arg(long)]
    pub valid_out: PathBuf,
}

pub fn run_split(a: &SplitArgs) -> Result<(), CliError> {
    const STAGE: &str = "split";
    let input = open_input(&a.input, STAGE)?;
    let units: Vec<String> = match a.format {
        SplitFormat::Lines => {
            let mut lines = Vec::new();
            for line in input.lines() {
                let line = line.map_err(|e| io_stage(STAGE, Path::new(&a.input), e))?;
                if !line.is_empty() {
                    lines.push(line);
                }
            }
            lines
        }
        SplitFormat::Conll => {
            let mut sentences = Vec::new();
            let mut current = String::new();
            for line in input.lines() {
                let line = line.map_err(|e| io_stage(STAGE, Path::new(&a.input), e))?;
                if line.trim().is_empty() {
                    if !current.is_empty() {
                        sentences.push(std::mem::take(&mut current));
                    }
                } else {
                    current.push_str(&line);
                    current.push('\n');
                }
            }
            if !current.is_empty() {
                sentences.push(current);
            }
            sentences
        }
    };
    let (train, valid) = split_train_valid(&units, a.valid_fraction, a.seed).stage(STAGE)?;
    for (path, part) in [(&a.train_out, &train), (&a.valid_out, &valid)] {
        let mut f = BufWriter::new(File::create(path).map_err(|e| io_stage(STAGE, path, e))?);
        for unit in part {
            match a.format {
                SplitFormat::Lines => {
                    writeln!(f, "{unit}").map_err(|e| io_stage(STAGE, path, e))?
                }
                SplitFormat::Conll => {
                    f.write_all(unit.as_bytes()).map_err(|e| io_stage(STAGE, path, e))?;
                    f.write_all(b"\n").map_err(|e| io_stage(STAGE, path, e))?;
                }
            }
        }
        f.flush().map_err(|e| io_stage(STAGE, path, e))?;
    }
    Ok(())
}

// -------------------------------------------------------------- aggregate

#[derive(Args, Debug)]
pub struct AggregateArgs {
    /// Per-run report files (JSON), all for the same task
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Text summary path; defaults to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Machine-readable summary path (JSON)
    #[arg(long)]
    pub json: Option<PathBuf>,
}

pub fn run_aggregate(a: &AggregateArgs) -> Result<(), CliError> {
    const STAGE: &str = "aggregate";
    let mut reports = Vec::new();
    for path in &a.reports {
        let body = std::fs::read_to_string(path).map_err(|e| io_stage(STAGE, path, e))?;
        let report: MetricReport = serde_json::from_str(&body).map_err(|e| CliError::Stage {
            stage: STAGE,
            source: tweetforge::Error::invalid(format!("{}: {e}", path.display())),
        })?;
        reports.push(report);
    }
    let agg = aggregate_runs(&reports).stage(STAGE)?;
    match &a.out {
        Some(p) => {
            let mut f = File::create(p).map_err(|e| io_stage(STAGE, p, e))?;
            agg.write_text(&mut f).stage(STAGE)?;
        }
        None => {
            let stdout = io::stdout();
            agg.write_text(&mut stdout.lock()).stage(STAGE)?;
        }
    }
    if let Some(p) = &a.json {
        write_json(&agg, p, STAGE)?;
    }
    Ok(())
}
