//! Config-file driver for the `run` subcommand. A flat TOML file sets
//! per-stage knobs; `preset` chooses which stages run and in what order.
//! Flags passed on the command line win over config values.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use tweetforge::eval::{
    aggregate_runs, classification_metrics, parse_conll, split_train_valid, ColumnSpec,
    MajorityClassifier, MetricReport, MftTagger,
};

use crate::stages::{
    self, read_labeled_docs, score_tagging, write_json, FormatArg, LangIdChoice, LevelArg,
    ModeArg, PredictorArg, TaskArg,
};
use crate::{usage, CliError, StageResult};

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Pipeline config file (TOML)
    #[arg(short, long)]
    pub config: PathBuf,
    /// Override the config's preset
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Override the config's worker count
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// ingest -> normalize -> bpe-learn -> bpe-apply -> pack -> mask
    Pretrain,
    /// optional normalize, then train/score reference predictors per task
    Downstream,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub preset: Option<Preset>,
    /// Raw corpus for pretrain, or text to normalize for downstream.
    pub input: Option<PathBuf>,
    /// Every artifact lands under this directory.
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub ingest: IngestSection,
    #[serde(default)]
    pub normalize: NormalizeSection,
    #[serde(default)]
    pub bpe: BpeSection,
    #[serde(default)]
    pub pack: PackSection,
    #[serde(default)]
    pub mask: MaskSection,
    #[serde(default)]
    pub eval: Vec<EvalJob>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestSection {
    pub format: FormatArg,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub lang: String,
    pub min_lang_confidence: f64,
    pub keep_retweets: bool,
    pub keywords: Vec<String>,
    pub langid: LangIdChoice,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            format: FormatArg::Jsonl,
            min_tokens: 10,
            max_tokens: 64,
            lang: "en".to_string(),
            min_lang_confidence: 0.0,
            keep_retweets: false,
            keywords: Vec::new(),
            langid: LangIdChoice::Builtin,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizeSection {
    pub mode: ModeArg,
    pub dicts: Vec<PathBuf>,
    pub emoji: Option<PathBuf>,
}

impl Default for NormalizeSection {
    fn default() -> Self {
        NormalizeSection { mode: ModeArg::Soft, dicts: Vec::new(), emoji: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BpeSection {
    pub vocab_size: usize,
    pub min_pair_freq: u64,
}

impl Default for BpeSection {
    fn default() -> Self {
        BpeSection { vocab_size: 64_000, min_pair_freq: 2 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PackSection {
    pub block_len: usize,
    pub shard_size: usize,
}

impl Default for PackSection {
    fn default() -> Self {
        PackSection { block_len: 128, shard_size: 512 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskSection {
    pub fraction: f64,
    pub mask_prob: f64,
    pub random_prob: f64,
    pub keep_prob: f64,
    pub seed: u64,
    pub epoch: u64,
}

impl Default for MaskSection {
    fn default() -> Self {
        MaskSection {
            fraction: 0.15,
            mask_prob: 0.8,
            random_prob: 0.1,
            keep_prob: 0.1,
            seed: 0,
            epoch: 0,
        }
    }
}

/// One downstream scoring job: train a reference predictor on `train`,
/// score it on `test`, once per seed.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalJob {
    pub name: Option<String>,
    pub task: TaskArg,
    pub train: PathBuf,
    pub test: PathBuf,
    pub predictor: Option<PredictorArg>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_valid_fraction")]
    pub valid_fraction: f64,
    #[serde(default = "default_level")]
    pub level: LevelArg,
    #[serde(default = "default_tag_column")]
    pub tag_column: usize,
    #[serde(default)]
    pub bio_repair: bool,
    #[serde(default)]
    pub regex_override: bool,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_valid_fraction() -> f64 {
    0.1
}

fn default_level() -> LevelArg {
    LevelArg::Entity
}

fn default_tag_column() -> usize {
    1
}

pub fn run(a: &RunArgs) -> Result<(), CliError> {
    let body = fs::read_to_string(&a.config)
        .map_err(|e| usage(format!("cannot read {}: {e}", a.config.display())))?;
    let cfg: PipelineConfig =
        toml::from_str(&body).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    let preset = a
        .preset
        .or(cfg.preset)
        .ok_or_else(|| usage("no preset: set `preset` in the config or pass --preset"))?;
    let workers = a.workers.or(cfg.workers).unwrap_or(1);
    match preset {
        Preset::Pretrain => run_pretrain(&cfg, workers),
        Preset::Downstream => run_downstream(&cfg, workers),
    }
}

fn require<'a, T>(opt: &'a Option<T>, what: &str) -> Result<&'a T, CliError> {
    opt.as_ref().ok_or_else(|| usage(format!("config needs `{what}` for this preset")))
}

fn progress(stage: &str) {
    eprintln!("tweetforge: {stage}");
}

fn run_pretrain(cfg: &PipelineConfig, workers: usize) -> Result<(), CliError> {
    if cfg.normalize.mode == ModeArg::Hard {
        return Err(usage("the pretrain preset normalizes softly; hard mode is for downstream"));
    }
    let input = require(&cfg.input, "input")?;
    let out_dir = require(&cfg.out_dir, "out_dir")?;
    fs::create_dir_all(out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = |name: &str| out_dir.join(name);
    let s = |p: &Path| p.to_string_lossy().into_owned();

    progress("ingest");
    stages::run_ingest(&stages::IngestArgs {
        input: s(input),
        output: s(&path("filtered.jsonl")),
        format: cfg.ingest.format,
        min_tokens: cfg.ingest.min_tokens,
        max_tokens: cfg.ingest.max_tokens,
        lang: cfg.ingest.lang.clone(),
        min_lang_confidence: cfg.ingest.min_lang_confidence,
        keep_retweets: cfg.ingest.keep_retweets,
        keyword: cfg.ingest.keywords.clone(),
        langid: cfg.ingest.langid,
        stats: Some(path("ingest_stats.txt")),
    })?;

    progress("normalize");
    stages::run_normalize(&stages::NormalizeArgs {
        input: s(&path("filtered.jsonl")),
        output: s(&path("normalized.jsonl")),
        mode: ModeArg::Soft,
        dict: Vec::new(),
        emoji: cfg.normalize.emoji.clone(),
        stats: Some(path("normalize_stats.txt")),
    })?;

    progress("bpe-learn");
    stages::run_bpe_learn(&stages::BpeLearnArgs {
        input: s(&path("normalized.jsonl")),
        vocab_size: cfg.bpe.vocab_size,
        min_pair_freq: cfg.bpe.min_pair_freq,
        merges: path("bpe.merges"),
        vocab: path("bpe.vocab"),
        workers,
    })?;

    progress("bpe-apply");
    stages::run_bpe_apply(&stages::BpeApplyArgs {
        input: s(&path("normalized.jsonl")),
        output: s(&path("encoded.jsonl")),
        merges: path("bpe.merges"),
        vocab: path("bpe.vocab"),
        workers,
    })?;

    progress("pack");
    stages::run_pack(&stages::PackArgs {
        input: s(&path("encoded.jsonl")),
        out_dir: path("blocks"),
        block_len: cfg.pack.block_len,
        shard_size: cfg.pack.shard_size,
        stats: Some(path("pack_stats.txt")),
    })?;

    progress("mask");
    stages::run_mask(&stages::MaskArgs {
        in_dir: path("blocks"),
        out_dir: path("masked"),
        vocab: path("bpe.vocab"),
        fraction: cfg.mask.fraction,
        mask_prob: cfg.mask.mask_prob,
        random_prob: cfg.mask.random_prob,
        keep_prob: cfg.mask.keep_prob,
        seed: cfg.mask.seed,
        epoch: cfg.mask.epoch,
        workers,
    })?;
    Ok(())
}

fn run_downstream(cfg: &PipelineConfig, _workers: usize) -> Result<(), CliError> {
    const STAGE: &str = "eval";
    let out_dir = require(&cfg.out_dir, "out_dir")?;
    fs::create_dir_all(out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", out_dir.display())))?;

    if let Some(input) = &cfg.input {
        if cfg.normalize.mode == ModeArg::Hard && cfg.normalize.dicts.is_empty() {
            return Err(usage("normalize.mode = \"hard\" needs normalize.dicts"));
        }
        progress("normalize");
        stages::run_normalize(&stages::NormalizeArgs {
            input: input.to_string_lossy().into_owned(),
            output: out_dir.join("normalized.jsonl").to_string_lossy().into_owned(),
            mode: cfg.normalize.mode,
            dict: cfg.normalize.dicts.clone(),
            emoji: cfg.normalize.emoji.clone(),
            stats: None,
        })?;
    }

    if cfg.eval.is_empty() {
        return Err(usage("the downstream preset needs at least one [[eval]] job"));
    }
    for job in &cfg.eval {
        let name = job.name.clone().unwrap_or_else(|| job.task.name().to_string());
        progress(&format!("eval {name}"));
        let reports = run_eval_job(job)?;
        let mut paths = Vec::new();
        for report in &reports {
            let path = out_dir.join(format!("{name}_seed{}.json", report.run_seed));
            write_json(report, &path, STAGE)?;
            paths.push(path);
        }
        let agg = aggregate_runs(&reports).stage(STAGE)?;
        let text_path = out_dir.join(format!("{name}_aggregate.txt"));
        let mut f = fs::File::create(&text_path).map_err(|e| {
            CliError::Stage { stage: STAGE, source: tweetforge::Error::io(&text_path, e) }
        })?;
        agg.write_text(&mut f).stage(STAGE)?;
        write_json(&agg, &out_dir.join(format!("{name}_aggregate.json")), STAGE)?;
    }
    Ok(())
}

/// Trains the job's reference predictor once per seed on a fresh
/// train/valid split and scores it on the held-out test set. The split
/// keeps the protocol honest even though the reference predictors have
/// no validation loop to feed.
fn run_eval_job(job: &EvalJob) -> Result<Vec<MetricReport>, CliError> {
    const STAGE: &str = "eval";
    let predictor = job.predictor.unwrap_or(match job.task {
        TaskArg::Pos | TaskArg::Ner => PredictorArg::Mft,
        TaskArg::Semeval17 | TaskArg::Semeval18 => PredictorArg::Majority,
    });
    match (job.task.is_tagging(), predictor) {
        (true, PredictorArg::Majority) => {
            return Err(usage("majority labels documents; tagging tasks need predictor = \"mft\""));
        }
        (false, PredictorArg::Mft) => {
            return Err(usage("mft tags tokens; classification tasks need predictor = \"majority\""));
        }
        _ => {}
    }

    let mut reports = Vec::new();
    if job.task.is_tagging() {
        let spec = ColumnSpec { tag_column: job.tag_column, bio_repair: job.bio_repair };
        let train = parse_conll(&job.train, &spec).stage(STAGE)?;
        let test = parse_conll(&job.test, &spec).stage(STAGE)?;
        for &seed in &job.seeds {
            let (train_part, _valid) =
                split_train_valid(&train.sentences, job.valid_fraction, seed).stage(STAGE)?;
            let tagger = MftTagger::train(&train_part).stage(STAGE)?;
            let pred = tagger.predict_corpus(&test.sentences);
            let report =
                score_tagging(job.task, &test.sentences, &pred, job.level, job.regex_override)
                    .stage(STAGE)?;
            reports.push(report.with_seed(seed));
        }
    } else {
        let train_docs = read_labeled_docs(&job.train, STAGE)?;
        let test_docs = read_labeled_docs(&job.test, STAGE)?;
        let gold: Vec<String> = test_docs.into_iter().map(|d| d.gold_label).collect();
        let scheme = job.task.scheme().expect("classification task");
        for &seed in &job.seeds {
            let (train_part, _valid) =
                split_train_valid(&train_docs, job.valid_fraction, seed).stage(STAGE)?;
            let labels: Vec<String> = train_part.into_iter().map(|d| d.gold_label).collect();
            let clf = MajorityClassifier::train(&labels).stage(STAGE)?;
            let pred = clf.predict_n(gold.len());
            let report = classification_metrics(&gold, &pred, scheme).stage(STAGE)?;
            reports.push(report.with_seed(seed));
        }
    }
    Ok(reports)
}
