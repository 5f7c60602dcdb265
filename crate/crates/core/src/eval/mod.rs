//! Downstream evaluation harness: dataset parsing, the task metrics,
//! experimental-protocol bookkeeping, and trivial reference predictors
//! for end-to-end tests.

mod conll;
mod metrics;
mod predictors;
mod protocol;
mod spans;

pub use conll::{parse_conll, parse_conll_reader, ColumnSpec, ParsedCorpus};
pub use metrics::{
    classification_metrics, ner_f1, pos_accuracy, regex_tag, ClassificationScheme, MatchLevel,
    RegexTagMap,
};
pub use predictors::{MajorityClassifier, MftTagger};
pub use protocol::{aggregate_runs, early_stop, split_train_valid};
pub use spans::{extract_spans, extract_spans_corpus, render_bio, EntitySpan};

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One tagged sentence: tokens and their tags, index-aligned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSequence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

impl TaggedSequence {
    pub fn new(tokens: Vec<String>, tags: Vec<String>) -> Result<TaggedSequence> {
        if tokens.is_empty() || tokens.len() != tags.len() {
            return Err(Error::invalid(format!(
                "a tagged sentence needs equal, non-zero token/tag counts (got {}/{})",
                tokens.len(),
                tags.len()
            )));
        }
        Ok(TaggedSequence { tokens, tags })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A classification example with its gold label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDoc {
    pub id: String,
    pub text: String,
    pub gold_label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Pos,
    Ner,
    Semeval17,
    Semeval18,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Pos => "pos",
            TaskKind::Ner => "ner",
            TaskKind::Semeval17 => "semeval17",
            TaskKind::Semeval18 => "semeval18",
        }
    }
}

/// One run's scores for one task. Every metric value lies in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: TaskKind,
    pub metrics: BTreeMap<String, f64>,
    pub n_items: u64,
    pub run_seed: u64,
}

impl MetricReport {
    pub fn new(task: TaskKind, n_items: u64) -> MetricReport {
        MetricReport { task, metrics: BTreeMap::new(), n_items, run_seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> MetricReport {
        self.run_seed = seed;
        self
    }

    pub(crate) fn set(&mut self, name: &str, value: f64) {
        debug_assert!(
            (0.0..=1.0).contains(&value),
            "{name} = {value} escapes [0, 1]"
        );
        self.metrics.insert(name.to_string(), value);
    }

    /// Flat `key value` text rendering; floats are fixed-width so the
    /// report is byte-stable across runs.
    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        let io_err = |e| Error::io("<stream>", e);
        writeln!(w, "task {}", self.task.as_str()).map_err(io_err)?;
        writeln!(w, "n_items {}", self.n_items).map_err(io_err)?;
        writeln!(w, "run_seed {}", self.run_seed).map_err(io_err)?;
        for (k, v) in &self.metrics {
            writeln!(w, "{k} {v:.12}").map_err(io_err)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation per metric over repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub task: TaskKind,
    pub runs: usize,
    pub metrics: BTreeMap<String, MetricStat>,
}

impl RunAggregate {
    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        let io_err = |e| Error::io("<stream>", e);
        writeln!(w, "task {}", self.task.as_str()).map_err(io_err)?;
        writeln!(w, "runs {}", self.runs).map_err(io_err)?;
        for (k, s) in &self.metrics {
            writeln!(w, "{k}_mean {:.12}", s.mean).map_err(io_err)?;
            writeln!(w, "{k}_std {:.12}", s.std).map_err(io_err)?;
        }
        Ok(())
    }
}

/// F1 from precision and recall; 0 when both vanish.
pub(crate) fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Ratio with the explicit 0/0 = 0 convention used throughout.
pub(crate) fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
