//! Streaming toolkit for building tweet pretraining data and scoring
//! downstream tweet taggers and classifiers.
//!
//! The pipeline side covers corpus ingestion and filtering
//! ([`ingest`]), tweet-aware tokenization ([`tokenize`]), lexical
//! normalization ([`normalize`]), byte-pair subword learning and
//! application ([`bpe`]), fixed-length block packing with masked-token
//! selection ([`pack`]), and a checksummed shard format ([`shard`]).
//! The evaluation side ([`eval`]) covers CoNLL parsing, tagging and
//! classification metrics, split/early-stop bookkeeping, and reference
//! predictors. Everything is deterministic given explicit seeds;
//! nothing reads the clock or ambient randomness.

pub mod bpe;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod ingest;
pub mod langid;
pub mod normalize;
pub mod pack;
pub mod rng;
pub mod shard;
pub mod tokenize;

pub use error::{Error, Result};
