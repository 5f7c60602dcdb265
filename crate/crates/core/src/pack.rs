//! Fixed-length block packing and masked-example sampling for the
//! masked-LM objective.
//!
//! Packing is a greedy streaming fold: tweets are appended to the open
//! block (bracketed by bos/eos) while they fit, and a tweet that does
//! not fit pads out the block and opens the next one. No tweet is ever
//! split across blocks; tweets longer than the block budget are
//! truncated and counted.
//!
//! Masking is counter-based: the generator is keyed by (seed, block
//! index, epoch), so any worker can mask any block in any order and
//! produce bit-identical output, while different epochs see different
//! masks.

use serde::{Deserialize, Serialize};

use crate::bpe::{BOS_ID, EOS_ID, MASK_ID, NUM_SPECIALS, PAD_ID};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const DEFAULT_BLOCK_LEN: usize = 128;

/// One tweet's slice of a block; `ids[start..end]` runs bos..=eos.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub tweet_id: String,
    pub start: usize,
    pub end: usize,
}

/// A packed training block of exactly the configured length. Segments
/// tile the prefix in input order; padding is only ever a suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceBlock {
    pub ids: Vec<u32>,
    pub boundary_map: Vec<Segment>,
    pub pad_count: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PackStats {
    pub tweets: u64,
    pub truncated: u64,
    pub blocks: u64,
}

/// Streaming packer: feed tweets with `push`, drain the final partial
/// block with `finish`.
pub struct BlockPacker {
    block_len: usize,
    ids: Vec<u32>,
    map: Vec<Segment>,
    stats: PackStats,
}

impl BlockPacker {
    pub fn new(block_len: usize) -> Result<BlockPacker> {
        if block_len < 3 {
            return Err(Error::Config(format!(
                "block length {block_len} cannot hold bos + id + eos"
            )));
        }
        Ok(BlockPacker {
            block_len,
            ids: Vec::with_capacity(block_len),
            map: Vec::new(),
            stats: PackStats::default(),
        })
    }

    pub fn stats(&self) -> PackStats {
        self.stats
    }

    fn emit(&mut self) -> Option<SequenceBlock> {
        if self.ids.is_empty() {
            return None;
        }
        let pad_count = self.block_len - self.ids.len();
        self.ids.resize(self.block_len, PAD_ID);
        self.stats.blocks += 1;
        Some(SequenceBlock {
            ids: std::mem::replace(&mut self.ids, Vec::with_capacity(self.block_len)),
            boundary_map: std::mem::take(&mut self.map),
            pad_count,
        })
    }

    /// Appends one tweet; returns the block it closed, if any.
    pub fn push(&mut self, tweet_id: &str, subword_ids: &[u32]) -> Option<SequenceBlock> {
        self.stats.tweets += 1;
        let budget = self.block_len - 2;
        let ids = if subword_ids.len() > budget {
            self.stats.truncated += 1;
            &subword_ids[..budget]
        } else {
            subword_ids
        };
        let need = ids.len() + 2;
        let closed = if self.ids.len() + need > self.block_len { self.emit() } else { None };
        let start = self.ids.len();
        self.ids.push(BOS_ID);
        self.ids.extend_from_slice(ids);
        self.ids.push(EOS_ID);
        self.map.push(Segment {
            tweet_id: tweet_id.to_string(),
            start,
            end: self.ids.len(),
        });
        closed
    }

    /// Pads and returns the open block, if any. The packer is reusable
    /// afterwards; stats carry across.
    pub fn finish(&mut self) -> Option<SequenceBlock> {
        self.emit()
    }
}

/// Packs a whole stream in order.
pub fn pack_blocks<I, S>(tweets: I, block_len: usize) -> Result<(Vec<SequenceBlock>, PackStats)>
where
    I: IntoIterator<Item = (S, Vec<u32>)>,
    S: AsRef<str>,
{
    let mut packer = BlockPacker::new(block_len)?;
    let mut blocks = Vec::new();
    for (id, ids) in tweets {
        blocks.extend(packer.push(id.as_ref(), &ids));
    }
    blocks.extend(packer.finish());
    Ok((blocks, packer.stats()))
}

/// Masking knobs: what fraction of eligible positions become labels,
/// and how a chosen position is corrupted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPolicy {
    pub mask_fraction: f64,
    pub mask_prob: f64,
    pub random_prob: f64,
    pub keep_prob: f64,
    pub seed: u64,
}

impl Default for MaskPolicy {
    fn default() -> Self {
        MaskPolicy {
            mask_fraction: 0.15,
            mask_prob: 0.8,
            random_prob: 0.1,
            keep_prob: 0.1,
            seed: 0,
        }
    }
}

impl MaskPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.mask_fraction > 0.0 && self.mask_fraction < 1.0) {
            return Err(Error::Config(format!(
                "mask_fraction must lie in (0, 1), got {}",
                self.mask_fraction
            )));
        }
        let probs = [self.mask_prob, self.random_prob, self.keep_prob];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("action probabilities must lie in [0, 1]".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "action probabilities must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// A block with some positions corrupted for prediction. Restoring
/// `labels` at `label_positions` reproduces the source block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedExample {
    pub input_ids: Vec<u32>,
    pub label_positions: Vec<usize>,
    pub labels: Vec<u32>,
}

/// Samples one masked example. Eligible positions are the non-special,
/// non-pad ids; round(fraction × eligible) of them are chosen without
/// replacement, then corrupted per the action split. Fully determined
/// by (policy.seed, block_index, epoch).
pub fn mask_block(
    block: &SequenceBlock,
    block_index: u64,
    epoch: u64,
    policy: &MaskPolicy,
    vocab_size: u32,
) -> MaskedExample {
    debug_assert!(vocab_size > NUM_SPECIALS);
    let mut rng = SplitMix64::from_parts(&[policy.seed, block_index, epoch]);
    let mut eligible: Vec<usize> = (0..block.ids.len())
        .filter(|&i| block.ids[i] >= NUM_SPECIALS)
        .collect();
    let k = (policy.mask_fraction * eligible.len() as f64).round() as usize;
    // Partial Fisher-Yates: the first k slots are a uniform draw
    // without replacement.
    for i in 0..k {
        let j = i + rng.below((eligible.len() - i) as u64) as usize;
        eligible.swap(i, j);
    }
    let mut positions: Vec<usize> = eligible[..k].to_vec();
    positions.sort_unstable();

    let mut input_ids = block.ids.clone();
    let mut labels = Vec::with_capacity(k);
    for &pos in &positions {
        labels.push(block.ids[pos]);
        let draw = rng.next_f64();
        if draw < policy.mask_prob {
            input_ids[pos] = MASK_ID;
        } else if draw < policy.mask_prob + policy.random_prob {
            input_ids[pos] = NUM_SPECIALS + rng.below((vocab_size - NUM_SPECIALS) as u64) as u32;
        }
        // Otherwise the original id stays in place but is still a label.
    }
    MaskedExample { input_ids, label_positions: positions, labels }
}
