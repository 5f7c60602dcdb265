//! Reference implementations that favor obviousness over speed.
//!
//! Everything here recomputes from scratch with the dumbest data
//! structures that can possibly work, so the fast paths in the main
//! crate can be checked against an independently written answer.

pub mod bpe;
pub mod ner;
