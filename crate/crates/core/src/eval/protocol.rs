//! Experimental-protocol bookkeeping: validation splits, early
//! stopping, and multi-run aggregation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

use super::{MetricReport, MetricStat, RunAggregate};

/// Seeded shuffle-and-cut. The validation share is
/// round-half-to-even(fraction × n); train and valid are disjoint and
/// exhaust the input.
pub fn split_train_valid<T: Clone>(
    docs: &[T],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if docs.len() < 2 {
        return Err(Error::invalid(format!(
            "cannot split {} document(s) into train and valid",
            docs.len()
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n_valid = (fraction * docs.len() as f64).round_ties_even() as usize;
    let mut order: Vec<usize> = (0..docs.len()).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let valid: Vec<T> = order[..n_valid].iter().map(|&i| docs[i].clone()).collect();
    let train: Vec<T> = order[n_valid..].iter().map(|&i| docs[i].clone()).collect();
    Ok((train, valid))
}

/// Simulates patience-based early stopping over per-epoch validation
/// scores (higher is better). Epochs are 1-indexed. Returns
/// (best_epoch, stop_epoch): best is the first epoch attaining the
/// running maximum; training stops the first time the gap since best
/// reaches `patience`, otherwise at the last epoch.
pub fn early_stop(val_scores: &[f64], patience: usize) -> Result<(usize, usize)> {
    if val_scores.is_empty() {
        return Err(Error::invalid("early_stop needs at least one epoch score"));
    }
    let mut best_epoch = 1;
    let mut best_score = val_scores[0];
    for (i, &score) in val_scores.iter().enumerate() {
        let epoch = i + 1;
        if score > best_score {
            best_score = score;
            best_epoch = epoch;
        }
        if epoch - best_epoch == patience {
            return Ok((best_epoch, epoch));
        }
    }
    Ok((best_epoch, val_scores.len()))
}

/// Per-metric mean and sample standard deviation over runs of one task.
pub fn aggregate_runs(reports: &[MetricReport]) -> Result<RunAggregate> {
    let Some(first) = reports.first() else {
        return Err(Error::invalid("cannot aggregate zero runs"));
    };
    let names: Vec<&String> = first.metrics.keys().collect();
    for r in reports {
        if r.task != first.task {
            return Err(Error::invalid(format!(
                "cannot aggregate {} and {} runs together",
                first.task.as_str(),
                r.task.as_str()
            )));
        }
        if r.metrics.keys().collect::<Vec<_>>() != names {
            return Err(Error::invalid(
                "runs carry different metric sets; refusing to aggregate",
            ));
        }
    }
    let n = reports.len() as f64;
    let mut metrics = BTreeMap::new();
    for name in names {
        let values: Vec<f64> = reports.iter().map(|r| r.metrics[name]).collect();
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            let var =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            var.sqrt()
        };
        metrics.insert(name.clone(), MetricStat { mean, std });
    }
    Ok(RunAggregate { task: first.task, runs: reports.len(), metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::TaskKind;
    use proptest::prelude::*;

    #[test]
    fn hundred_docs_split_ninety_ten() {
        let docs: Vec<u32> = (0..100).collect();
        let (train, valid) = split_train_valid(&docs, 0.1, 7).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(valid.len(), 10);
        let mut all: Vec<u32> = train.iter().chain(&valid).copied().collect();
        all.sort_unstable();
        assert_eq!(all, docs);
    }

    #[test]
    fn same_seed_same_split_different_seed_differs() {
        let docs: Vec<u32> = (0..50).collect();
        let a = split_train_valid(&docs, 0.1, 3).unwrap();
        let b = split_train_valid(&docs, 0.1, 3).unwrap();
        assert_eq!(a, b);
        let c = split_train_valid(&docs, 0.1, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn half_counts_round_to_even() {
        let docs: Vec<u32> = (0..15).collect();
        let (_, valid) = split_train_valid(&docs, 0.1, 0).unwrap();
        assert_eq!(valid.len(), 2); // 1.5 rounds to 2
        let docs25: Vec<u32> = (0..25).collect();
        let (_, valid25) = split_train_valid(&docs25, 0.1, 0).unwrap();
        assert_eq!(valid25.len(), 2); // 2.5 rounds to 2
    }

    #[test]
    fn degenerate_splits_are_rejected() {
        assert!(split_train_valid(&[1], 0.1, 0).is_err());
        let docs = [1, 2, 3];
        assert!(split_train_valid(&docs, 0.0, 0).is_err());
        assert!(split_train_valid(&docs, 1.0, 0).is_err());
    }

    #[test]
    fn early_stop_traces_the_reference_example() {
        let scores = [0.5, 0.6, 0.59, 0.58, 0.57, 0.56, 0.55];
        assert_eq!(early_stop(&scores, 5).unwrap(), (2, 7));
    }

    #[test]
    fn rising_scores_never_stop_early() {
        let scores = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(early_stop(&scores, 2).unwrap(), (4, 4));
    }

    #[test]
    fn single_epoch_is_its_own_best_and_stop() {
        assert_eq!(early_stop(&[0.7], 5).unwrap(), (1, 1));
    }

    #[test]
    fn plateaus_do_not_count_as_improvement() {
        let scores = [0.5, 0.5, 0.5, 0.5];
        assert_eq!(early_stop(&scores, 2).unwrap(), (1, 3));
    }

    #[test]
    fn stop_fires_even_if_scores_recover_later() {
        // The rebound at epoch 5 is never seen: training stopped at 4.
        let scores = [0.9, 0.1, 0.1, 0.1, 1.0];
        assert_eq!(early_stop(&scores, 3).unwrap(), (1, 4));
    }

    #[test]
    fn empty_scores_are_an_error() {
        assert!(early_stop(&[], 5).is_err());
    }

    fn report(task: TaskKind, acc: f64) -> MetricReport {
        let mut r = MetricReport::new(task, 10);
        r.set("accuracy", acc);
        r
    }

    #[test]
    fn five_run_mean_matches_hand_arithmetic() {
        let runs: Vec<MetricReport> =
            [0.70, 0.71, 0.72, 0.73, 0.74].iter().map(|&a| report(TaskKind::Pos, a)).collect();
        let agg = aggregate_runs(&runs).unwrap();
        assert!((agg.metrics["accuracy"].mean - 0.72).abs() < 1e-12);
        assert_eq!(agg.runs, 5);
    }

    #[test]
    fn single_run_has_zero_std() {
        let agg = aggregate_runs(&[report(TaskKind::Pos, 0.5)]).unwrap();
        assert_eq!(agg.metrics["accuracy"].std, 0.0);
        assert_eq!(agg.metrics["accuracy"].mean, 0.5);
    }

    #[test]
    fn mismatched_runs_are_rejected() {
        assert!(aggregate_runs(&[]).is_err());
        let a = report(TaskKind::Pos, 0.5);
        let b = report(TaskKind::Ner, 0.5);
        assert!(aggregate_runs(&[a.clone(), b]).is_err());
        let mut c = report(TaskKind::Pos, 0.5);
        c.metrics.insert("extra".to_string(), 0.1);
        assert!(aggregate_runs(&[a, c]).is_err());
    }

    proptest! {
        #[test]
        fn splits_are_disjoint_and_exhaustive(
            n in 2usize..200,
            fraction in 0.01f64..0.99,
            seed in any::<u64>(),
        ) {
            let docs: Vec<usize> = (0..n).collect();
            let (train, valid) = split_train_valid(&docs, fraction, seed).unwrap();
            prop_assert_eq!(train.len() + valid.len(), n);
            let mut all: Vec<usize> = train.iter().chain(&valid).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, docs);
        }

        #[test]
        fn aggregate_mean_sits_inside_the_run_range(
            values in proptest::collection::vec(0.0f64..=1.0, 1..10),
        ) {
            let runs: Vec<MetricReport> =
                values.iter().map(|&v| report(TaskKind::Pos, v)).collect();
            let agg = aggregate_runs(&runs).unwrap();
            let mean = agg.metrics["accuracy"].mean;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(mean >= min - 1e-12 && mean <= max + 1e-12);
        }

        #[test]
        fn aggregate_is_permutation_invariant(
            values in proptest::collection::vec(0.0f64..=1.0, 2..8),
            rot in 1usize..8,
        ) {
            let runs: Vec<MetricReport> =
                values.iter().map(|&v| report(TaskKind::Pos, v)).collect();
            let mut rotated = runs.clone();
            rotated.rotate_left(rot % runs.len());
            let a = aggregate_runs(&runs).unwrap();
            let b = aggregate_runs(&rotated).unwrap();
            prop_assert!(
                (a.metrics["accuracy"].mean - b.metrics["accuracy"].mean).abs() < 1e-12
            );
            prop_assert!(
                (a.metrics["accuracy"].std - b.metrics["accuracy"].std).abs() < 1e-12
            );
        }
    }
}
