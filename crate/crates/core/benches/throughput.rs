//! Tweets-per-second through the hot path: tokenize, soft-normalize,
//! apply learned merges. Criterion keeps per-run baselines, so rerun
//! with `cargo bench -- --baseline <name>` to track regressions.

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use tweetforge::bpe::{learn_bpe, Encoder, MergeTable};
use tweetforge::fixture;
use tweetforge::normalize::{soft_normalize, EmojiTable};
use tweetforge::tokenize::tokenize;

const TWEETS: usize = 20_000;
const WORKERS: usize = 4;

fn learned_table(texts: &[String]) -> MergeTable {
    let seqs: Vec<_> = texts
        .iter()
        .map(|t| soft_normalize(&tokenize(t), EmojiTable::bundled()).tokens)
        .collect();
    learn_bpe(seqs.iter(), &fixture::learn_params()).unwrap()
}

fn pipeline(c: &mut Criterion) {
    let texts: Vec<String> =
        fixture::generate(TWEETS).into_iter().map(|t| t.text).collect();
    let table = learned_table(&texts);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(WORKERS)
        .build()
        .unwrap();

    let mut group = c.benchmark_group("pipeline");
    group.throughput(Throughput::Elements(TWEETS as u64));
    group.sample_size(10);
    group.bench_function("tokenize_normalize_apply_w4", |b| {
        b.iter(|| {
            pool.install(|| {
                use rayon::prelude::*;
                let emoji = EmojiTable::bundled();
                texts
                    .par_chunks(512)
                    .map(|chunk| {
                        let mut enc = Encoder::new(&table);
                        let mut ids = 0usize;
                        for text in chunk {
                            let norm = soft_normalize(&tokenize(text), emoji);
                            ids += enc.encode_sequence(&norm.tokens).ids.len();
                        }
                        ids
                    })
                    .sum::<usize>()
            })
        })
    });
    group.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
