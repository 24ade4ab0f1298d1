//! Sequential vs parallel throughput of the three batch-shaped stages:
//! training (candidate scoring dominates), batch lemmatization, and corpus
//! evaluation. Built without the `parallel` feature only the sequential
//! series runs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use nefnir::eval::{evaluate_with, TokenRecord};
use nefnir::synth::{lexicon, token_stream, SynthSpec};
use nefnir::trainer::{train, TrainConfig};
use nefnir::{LemmatizeOptions, Threading};

fn modes() -> Vec<(&'static str, Threading)> {
    let mut modes = vec![("seq", Threading::Sequential)];
    if cfg!(feature = "parallel") {
        modes.push(("par", Threading::Parallel));
    }
    modes
}

fn bench_train(c: &mut Criterion) {
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    for entries in [5_000usize, 20_000] {
        let set = lexicon(&SynthSpec { target_entries: entries, paradigms: 24, ..SynthSpec::default() });
        group.throughput(Throughput::Elements(entries as u64));
        for (name, mode) in modes() {
            let config = TrainConfig { threading: mode, ..TrainConfig::default() };
            group.bench_with_input(BenchmarkId::new(name, entries), &set, |b, set| {
                b.iter(|| train(set, &config).unwrap());
            });
        }
    }
    group.finish();
}

fn bench_lemmatize(c: &mut Criterion) {
    let set = lexicon(&SynthSpec { target_entries: 20_000, paradigms: 24, ..SynthSpec::default() });
    let model = train(&set, &TrainConfig::default()).unwrap().model;
    let queries: Vec<(String, String)> = token_stream(&set, 200_000, 0.1, 11)
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (form, tag) = l.split_once('\t').unwrap();
            (form.to_string(), tag.to_string())
        })
        .collect();

    let mut group = c.benchmark_group("lemmatize_batch");
    group.throughput(Throughput::Elements(queries.len() as u64));
    for (name, mode) in modes() {
        group.bench_function(BenchmarkId::new(name, queries.len()), |b| {
            b.iter(|| model.lemmatize_batch(&queries, LemmatizeOptions::default(), mode));
        });
    }
    group.finish();
}

fn bench_evaluate(c: &mut Criterion) {
    let set = lexicon(&SynthSpec { target_entries: 20_000, paradigms: 24, ..SynthSpec::default() });
    let model = train(&set, &TrainConfig::default()).unwrap().model;
    let records: Vec<TokenRecord> = set
        .entries()
        .iter()
        .cycle()
        .take(200_000)
        .map(|e| {
            let result = model.lemmatize(&e.form, &e.tag);
            TokenRecord {
                form: e.form.clone(),
                gold_tag: e.tag.clone(),
                auto_tag: None,
                gold_lemma: e.lemma.clone(),
                predicted_lemma: result.lemma,
                provenance: Some(result.provenance),
            }
        })
        .collect();

    let mut group = c.benchmark_group("evaluate");
    group.throughput(Throughput::Elements(records.len() as u64));
    for (name, mode) in modes() {
        group.bench_function(BenchmarkId::new(name, records.len()), |b| {
            b.iter(|| evaluate_with(&records, mode).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_train, bench_lemmatize, bench_evaluate);
criterion_main!(benches);
