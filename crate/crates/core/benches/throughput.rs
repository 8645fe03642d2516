// Sequential versus parallel page scoring and mining. Built without the
// `parallel` feature both variants take the sequential path, which makes the
// pair a quick check of the pool overhead.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use layoutmetrics::exec::default_workers;
use layoutmetrics::pipeline::{evaluate_inputs, ManifestEntry, PageInput};
use layoutmetrics::synth::synth_corpus;
use layoutmetrics::{
    levenshtein, mine_hard_samples, serialize_page, EvalConfig, MiningConfig, MiningRecord,
    PageDocument,
};

const PAGES: usize = 64;

fn parallel_workers() -> usize {
    default_workers().max(4)
}

/// Prediction with shuffled blocks and clipped text, so matching and the
/// edit distances do real work.
fn degrade(doc: &PageDocument, rng: &mut ChaCha8Rng) -> PageDocument {
    let mut pred = doc.clone();
    pred.blocks.shuffle(rng);
    for b in pred.blocks.iter_mut().step_by(2) {
        let n = b.content.chars().count();
        b.content = b.content.chars().take(n * 3 / 4).collect();
    }
    pred
}

fn fixtures() -> (Vec<PageInput>, Vec<MiningRecord>) {
    let docs = synth_corpus(PAGES, 17);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut inputs = Vec::new();
    let mut records = Vec::new();
    for d in &docs {
        let gt_html = serialize_page(d);
        let pred_html = serialize_page(&degrade(d, &mut rng));
        inputs.push(PageInput {
            entry: ManifestEntry {
                page_id: d.page_id.clone(),
                language: d.language,
                doc_category: d.doc_category.clone(),
            },
            gt_html: gt_html.clone(),
            pred_html: Some(pred_html.clone()),
        });
        records.push(MiningRecord {
            sample_id: d.page_id.clone(),
            pred_html,
            gt_html,
        });
    }
    (inputs, records)
}

fn bench_pipeline(c: &mut Criterion) {
    let (inputs, records) = fixtures();
    let cfg = EvalConfig::default();
    let mining = MiningConfig::default();
    let variants = [("sequential", 1), ("parallel", parallel_workers())];

    let mut group = c.benchmark_group("evaluate");
    group.throughput(Throughput::Elements(PAGES as u64));
    group.sample_size(20);
    for (name, workers) in variants {
        group.bench_with_input(BenchmarkId::from_parameter(name), &workers, |b, &w| {
            b.iter(|| evaluate_inputs(black_box(&inputs), &cfg, "bench", w).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("mine");
    group.throughput(Throughput::Elements(PAGES as u64));
    group.sample_size(20);
    for (name, workers) in variants {
        group.bench_with_input(BenchmarkId::from_parameter(name), &workers, |b, &w| {
            b.iter(|| mine_hard_samples(black_box(&records), &mining, &cfg.normalize, w))
        });
    }
    group.finish();
}

fn bench_levenshtein(c: &mut Criterion) {
    let mut group = c.benchmark_group("levenshtein");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let alphabet: Vec<char> = "abcdefghij 文字表格公式".chars().collect();
    for len in [64usize, 1024, 8192] {
        let a: String = (0..len)
            .map(|_| *alphabet.choose(&mut rng).unwrap())
            .collect();
        let b: String = (0..len)
            .map(|_| *alphabet.choose(&mut rng).unwrap())
            .collect();
        group.throughput(Throughput::Elements(len as u64));
        group.bench_with_input(
            BenchmarkId::from_parameter(len),
            &(a, b),
            |bench, (a, b)| bench.iter(|| levenshtein(black_box(a), black_box(b))),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_pipeline, bench_levenshtein);
criterion_main!(benches);
