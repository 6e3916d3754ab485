use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use std::hint::black_box;

use survmine::eval::{evaluate, run_experiment, ExperimentParams};
use survmine::label::label_dataset;
use survmine::preprocess::{run_pipeline, Dataset, PreprocessConfig};
use survmine::schema::parse_file;
use survmine::synth::generate;
use survmine::{
    DecisionTreeModel, ExperimentSpec, GeneratorConfig, LabelMode, LabelingConfig, NaiveBayesModel,
    TreeParams, CLASS_NAMES, FEATURE_NAMES,
};
use survmine_bench::cohort;

const N: usize = 50_000;

fn data_path(c: &mut Criterion) {
    let data = cohort(N, 1);
    let mut g = c.benchmark_group("data");
    g.throughput(Throughput::Elements(N as u64));
    g.sample_size(10);

    let cfg = GeneratorConfig {
        n_records: N,
        ..GeneratorConfig::default()
    };
    g.bench_function("generate", |b| {
        b.iter(|| generate(black_box(&cfg)).unwrap())
    });
    g.bench_function("parse", |b| {
        b.iter(|| parse_file(black_box(data.text.as_bytes()), &data.schema, "bench.dat").unwrap())
    });
    let (raw, _) = parse_file(data.text.as_bytes(), &data.schema, "bench.dat").unwrap();
    g.bench_function("preprocess", |b| {
        b.iter_batched(
            || {
                vec![Dataset {
                    schema: data.schema.clone(),
                    records: raw.clone(),
                }]
            },
            |ds| run_pipeline(&ds, &data.codebook, &PreprocessConfig::default()),
            BatchSize::LargeInput,
        )
    });
    g.bench_function("label", |b| {
        b.iter(|| {
            label_dataset(
                black_box(&data.records),
                &LabelingConfig::default(),
                LabelMode::FiveYear,
            )
        })
    });
    g.finish();
}

fn models(c: &mut Criterion) {
    let data = cohort(N, 2);
    let mut g = c.benchmark_group("models");
    g.throughput(Throughput::Elements(data.labeled.len() as u64));
    g.sample_size(10);

    g.bench_function("naive_bayes_train", |b| {
        b.iter(|| {
            NaiveBayesModel::train(&FEATURE_NAMES, &CLASS_NAMES, black_box(&data.labeled), 1.0)
                .unwrap()
        })
    });
    g.bench_function("tree_train", |b| {
        b.iter(|| {
            DecisionTreeModel::train(
                &FEATURE_NAMES,
                &CLASS_NAMES,
                black_box(&data.labeled),
                &TreeParams::default(),
            )
            .unwrap()
        })
    });
    let nb = NaiveBayesModel::train(&FEATURE_NAMES, &CLASS_NAMES, &data.labeled, 1.0).unwrap();
    let tree = DecisionTreeModel::train(
        &FEATURE_NAMES,
        &CLASS_NAMES,
        &data.labeled,
        &TreeParams::default(),
    )
    .unwrap();
    g.bench_function("naive_bayes_evaluate", |b| {
        b.iter(|| evaluate(&nb, black_box(&data.labeled), "bench", "naive_bayes").unwrap())
    });
    g.bench_function("tree_evaluate", |b| {
        b.iter(|| evaluate(&tree, black_box(&data.labeled), "bench", "j48").unwrap())
    });
    g.bench_function("experiments", |b| {
        b.iter(|| {
            for spec in ExperimentSpec::shipped() {
                run_experiment(&spec, &data.labeled, &ExperimentParams::default()).unwrap();
            }
        })
    });
    g.finish();
}

criterion_group!(benches, data_path, models);
criterion_main!(benches);
