//! Timings for the paths that dominate wall-clock time in a labeling run:
//! packet aggregation, network forward/backward passes, boundary
//! application with metrics, and standardization.
//!
//! Run with `cargo bench -p falconc-bench`; add `-- --test` for a quick
//! compile-and-run sanity pass without full sampling.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use falconc_bench::{deployed_network, synthetic_matrix, synthetic_packets};
use falconc_core::{
    aggregate_packets, backward, calibrate_refined, evaluate_outcomes, fit_standardizer,
    reconstruction_error, seeded_rng, standardize, FlowClass, LabelOutcome,
};
use rand::Rng;

/// Representative width of an encoded flow row once categorical columns
/// expand into indicators.
const FLOW_WIDTH: usize = 151;

fn packet_aggregation(c: &mut Criterion) {
    let packets = synthetic_packets(10_000);
    c.bench_function("aggregate_10k_packets", |b| {
        b.iter(|| aggregate_packets(black_box(&packets), black_box(120.0)).unwrap())
    });
}

fn network_passes(c: &mut Criterion) {
    let params = deployed_network(FLOW_WIDTH);
    let single = synthetic_matrix(1, FLOW_WIDTH, 11);
    let batch = synthetic_matrix(64, FLOW_WIDTH, 12);

    c.bench_function("score_one_flow", |b| {
        b.iter(|| reconstruction_error(black_box(&params), black_box(&single.rows[0])).unwrap())
    });
    c.bench_function("gradient_batch_64", |b| {
        b.iter(|| backward(black_box(&params), black_box(&batch.rows)).unwrap())
    });
}

fn boundary_application(c: &mut Criterion) {
    // Calibration input: a benign error mass below the cutoff plus one
    // tight legitimate cluster above it, so the refined boundary carries
    // a second interval and classification walks a realistic list.
    let mut rng = seeded_rng(7);
    let mut samples: Vec<(f64, FlowClass)> = (0..400)
        .map(|_| (rng.random_range(0.0..0.55), FlowClass::Benign))
        .collect();
    samples.extend((0..25).map(|i| (0.8 + i as f64 * 0.002, FlowClass::Benign)));
    let boundary = calibrate_refined(&samples, 0.6, 0.3, 0.05, 0.5).unwrap();

    let errors: Vec<f64> = (0..50_000).map(|_| rng.random_range(0.0..2.0)).collect();
    c.bench_function("classify_50k_errors", |b| {
        b.iter(|| {
            errors
                .iter()
                .map(|&e| boundary.classify(black_box(e)).unwrap())
                .filter(|v| matches!(v, falconc_core::Verdict::Malicious))
                .count()
        })
    });

    let outcomes: Vec<LabelOutcome> = errors
        .iter()
        .enumerate()
        .map(|(i, &e)| LabelOutcome {
            flow_id: format!("flow-{i}"),
            error: e,
            predicted: boundary.classify(e).unwrap(),
            truth: Some(match i % 3 {
                0 => FlowClass::Benign,
                1 => FlowClass::Dos,
                _ => FlowClass::Recon,
            }),
        })
        .collect();
    c.bench_function("evaluate_50k_outcomes", |b| {
        b.iter(|| evaluate_outcomes(black_box(&outcomes)).unwrap())
    });
}

fn standardization(c: &mut Criterion) {
    let matrix = synthetic_matrix(5_000, FLOW_WIDTH, 13);
    let fitted = fit_standardizer(&matrix).unwrap();

    c.bench_function("fit_standardizer_5000x151", |b| {
        b.iter(|| fit_standardizer(black_box(&matrix)).unwrap())
    });
    c.bench_function("standardize_5000x151", |b| {
        b.iter(|| standardize(black_box(&fitted), black_box(&matrix)).unwrap())
    });
}

criterion_group!(
    benches,
    packet_aggregation,
    network_passes,
    boundary_application,
    standardization
);
criterion_main!(benches);
