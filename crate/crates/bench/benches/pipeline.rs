//! Pipeline benchmarks at the weekly state-scale problem size
//! (52 places, n = 2704, two years of weeks).

use std::hint::black_box;
use std::time::Duration;

use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, Criterion};
use flowdmd_bench::{dense_square, state_scale_snapshots};
use flowdmd_core::dmd::DmdModel;
use flowdmd_core::linalg::{eig_dense, reduced_svd};

fn bench_fit(c: &mut Criterion) {
    let snapshots = state_scale_snapshots(104);
    let mut group = c.benchmark_group("fit");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    for rank in [10usize, 33] {
        group.bench_function(format!("n2704_m104_r{rank}"), |b| {
            b.iter(|| DmdModel::fit(black_box(&snapshots), rank, 1.0).unwrap())
        });
    }
    group.finish();
}

fn bench_reduced_svd(c: &mut Criterion) {
    let snapshots = state_scale_snapshots(104);
    let x = snapshots.matrix().columns_range(0, 103);
    let mut group = c.benchmark_group("reduced_svd");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    group.bench_function("n2704_cols103_rank10", |b| {
        b.iter(|| reduced_svd(black_box(&x), 10).unwrap())
    });
    group.finish();
}

fn bench_eig_dense(c: &mut Criterion) {
    let a = dense_square(45, 7);
    c.bench_function("eig_dense_45x45", |b| {
        b.iter(|| eig_dense(black_box(&a)).unwrap())
    });
}

fn bench_predict(c: &mut Criterion) {
    let snapshots = state_scale_snapshots(104);
    let model = DmdModel::fit(&snapshots, 10, 1.0).unwrap();
    c.bench_function("predict_n2704_r10", |b| {
        b.iter(|| model.predict(black_box(156.0)).unwrap())
    });
}

fn bench_spectrum(c: &mut Criterion) {
    let snapshots = state_scale_snapshots(52);
    let mut group = c.benchmark_group("spectrum");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    group.bench_function("n2704_m52", |b| {
        b.iter(|| flowdmd_core::spectrum(black_box(&snapshots)).unwrap())
    });
    group.finish();
}

fn bench_ingest(c: &mut Criterion) {
    // One year of dense 52x52 weekly records in the default CSV layout.
    let mut csv = String::from("geoid_o,geoid_d,date_range,visitor_flows\n");
    let start = NaiveDate::from_ymd_opt(2019, 1, 7).unwrap();
    for week in 0..52u64 {
        let date = start + chrono::Days::new(7 * week);
        for o in 1..=52 {
            for d in 1..=52 {
                csv.push_str(&format!("{o:02},{d:02},{date},{}\n", (o * d + week as usize) % 9973));
            }
        }
    }
    let mut group = c.benchmark_group("ingest");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    group.bench_function("parse_and_assemble_52x52x52", |b| {
        b.iter(|| {
            let records = flowdmd_core::parse_flow_csv(
                black_box(csv.as_bytes()),
                &flowdmd_core::ColumnMap::default(),
            )
            .unwrap();
            flowdmd_core::snapshot_from_records(&records).unwrap()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_fit,
    bench_reduced_svd,
    bench_eig_dense,
    bench_predict,
    bench_spectrum,
    bench_ingest
);
criterion_main!(benches);
