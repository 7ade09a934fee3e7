use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mirnet_bench::filled;
use mirnet_core::ops::{conv1d_forward, conv2d_dilated_backward, conv2d_dilated_forward, Conv1dSpec, Conv2dSpec};
use std::hint::black_box;

fn conv2d(c: &mut Criterion) {
    let x = filled(&[32, 9, 20, 7], 1);
    let w = filled(&[7, 3, 3, 7], 2);
    let up = filled(&[32, 9, 20, 7], 3);
    let mut group = c.benchmark_group("conv2d_b32_9x20x7");
    for d in [1, 4, 16] {
        let spec = Conv2dSpec::square3(7, d);
        group.bench_with_input(BenchmarkId::new("forward", d), &spec, |b, s| {
            b.iter(|| conv2d_dilated_forward(black_box(&x), &w, s).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("backward", d), &spec, |b, s| {
            b.iter(|| conv2d_dilated_backward(black_box(&x), &w, s, &up).unwrap())
        });
    }
    group.finish();
}

fn conv1d(c: &mut Criterion) {
    let x = filled(&[32, 500], 4);
    let w = filled(&[20, 100], 5);
    let spec = Conv1dSpec::default();
    c.bench_function("conv1d_b32_500", |b| b.iter(|| conv1d_forward(black_box(&x), &w, &spec).unwrap()));
}

criterion_group!(benches, conv2d, conv1d);
criterion_main!(benches);
