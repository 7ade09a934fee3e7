use criterion::{criterion_group, criterion_main, Criterion};
use mirnet_bench::synth_batch;
use mirnet_core::model::forward;
use mirnet_core::trainer::{train_step, AdamConfig, AdamState};
use mirnet_core::{init_model, Architecture, Mode};
use std::hint::black_box;

fn network(c: &mut Criterion) {
    let (batch, labels) = synth_batch(32);
    let params = init_model(Architecture::default(), 0).unwrap();

    c.bench_function("forward_infer_b32", |b| {
        b.iter(|| forward(&params, black_box(&batch), Mode::Infer, None).unwrap())
    });
    c.bench_function("forward_backward_b32", |b| {
        b.iter(|| {
            forward(&params, black_box(&batch), Mode::Train, Some(&labels))
                .unwrap()
                .gradients()
                .unwrap()
        })
    });
    c.bench_function("train_step_b32", |b| {
        let mut p = params.clone();
        let mut opt = AdamState::new(AdamConfig::default(), p.trainables());
        b.iter(|| train_step(&mut p, &mut opt, black_box(&batch), &labels).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = network
}
criterion_main!(benches);
