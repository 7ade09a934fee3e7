//! Helpers shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

pub mod grad;

use mirnet_core::ingest::wfdb::{SignalSpec, WfdbHeader};
use mirnet_core::model::DilationSchedule;
use mirnet_core::ops::Conv1dSpec;
use mirnet_core::seed;
use mirnet_core::{Architecture, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    seed::rng(seed)
}

/// Uniform entries in `[-scale, scale]`.
pub fn uniform(rng: &mut impl Rng, shape: &[usize], scale: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(-scale..=scale))
}

/// 40-sample, 3-lead network with every layer kind of the full model.
pub fn tiny_arch() -> Architecture {
    Architecture {
        segment_len: 40,
        leads: 3,
        frontend: Conv1dSpec::new(4, 10, 5).unwrap(),
        channels: 3,
        classes: 4,
        dilations: DilationSchedule::default(),
    }
}

/// Five nested loops over output position, filter and kernel tap; taps that
/// fall outside the input contribute nothing.
pub fn naive_conv2d(input: &Tensor, w: &Tensor, dilation: (usize, usize)) -> Tensor {
    let [h, wd, c] = *input.shape() else { panic!("rank 3 input") };
    let [f, kh, kw, wc] = *w.shape() else { panic!("rank 4 weights") };
    assert_eq!(c, wc);
    let (ph, pw) = ((kh / 2 * dilation.0) as isize, (kw / 2 * dilation.1) as isize);
    let mut out = Tensor::zeros(&[h, wd, f]);
    for y in 0..h {
        for x in 0..wd {
            for o in 0..f {
                let mut acc = 0.0;
                for i in 0..kh {
                    for j in 0..kw {
                        let sy = y as isize + (i * dilation.0) as isize - ph;
                        let sx = x as isize + (j * dilation.1) as isize - pw;
                        if sy < 0 || sx < 0 || sy >= h as isize || sx >= wd as isize {
                            continue;
                        }
                        for ch in 0..c {
                            acc += input.at(&[sy as usize, sx as usize, ch])
                                * w.at(&[o, i, j, ch]);
                        }
                    }
                }
                out.data_mut()[(y * wd + x) * f + o] = acc;
            }
        }
    }
    out
}

const LEAD_NAMES: [&str; 15] = [
    "i", "ii", "iii", "avr", "avl", "avf", "v1", "v2", "v3", "v4", "v5", "v6", "vx", "vy", "vz",
];

/// A random single-file format-16 record: header plus frame-major ADC
/// samples. Optional signal fields are randomly truncated, as real headers
/// are.
pub fn random_record(rng: &mut impl Rng) -> (WfdbHeader, Vec<i16>) {
    let num_signals = rng.random_range(1..=15);
    let frames = rng.random_range(1..=300);
    let record_name = format!("rec{:05}", rng.random_range(0..100_000));
    let file_name = format!("{record_name}.dat");
    let signals = (0..num_signals)
        .map(|i| {
            let depth = rng.random_range(0..=5);
            SignalSpec {
                file_name: file_name.clone(),
                format: 16,
                gain: [200.0, 1000.0, 2000.0, 123.25][rng.random_range(0..4)],
                baseline: rng.random_range(-500..=500),
                units: rng.random_bool(0.8).then(|| "mV".to_string()),
                adc_resolution: (depth >= 1).then(|| 16),
                adc_zero: if depth >= 2 { rng.random_range(-10..=10) } else { 0 },
                initial_value: (depth >= 3).then(|| rng.random_range(-2000..=2000)),
                checksum: (depth >= 4).then(|| rng.random_range(-32768..=32767)),
                block_size: (depth >= 4).then_some(0),
                description: if depth >= 5 { LEAD_NAMES[i].to_string() } else { String::new() },
            }
        })
        .collect();
    let comments = (0..rng.random_range(0..4))
        .map(|k| format!(" comment {k}: value {}", rng.random_range(0..1000)))
        .collect();
    let header = WfdbHeader {
        record_name,
        num_signals,
        sampling_frequency: [1000.0, 500.0, 250.0][rng.random_range(0..3)],
        num_samples: rng.random_bool(0.9).then_some(frames),
        signals,
        comments,
    };
    let adc = (0..frames * num_signals).map(|_| rng.random()).collect();
    (header, adc)
}

/// PTB layout: 12 standard leads in `<name>.dat`, Frank leads vx/vy/vz in
/// `<name>.xyz`, 1000 Hz, gain 2000 ADC/mV. `lead_value(t, signal)` gives
/// each sample in mV.
pub fn ptb_record(
    name: &str,
    frames: usize,
    fs: f64,
    comments: &[&str],
    lead_value: impl Fn(usize, usize) -> f64,
) -> (WfdbHeader, Vec<i16>) {
    let signals = LEAD_NAMES
        .iter()
        .enumerate()
        .map(|(i, lead)| SignalSpec {
            file_name: format!("{name}.{}", if i < 12 { "dat" } else { "xyz" }),
            format: 16,
            gain: 2000.0,
            baseline: 0,
            units: None,
            adc_resolution: Some(16),
            adc_zero: 0,
            initial_value: Some(0),
            checksum: Some(0),
            block_size: Some(0),
            description: lead.to_string(),
        })
        .collect();
    let header = WfdbHeader {
        record_name: name.to_string(),
        num_signals: 15,
        sampling_frequency: fs,
        num_samples: Some(frames),
        signals,
        comments: comments.iter().map(|c| format!(" {c}")).collect(),
    };
    let adc = (0..frames * 15)
        .map(|i| (lead_value(i / 15, i % 15) * 2000.0).round() as i16)
        .collect();
    (header, adc)
}

pub const MI_INFERIOR: [&str; 2] = [
    "Reason for admission: Myocardial infarction",
    "Acute infarction (localization): inferior",
];
pub const HEALTHY: [&str; 1] = ["Reason for admission: Healthy control"];
