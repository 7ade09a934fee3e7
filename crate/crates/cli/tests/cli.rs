use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mirnet_core::eval::{synth_dataset, synth_dataset_with_noise};
use mirnet_core::ingest::wfdb::{SignalSpec, WfdbHeader};
use mirnet_core::ingest::{read_dataset, write_dataset, write_record, LabeledSegment, LEADS, SEGMENT_LEN};
use mirnet_core::model::{load_weights, save_weights};
use mirnet_core::{init_model, Architecture, ClassLabel, Tensor};

fn mirnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const LEAD_NAMES: [&str; 15] = [
    "i", "ii", "iii", "avr", "avl", "avf", "v1", "v2", "v3", "v4", "v5", "v6", "vx", "vy", "vz",
];

/// PTB-style record: 12 leads in `.dat`, Frank leads in `.xyz`.
fn write_ptb(dir: &Path, name: &str, frames: usize, fs_hz: f64, comments: &[&str]) {
    fs::create_dir_all(dir).unwrap();
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
        record_name: name.into(),
        num_signals: 15,
        sampling_frequency: fs_hz,
        num_samples: Some(frames),
        signals,
        comments: comments.iter().map(|c| format!(" {c}")).collect(),
    };
    let adc: Vec<i16> = (0..frames * 15)
        .map(|i| {
            let (t, s) = (i / 15, i % 15);
            (1000.0 * (2.0 * PI * (1 + s % 4) as f64 * t as f64 / 1000.0).sin()) as i16
        })
        .collect();
    write_record(dir, &header, &adc).unwrap();
}

const MI_ANTERIOR: [&str; 2] = [
    "Reason for admission: Myocardial infarction",
    "Acute infarction (localization): anterior",
];
const HEALTHY: [&str; 1] = ["Reason for admission: Healthy control"];

/// Three accepted records (2 + 1 + 3 segments) and one rejected.
fn corpus(root: &Path) -> PathBuf {
    write_ptb(&root.join("patient001"), "s0001_re", 10_000, 1000.0, &MI_ANTERIOR);
    write_ptb(&root.join("patient002"), "s0002_re", 5_500, 1000.0, &HEALTHY);
    write_ptb(&root.join("patient003"), "s0003_re", 15_000, 1000.0, &HEALTHY);
    write_ptb(&root.join("patient004"), "s0004_re", 5_000, 1000.0, &["Reason for admission: Valvular heart disease"]);
    let index = root.join("RECORDS");
    fs::write(&index, "patient001/s0001_re\npatient002/s0002_re\npatient003/s0003_re\npatient004/s0004_re\n").unwrap();
    index
}

fn synth_file(dir: &Path, name: &str, segments: &[LabeledSegment]) -> PathBuf {
    let path = dir.join(name);
    write_dataset(segments, &path).unwrap();
    path
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn ingest_fixture_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let index = corpus(dir.path());
    let out = dir.path().join("out");
    let ds = dir.path().join("ptb.mids");
    let o = mirnet(&["ingest", "--index", p(&index), "--dataset", p(&ds), "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("accepted 3 records, rejected 1"), "{text}");
    assert!(text.contains("Valvular heart disease"), "{text}");

    let segs = read_dataset(&ds).unwrap();
    assert_eq!(segs.len(), 6);
    assert_eq!(segs.iter().filter(|s| s.label == ClassLabel::Anterior).count(), 2);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ingest_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["segments"], 6);
    assert_eq!(summary["config"]["epochs"], 20);

    let first = fs::read(&ds).unwrap();
    assert!(mirnet(&["ingest", "--index", p(&index), "--dataset", p(&ds), "--out-dir", p(&out)]).status.success());
    assert_eq!(fs::read(&ds).unwrap(), first);
}

#[test]
fn ingest_with_nothing_accepted_is_empty_data() {
    let dir = tempfile::tempdir().unwrap();
    write_ptb(&dir.path().join("patient009"), "s0009_re", 5_000, 1000.0, &["Reason for admission: Cardiomyopathy"]);
    let index = dir.path().join("RECORDS");
    fs::write(&index, "patient009/s0009_re\n").unwrap();
    let o = mirnet(&["ingest", "--index", p(&index), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn train_smoke_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synth_file(dir.path(), "s.mids", &synth_dataset(3, 1));
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = mirnet(&["train", "--dataset", p(&ds), "--epochs", "2", "--seed", "5", "--out-dir", p(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let wa = fs::read(a.join("weights.mirn")).unwrap();
    assert_eq!(wa, fs::read(b.join("weights.mirn")).unwrap());
    load_weights(a.join("weights.mirn"), Architecture::default()).unwrap();

    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["history"].as_array().unwrap().len(), 2);
    assert_eq!(metrics["config"]["seed"], 5);
    assert_eq!(metrics["config"]["batch_size"], 32);
}

#[test]
fn default_train_runs_twenty_epochs_and_flags_beat_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synth_file(dir.path(), "s.mids", &synth_dataset(1, 2));
    let out = dir.path().join("default");
    let o = mirnet(&["train", "--dataset", p(&ds), "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["history"].as_array().unwrap().len(), 20);

    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("# smoke\nepochs = 3\nlr = 0.002\ndataset = {}\n", ds.display())).unwrap();
    let out = dir.path().join("cfg");
    let o = mirnet(&["train", "--config", p(&cfg), "--epochs", "1", "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["history"].as_array().unwrap().len(), 1);
    assert_eq!(m["config"]["epochs"], 1);
    assert_eq!(m["config"]["lr"], 0.002);
}

#[test]
fn xval_writes_confusions_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synth_file(dir.path(), "s.mids", &synth_dataset(3, 4));
    let out = dir.path().join("xv");
    let o = mirnet(&["xval", "--dataset", p(&ds), "--epochs", "1", "--seed", "3", "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 1..=5 {
        let csv = fs::read_to_string(out.join(format!("fold{k}_confusion.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 8);
        assert!(csv.starts_with("true\\predicted,healthy,anterior"));
    }
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["folds"].as_array().unwrap().len(), 5);
    assert_eq!(s["seed"], 3);
    assert_eq!(s["config"]["epochs"], 1);
    assert!(s["mean_accuracy"].is_number());
}

#[test]
fn predict_fresh_model_on_zero_signal() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.mirn");
    save_weights(&init_model(Architecture::default(), 0).unwrap(), &w).unwrap();
    let zero = LabeledSegment {
        window: Tensor::zeros(&[SEGMENT_LEN, LEADS]),
        label: ClassLabel::Healthy,
        subject_id: "flat".into(),
    };
    let ds = synth_file(dir.path(), "z.mids", &[zero.clone(), zero]);
    let o = mirnet(&["predict", "--weights", p(&w), "--dataset", p(&ds)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("subject,segment,predicted,healthy,anterior,"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0].as_str(), rows[0][1].as_str(), rows[1][1].as_str()), ("flat", "0", "1"));
    for row in rows {
        let probs: Vec<f64> = row[3..].iter().map(|v| v.parse().unwrap()).collect();
        assert_eq!(probs.len(), 7);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert!(probs.iter().all(|v| (v - 1.0 / 7.0).abs() <= 0.15));
        assert!(row[3..].iter().all(|v| v.split('.').nth(1).unwrap().len() == 12));
    }
}

#[test]
fn trained_weights_classify_noiseless_templates() {
    let dir = tempfile::tempdir().unwrap();
    let train = synth_file(dir.path(), "train.mids", &synth_dataset(50, 2024));
    let templates = synth_file(dir.path(), "templates.mids", &synth_dataset_with_noise(1, 0.0, 0));
    let out = dir.path().join("run");
    let o = mirnet(&["train", "--dataset", p(&train), "--seed", "2024", "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = mirnet(&["predict", "--weights", p(&out.join("weights.mirn")), "--dataset", p(&templates)]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 7);
    for (c, row) in ClassLabel::ALL.iter().zip(rows) {
        assert_eq!(row[2], c.name());
    }
}

#[test]
fn predict_single_record() {
    let dir = tempfile::tempdir().unwrap();
    // No diagnosis comment: prediction does not need one.
    write_ptb(dir.path(), "s0100_lr", 12_000, 1000.0, &[]);
    let w = dir.path().join("w.mirn");
    save_weights(&init_model(Architecture::default(), 1).unwrap(), &w).unwrap();
    let rec = dir.path().join("s0100_lr.hea");
    let o = mirnet(&["predict", "--weights", p(&w), "--record", p(&rec)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[0] == "s0100_lr"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synth_file(dir.path(), "s.mids", &synth_dataset(1, 2));

    // Configuration.
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "epochs = 2\nwidth = 3\n").unwrap();
    assert_eq!(mirnet(&["train", "--config", p(&cfg), "--dataset", p(&ds)]).status.code(), Some(2));
    assert_eq!(mirnet(&["train", "--dataset", p(&ds), "--epochs", "0"]).status.code(), Some(2));
    assert_eq!(mirnet(&["xval"]).status.code(), Some(2));
    assert_eq!(mirnet(&["train", "--no-such-flag"]).status.code(), Some(2));

    // I/O.
    let missing = dir.path().join("missing.mids");
    assert_eq!(mirnet(&["xval", "--dataset", p(&missing)]).status.code(), Some(1));

    // Parse.
    let junk = dir.path().join("junk.mids");
    fs::write(&junk, b"not a dataset").unwrap();
    assert_eq!(mirnet(&["xval", "--dataset", p(&junk)]).status.code(), Some(3));
    let bad_hea = dir.path().join("bad.hea");
    fs::write(&bad_hea, "bad 1 1000 10\nbad.dat 212 200 12 0 0 0 0 i\n").unwrap();
    let w = dir.path().join("w.mirn");
    save_weights(&init_model(Architecture::default(), 0).unwrap(), &w).unwrap();
    assert_eq!(mirnet(&["predict", "--weights", p(&w), "--record", p(&bad_hea)]).status.code(), Some(3));

    // Empty data.
    let empty = synth_file(dir.path(), "empty.mids", &[]);
    assert_eq!(mirnet(&["train", "--dataset", p(&empty)]).status.code(), Some(4));
}
