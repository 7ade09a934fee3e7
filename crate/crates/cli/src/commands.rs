use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mirnet_core::eval::{self, evaluate, run_cross_validation, CvConfig};
use mirnet_core::ingest::{
    downsample_10x, ingest_index, make_splits, parse_header, read_dataset, read_standard_leads, segment,
    stratification_warnings, subjects_of, write_dataset, EcgRecord, LabeledSegment, NATIVE_RATE_HZ,
};
use mirnet_core::model::{load_weights, save_weights};
use mirnet_core::seed::{self, Purpose};
use mirnet_core::trainer::fit;
use mirnet_core::{init_model, Architecture, ClassLabel, Error};
use serde_json::json;

use crate::config::RunConfig;
use crate::CliError;

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    write_file(path, text)
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Io(cfg.out_dir.clone(), e))?;
    Ok(&cfg.out_dir)
}

fn load_dataset(cfg: &RunConfig) -> Result<Vec<LabeledSegment>> {
    let path = cfg.require(&cfg.dataset, "dataset")?;
    let data = read_dataset(path).with_context(|| format!("reading dataset {}", path.display()))?;
    if data.is_empty() {
        return Err(Error::EmptyData(format!("{} holds no segments", path.display())).into());
    }
    Ok(data)
}

pub fn ingest(cfg: &RunConfig) -> Result<()> {
    let index = cfg.require(&cfg.index, "index")?;
    let dataset = cfg
        .dataset
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join("dataset.mids"));
    let summary = ingest_index(index)?;

    println!("accepted {} records, rejected {}", summary.accepted.len(), summary.rejected.len());
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for (_, r) in &summary.rejected {
        *reasons.entry(r.to_string()).or_default() += 1;
    }
    for (reason, n) in &reasons {
        println!("  rejected {n:>4}  {reason}");
    }
    if summary.accepted.is_empty() {
        return Err(Error::EmptyData(format!("no record of {} was accepted", index.display())).into());
    }
    let per_class = summary.subjects_per_class();
    for c in ClassLabel::ALL {
        println!("  subjects {:>4}  {}", per_class[c.index()], c.name());
    }
    for w in stratification_warnings(&subjects_of(&summary.segments), cfg.folds) {
        log::warn!("{w}");
    }

    if let Some(parent) = dataset.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io(parent.to_path_buf(), e))?;
    }
    write_dataset(&summary.segments, &dataset)?;
    println!("{} segments written to {}", summary.segments.len(), dataset.display());

    let report = json!({
        "config": cfg.echo(),
        "dataset": dataset,
        "segments": summary.segments.len(),
        "subjects_per_class": ClassLabel::ALL.iter().map(|c| (c.name(), per_class[c.index()])).collect::<BTreeMap<_, _>>(),
        "accepted": summary.accepted.iter().map(|(r, c, n)| json!({"record": r, "class": c.name(), "segments": n})).collect::<Vec<_>>(),
        "rejected": summary.rejected.iter().map(|(r, why)| json!({"record": r, "reason": why.to_string()})).collect::<Vec<_>>(),
    });
    write_json(&out_dir(cfg)?.join("ingest_summary.json"), &report)?;
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let data = load_dataset(cfg)?;
    let plans = make_splits(&subjects_of(&data), cfg.folds, cfg.seed)?;
    let plan = &plans[cfg.fold];
    let (train, val, test) = plan.partition(&data);
    // Same seeds as fold `cfg.fold` of `xval`.
    let init_seed = seed::derive(cfg.seed, Purpose::Init, cfg.fold as u64);
    let mut train_cfg = cfg.train_config();
    train_cfg.seed = seed::derive(cfg.seed, Purpose::Shuffle, cfg.fold as u64);

    log::info!(
        "fold {}: {} train / {} val / {} test segments",
        cfg.fold,
        train.len(),
        val.len(),
        test.len()
    );
    let (model, history) = fit(init_model(Architecture::default(), init_seed)?, &train, &val, &train_cfg)?;
    let test_eval = if test.is_empty() { None } else { Some(evaluate(&model, &test)?) };

    let dir = out_dir(cfg)?;
    let weights = cfg.weights.clone().unwrap_or_else(|| dir.join("weights.mirn"));
    save_weights(&model, &weights)?;
    for e in &history {
        println!("epoch {:>3}  loss {:.6}  val {}", e.epoch, e.train_loss, fmt_acc(e.val_accuracy));
    }
    println!("test accuracy {}", fmt_acc(test_eval.as_ref().map(|e| e.accuracy)));
    println!("weights written to {}", weights.display());

    let metrics = json!({
        "config": cfg.echo(),
        "fold": cfg.fold,
        "init_seed": init_seed,
        "train_segments": train.len(),
        "val_segments": val.len(),
        "test_segments": test.len(),
        "history": history,
        "test_accuracy": test_eval.as_ref().map(|e| e.accuracy),
        "test_confusion": test_eval.as_ref().map(|e| e.confusion.counts),
        "weights": weights,
    });
    write_json(&dir.join("metrics.json"), &metrics)?;
    Ok(())
}

fn fmt_acc(a: Option<f64>) -> String {
    a.map_or_else(|| "-".into(), |v| format!("{v:.2}%"))
}

pub fn xval(cfg: &RunConfig) -> Result<()> {
    let data = load_dataset(cfg)?;
    let cv = CvConfig {
        folds: cfg.folds,
        train: cfg.train_config(),
        arch: Architecture::default(),
    };
    let report = run_cross_validation(&data, &cv, cfg.seed)?;
    let dir = out_dir(cfg)?;
    for f in &report.folds {
        write_file(&dir.join(format!("fold{}_confusion.csv", f.fold + 1)), f.confusion.to_csv())?;
        println!("fold {}  accuracy {:.2}%  ({} test segments)", f.fold + 1, f.accuracy, f.test_segments);
    }
    match report.summary.ci95_half_width {
        Some(h) => println!("mean {:.2}% +/- {h:.2} (95% t-interval)", report.summary.mean_accuracy),
        None => println!("mean {:.2}%", report.summary.mean_accuracy),
    }
    write_json(&dir.join("summary.json"), &report.summary_json(cfg.echo()))?;
    Ok(())
}

/// Reads a single record for inference: the 12 standard leads, decimated
/// and cut into windows. No diagnosis is required.
fn record_segments(path: &Path) -> Result<Vec<LabeledSegment>> {
    let base: PathBuf = if path.extension().is_some_and(|e| e == "hea") {
        path.with_extension("")
    } else {
        path.to_path_buf()
    };
    let hea = base.with_extension("hea");
    let bytes = std::fs::read(&hea).map_err(|e| CliError::Io(hea.clone(), e))?;
    let header = parse_header(&bytes).map_err(Error::from)?;
    if header.sampling_frequency != NATIVE_RATE_HZ {
        return Err(CliError::Input(format!(
            "{} is sampled at {} Hz, expected {NATIVE_RATE_HZ}",
            hea.display(),
            header.sampling_frequency
        ))
        .into());
    }
    let dir = hea.parent().unwrap_or(Path::new(""));
    let native = read_standard_leads(&header, dir)?;
    let record = EcgRecord {
        subject_id: header.record_name.clone(),
        record_id: header.record_name.clone(),
        signal: downsample_10x(&native)?,
        // Placeholder: prediction ignores labels.
        label: ClassLabel::Healthy,
    };
    let segs = segment(&record);
    if segs.is_empty() {
        return Err(Error::EmptyData(format!("{} is shorter than one 5 s window", hea.display())).into());
    }
    Ok(segs)
}

pub fn predict(cfg: &RunConfig, out: &mut impl Write) -> Result<()> {
    let weights = cfg.require(&cfg.weights, "weights file")?;
    let model = load_weights(weights, Architecture::default())
        .with_context(|| format!("loading weights {}", weights.display()))?;
    let segments = match (&cfg.record, &cfg.dataset) {
        (Some(r), None) => record_segments(r)?,
        (None, Some(_)) => load_dataset(cfg)?,
        _ => return Err(CliError::Config("give exactly one of --dataset and --record".into()).into()),
    };
    log::info!("config {}", cfg.echo());
    let probs = eval::predict(&model, &segments)?;

    let mut header = String::from("subject,segment,predicted");
    for c in ClassLabel::ALL {
        header.push(',');
        header.push_str(c.name());
    }
    writeln!(out, "{header}")?;
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for (s, p) in segments.iter().zip(&probs) {
        let k = seen.entry(s.subject_id.as_str()).or_default();
        let class = ClassLabel::from_index(eval::argmax(p)).expect("one probability per class");
        let cols: Vec<String> = p.iter().map(|v| format!("{v:.12}")).collect();
        writeln!(out, "{},{},{},{}", s.subject_id, k, class.name(), cols.join(","))?;
        *k += 1;
    }
    Ok(())
}
