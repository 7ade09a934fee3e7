//! PTB diagnostic ECG ingestion: WFDB parsing, decimation, labelling,
//! segmentation and subject-disjoint splits.

mod dataset;
mod label;
mod resample;
mod segment;
mod split;
pub mod wfdb;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result, WfdbError};
use crate::model::ClassLabel;
use crate::tensor::Tensor;

pub use dataset::{decode_dataset, encode_dataset, read_dataset, write_dataset, DATASET_MAGIC, DATASET_VERSION};
pub use label::{label_record, RejectReason};
pub use resample::{downsample_10x, zero_phase_smooth, DECIMATION};
pub use segment::{segment, EcgRecord, LabeledSegment, LEADS, SEGMENT_LEN, STANDARD_LEADS};
pub use split::{make_splits, stratification_warnings, subjects_of, SplitPlan, TEST_FRACTION, VAL_FRACTION};
pub use wfdb::{parse_header, parse_signal, write_header, write_record, WfdbHeader};

/// Native PTB sampling rate.
pub const NATIVE_RATE_HZ: f64 = 1000.0;

/// One line of an index file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordEntry {
    /// Record path without extension.
    pub path: PathBuf,
    /// Parent directory name (`patient001`), or the record name at top level.
    pub subject_id: String,
    pub record_id: String,
}

/// Reads an index of record paths, one per line, relative to the index's
/// directory. Blank lines and `#` comments are skipped; a trailing `.hea`
/// is optional.
pub fn read_index(index_path: impl AsRef<Path>) -> Result<Vec<RecordEntry>> {
    let index_path = index_path.as_ref();
    let text = fs::read_to_string(index_path).map_err(|e| Error::io(index_path, e))?;
    let root = index_path.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let rel = line.strip_suffix(".hea").unwrap_or(line);
            let rel_path = Path::new(rel);
            let record_id = rel_path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| rel.to_string());
            let subject_id = rel_path
                .parent()
                .and_then(|p| p.file_name())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| record_id.clone());
            RecordEntry {
                path: root.join(rel_path),
                subject_id,
                record_id,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rejection {
    Diagnosis(RejectReason),
    SamplingRate(f64),
    MissingLead(String),
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rejection::Diagnosis(r) => write!(f, "{r}"),
            Rejection::SamplingRate(hz) => write!(f, "sampling rate {hz} Hz (need {NATIVE_RATE_HZ})"),
            Rejection::MissingLead(l) => write!(f, "missing lead {l}"),
        }
    }
}

/// The 12 standard leads of a record in millivolts at the native rate,
/// `[N, 12]`, reading whichever signal files hold them.
pub fn read_standard_leads(header: &WfdbHeader, dir: &Path) -> Result<Tensor> {
    let idx: Vec<usize> = STANDARD_LEADS
        .iter()
        .map(|l| header.signal_index(l).ok_or_else(|| WfdbError::MissingLead(l.to_string())))
        .collect::<Result<_, _>>()?;
    let mut files: Vec<&str> = idx.iter().map(|&i| header.signals[i].file_name.as_str()).collect();
    files.sort();
    files.dedup();

    let mut columns: Vec<Option<Vec<f64>>> = vec![None; LEADS];
    for file in files {
        let path = dir.join(file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let (signals, mv) = wfdb::parse_signal_file(&bytes, header, file)?;
        let width = signals.len();
        for (col, sig) in signals.iter().enumerate() {
            if let Some(lead) = idx.iter().position(|i| i == sig) {
                columns[lead] = Some(mv.data().iter().skip(col).step_by(width).copied().collect());
            }
        }
    }
    let columns: Vec<Vec<f64>> = columns.into_iter().map(|c| c.expect("every lead read")).collect();
    let n = columns.iter().map(Vec::len).min().unwrap_or(0);
    if n == 0 {
        return Err(Error::EmptyData(format!("record {} has no samples", header.record_name)));
    }
    let mut data = Vec::with_capacity(n * LEADS);
    for t in 0..n {
        data.extend(columns.iter().map(|c| c[t]));
    }
    Tensor::new(&[n, LEADS], data)
}

/// Parses, labels and decimates one record. Malformed files are errors;
/// records outside the task are `Ok(Err(rejection))`.
pub fn load_record(entry: &RecordEntry) -> Result<std::result::Result<EcgRecord, Rejection>> {
    let hea = entry.path.with_extension("hea");
    let bytes = fs::read(&hea).map_err(|e| Error::io(&hea, e))?;
    let header = parse_header(&bytes)?;
    let label = match label_record(&header) {
        Ok(l) => l,
        Err(r) => return Ok(Err(Rejection::Diagnosis(r))),
    };
    if header.sampling_frequency != NATIVE_RATE_HZ {
        return Ok(Err(Rejection::SamplingRate(header.sampling_frequency)));
    }
    if let Some(l) = STANDARD_LEADS.iter().find(|l| header.signal_index(l).is_none()) {
        return Ok(Err(Rejection::MissingLead(l.to_string())));
    }
    let dir = hea.parent().unwrap_or(Path::new(""));
    let native = read_standard_leads(&header, dir)?;
    Ok(Ok(EcgRecord {
        subject_id: entry.subject_id.clone(),
        record_id: entry.record_id.clone(),
        signal: downsample_10x(&native)?,
        label,
    }))
}

#[derive(Clone, Debug, Default)]
pub struct IngestSummary {
    pub segments: Vec<LabeledSegment>,
    /// `(record, label, segment count)`
    pub accepted: Vec<(String, ClassLabel, usize)>,
    pub rejected: Vec<(String, Rejection)>,
}

impl IngestSummary {
    /// Accepted subjects per class, indexed by class.
    pub fn subjects_per_class(&self) -> [usize; ClassLabel::COUNT] {
        let mut out = [0; ClassLabel::COUNT];
        for (_, c) in subjects_of(&self.segments) {
            out[c.index()] += 1;
        }
        out
    }
}

/// Runs every record of an index through [`load_record`] and [`segment`],
/// in index order.
pub fn ingest_index(index_path: impl AsRef<Path>) -> Result<IngestSummary> {
    let mut summary = IngestSummary::default();
    for entry in read_index(index_path)? {
        let name = format!("{}/{}", entry.subject_id, entry.record_id);
        match load_record(&entry)? {
            Ok(record) => {
                let segs = segment(&record);
                summary.accepted.push((name, record.label, segs.len()));
                summary.segments.extend(segs);
            }
            Err(reason) => summary.rejected.push((name, reason)),
        }
    }
    Ok(summary)
}
