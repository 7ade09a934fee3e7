use crate::model::ClassLabel;
use crate::tensor::Tensor;

/// Samples per segment: 5 s at 100 Hz.
pub const SEGMENT_LEN: usize = 500;
pub const LEADS: usize = 12;

/// Standard 12-lead names in header order.
pub const STANDARD_LEADS: [&str; LEADS] = [
    "i", "ii", "iii", "avr", "avl", "avf", "v1", "v2", "v3", "v4", "v5", "v6",
];

/// One record after decimation, restricted to the standard leads.
#[derive(Clone, Debug, PartialEq)]
pub struct EcgRecord {
    pub subject_id: String,
    pub record_id: String,
    /// `[N, 12]` millivolts at 100 Hz.
    pub signal: Tensor,
    pub label: ClassLabel,
}

/// A `[500, 12]` millivolt window.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSegment {
    pub window: Tensor,
    pub label: ClassLabel,
    pub subject_id: String,
}

/// Consecutive non-overlapping windows from sample 0; a trailing remainder
/// shorter than one window is dropped.
pub fn segment(record: &EcgRecord) -> Vec<LabeledSegment> {
    let leads = record.signal.shape().get(1).copied().unwrap_or(1);
    let n = record.signal.shape()[0];
    let stride = SEGMENT_LEN * leads;
    (0..n / SEGMENT_LEN)
        .map(|k| LabeledSegment {
            window: Tensor::new(
                &[SEGMENT_LEN, leads],
                record.signal.data()[k * stride..(k + 1) * stride].to_vec(),
            )
            .expect("window shape"),
            label: record.label,
            subject_id: record.subject_id.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize) -> EcgRecord {
        EcgRecord {
            subject_id: "patient007".into(),
            record_id: "s0001_re".into(),
            signal: Tensor::from_fn(&[n, LEADS], |i| i as f64),
            label: ClassLabel::Inferior,
        }
    }

    #[test]
    fn counts() {
        assert_eq!(segment(&record(11_520)).len(), 23);
        assert_eq!(segment(&record(499)).len(), 0);
        assert_eq!(segment(&record(500)).len(), 1);
    }

    #[test]
    fn windows_are_contiguous_and_labelled() {
        let segs = segment(&record(1200));
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[1].window.at(&[0, 0]), (500 * LEADS) as f64);
        for s in &segs {
            assert_eq!(s.window.shape(), &[500, 12]);
            assert_eq!(s.subject_id, "patient007");
            assert_eq!(s.label, ClassLabel::Inferior);
        }
    }
}
