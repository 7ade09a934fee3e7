//! Segment dataset files.
//!
//! Layout (little-endian): magic `MIDS`, version `0x01`, segment count
//! (u32), then per segment: subject id length (u8) and ASCII bytes, label
//! byte, `500 × 12` `f32` millivolts row-major.

use std::fs;
use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::model::io_support::Reader;
use crate::model::ClassLabel;
use crate::tensor::Tensor;

use super::segment::{LabeledSegment, LEADS, SEGMENT_LEN};

pub const DATASET_MAGIC: [u8; 4] = *b"MIDS";
pub const DATASET_VERSION: u8 = 0x01;

pub fn encode_dataset(segments: &[LabeledSegment]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(9 + segments.len() * (SEGMENT_LEN * LEADS * 4 + 16));
    out.extend_from_slice(&DATASET_MAGIC);
    out.push(DATASET_VERSION);
    let count = u32::try_from(segments.len()).map_err(|_| Error::Config("too many segments".into()))?;
    out.extend_from_slice(&count.to_le_bytes());
    for s in segments {
        s.window.expect_shape(&[SEGMENT_LEN, LEADS])?;
        let id = s.subject_id.as_bytes();
        if id.len() > u8::MAX as usize || !s.subject_id.is_ascii() {
            return Err(FormatError::Invalid(format!("subject id `{}` is not short ASCII", s.subject_id)).into());
        }
        out.push(id.len() as u8);
        out.extend_from_slice(id);
        out.push(s.label.index() as u8);
        for v in s.window.data() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Vec<LabeledSegment>> {
    let mut r = Reader::new(bytes);
    r.header(DATASET_MAGIC, DATASET_VERSION)?;
    let count = r.u32("segment count")? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for k in 0..count {
        let what = format!("segment {k}");
        let len = r.u8(&what)? as usize;
        let id = r.take(len, &what)?;
        let subject_id = std::str::from_utf8(id)
            .ok()
            .filter(|s| s.is_ascii())
            .ok_or_else(|| FormatError::Invalid(format!("{what}: subject id is not ASCII")))?
            .to_string();
        let label_byte = r.u8(&what)?;
        let label = ClassLabel::from_index(label_byte as usize)
            .ok_or_else(|| FormatError::Invalid(format!("{what}: label {label_byte}")))?;
        let raw = r.take(SEGMENT_LEN * LEADS * 4, &what)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        out.push(LabeledSegment {
            window: Tensor::new(&[SEGMENT_LEN, LEADS], data)?,
            label,
            subject_id,
        });
    }
    if r.remaining() > 0 {
        return Err(FormatError::TrailingBytes(r.remaining()).into());
    }
    Ok(out)
}

pub fn write_dataset(segments: &[LabeledSegment], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_dataset(segments)?).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<LabeledSegment>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes)
}
