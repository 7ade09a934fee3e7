//! WFDB header (`.hea`) and format-16 signal (`.dat`) reading and writing.

use std::path::Path;

use crate::error::{Error, Result, WfdbError};
use crate::tensor::Tensor;

/// One signal line of a header.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: u32,
    /// ADC units per physical unit.
    pub gain: f64,
    pub baseline: i32,
    pub units: Option<String>,
    pub adc_resolution: Option<u32>,
    pub adc_zero: i32,
    pub initial_value: Option<i32>,
    pub checksum: Option<i32>,
    pub block_size: Option<u32>,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WfdbHeader {
    pub record_name: String,
    pub num_signals: usize,
    pub sampling_frequency: f64,
    pub num_samples: Option<usize>,
    pub signals: Vec<SignalSpec>,
    /// Text of each `#` line with the leading `#` removed.
    pub comments: Vec<String>,
}

const DEFAULT_GAIN: f64 = 200.0;
const DEFAULT_FREQUENCY: f64 = 250.0;

impl WfdbHeader {
    /// Index of the signal whose description matches `name` (case-insensitive).
    pub fn signal_index(&self, name: &str) -> Option<usize> {
        self.signals
            .iter()
            .position(|s| s.description.trim().eq_ignore_ascii_case(name))
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str, signal: bool) -> Result<T, WfdbError> {
    tok.parse().map_err(|_| {
        let reason = format!("invalid {what} `{tok}`");
        if signal {
            WfdbError::MalformedSignalLine { line, reason }
        } else {
            WfdbError::MalformedRecordLine { line, reason }
        }
    })
}

fn parse_record_line(text: &str, line: usize) -> Result<(String, usize, f64, Option<usize>), WfdbError> {
    let mut toks = text.split_whitespace();
    let name = toks.next().ok_or(WfdbError::MalformedRecordLine {
        line,
        reason: "missing record name".into(),
    })?;
    if name.contains('/') {
        return Err(WfdbError::MalformedRecordLine {
            line,
            reason: "multi-segment records are not supported".into(),
        });
    }
    let nsig = toks.next().ok_or(WfdbError::MalformedRecordLine {
        line,
        reason: "missing signal count".into(),
    })?;
    let nsig: usize = parse_num(nsig, line, "signal count", false)?;
    let fs = match toks.next() {
        None => DEFAULT_FREQUENCY,
        Some(tok) => {
            let head = tok.split(['/', '(']).next().unwrap_or(tok);
            parse_num(head, line, "sampling frequency", false)?
        }
    };
    let nsamp = toks
        .next()
        .map(|t| parse_num(t, line, "sample count", false))
        .transpose()?;
    Ok((name.to_string(), nsig, fs, nsamp))
}

fn leading_digits(tok: &str) -> &str {
    let end = tok.find(|c: char| !c.is_ascii_digit()).unwrap_or(tok.len());
    &tok[..end]
}

fn parse_signal_line(text: &str, line: usize) -> Result<SignalSpec, WfdbError> {
    let bad = |reason: &str| WfdbError::MalformedSignalLine {
        line,
        reason: reason.to_string(),
    };
    let mut rest = text.trim_start();
    let mut fields: Vec<&str> = Vec::with_capacity(8);
    // Eight positional fields; whatever follows is the description.
    while fields.len() < 8 {
        let t = rest.trim_start();
        if t.is_empty() {
            break;
        }
        let end = t.find(char::is_whitespace).unwrap_or(t.len());
        fields.push(&t[..end]);
        rest = &t[end..];
    }
    let description = rest.trim().to_string();
    if fields.len() < 2 {
        return Err(bad("expected at least file name and format"));
    }
    let file_name = fields[0].to_string();
    let fmt_digits = leading_digits(fields[1]);
    if fmt_digits.is_empty() {
        return Err(bad(&format!("invalid format `{}`", fields[1])));
    }
    let format: u32 = parse_num(fmt_digits, line, "format", true)?;
    if format != 16 {
        return Err(WfdbError::UnsupportedFormat { line, format });
    }

    let (mut gain, mut baseline, mut units) = (DEFAULT_GAIN, None, None);
    if let Some(g) = fields.get(2) {
        let (head, unit) = match g.split_once('/') {
            Some((h, u)) => (h, Some(u.to_string())),
            None => (*g, None),
        };
        units = unit;
        let gain_txt = match head.split_once('(') {
            Some((gv, b)) => {
                let b = b.strip_suffix(')').ok_or_else(|| bad(&format!("unclosed baseline in `{g}`")))?;
                baseline = Some(parse_num::<i32>(b, line, "baseline", true)?);
                gv
            }
            None => head,
        };
        gain = parse_num(gain_txt, line, "gain", true)?;
        if gain == 0.0 {
            gain = DEFAULT_GAIN;
        }
        if !(gain > 0.0) {
            return Err(bad(&format!("gain must be positive, got {gain}")));
        }
    }
    let adc_resolution = fields.get(3).map(|t| parse_num(t, line, "ADC resolution", true)).transpose()?;
    let adc_zero = fields
        .get(4)
        .map(|t| parse_num(t, line, "ADC zero", true))
        .transpose()?
        .unwrap_or(0);
    let initial_value = fields.get(5).map(|t| parse_num(t, line, "initial value", true)).transpose()?;
    let checksum = fields.get(6).map(|t| parse_num(t, line, "checksum", true)).transpose()?;
    let block_size = fields.get(7).map(|t| parse_num(t, line, "block size", true)).transpose()?;

    Ok(SignalSpec {
        file_name,
        format,
        gain,
        baseline: baseline.unwrap_or(adc_zero),
        units,
        adc_resolution,
        adc_zero,
        initial_value,
        checksum,
        block_size,
        description,
    })
}

/// Parses an ASCII header. Errors carry 1-based line numbers.
pub fn parse_header(bytes: &[u8]) -> Result<WfdbHeader, WfdbError> {
    let text = String::from_utf8_lossy(bytes);
    let mut record: Option<(String, usize, f64, Option<usize>)> = None;
    let mut signals = Vec::new();
    let mut comments = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if let Some(c) = raw.trim_start().strip_prefix('#') {
            comments.push(c.to_string());
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        match &record {
            None => record = Some(parse_record_line(trimmed, line)?),
            Some((_, nsig, ..)) if signals.len() < *nsig => signals.push(parse_signal_line(trimmed, line)?),
            Some(_) => {
                return Err(WfdbError::MalformedSignalLine {
                    line,
                    reason: "more signal lines than declared".into(),
                })
            }
        }
    }
    let (record_name, num_signals, sampling_frequency, num_samples) = record.ok_or(WfdbError::Empty)?;
    if signals.len() != num_signals {
        return Err(WfdbError::SignalCountMismatch {
            declared: num_signals,
            found: signals.len(),
        });
    }
    Ok(WfdbHeader {
        record_name,
        num_signals,
        sampling_frequency,
        num_samples,
        signals,
        comments,
    })
}

/// Renders a header that [`parse_header`] reads back to an equal value.
pub fn write_header(h: &WfdbHeader) -> String {
    let mut out = format!("{} {} {}", h.record_name, h.num_signals, h.sampling_frequency);
    if let Some(n) = h.num_samples {
        out.push_str(&format!(" {n}"));
    }
    out.push('\n');
    for s in &h.signals {
        out.push_str(&format!("{} {} {}({})", s.file_name, s.format, s.gain, s.baseline));
        if let Some(u) = &s.units {
            out.push_str(&format!("/{u}"));
        }
        // Optional fields are positional: stop at the first absent one.
        let optional = [
            s.adc_resolution.map(|v| v.to_string()),
            Some(s.adc_zero.to_string()),
            s.initial_value.map(|v| v.to_string()),
            s.checksum.map(|v| v.to_string()),
            s.block_size.map(|v| v.to_string()),
        ];
        let mut complete = true;
        for v in optional {
            match v {
                Some(v) if complete => out.push_str(&format!(" {v}")),
                _ => complete = false,
            }
        }
        if complete && !s.description.is_empty() {
            out.push_str(&format!(" {}", s.description));
        }
        out.push('\n');
    }
    for c in &h.comments {
        out.push('#');
        out.push_str(c);
        out.push('\n');
    }
    out
}

/// Decodes interleaved 16-bit little-endian samples of `num_signals`
/// channels into frame-major ADC values.
pub fn decode_format16(bytes: &[u8], num_signals: usize) -> Result<Vec<i16>, WfdbError> {
    let frame = 2 * num_signals;
    if frame == 0 || bytes.len() % frame != 0 {
        return Err(WfdbError::Truncated {
            len: bytes.len(),
            frame,
        });
    }
    Ok(bytes
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]))
        .collect())
}

pub fn encode_format16(adc: &[i16]) -> Vec<u8> {
    adc.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn to_millivolts(adc: &[i16], specs: &[&SignalSpec], frames: usize) -> Result<Tensor> {
    let n = specs.len();
    let data = adc
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let s = specs[i % n];
            (v as f64 - s.baseline as f64) / s.gain
        })
        .collect();
    Tensor::new(&[frames, n], data)
}

fn frame_count(adc_len: usize, num_signals: usize, declared: Option<usize>) -> Result<usize, WfdbError> {
    let found = adc_len / num_signals;
    match declared {
        Some(d) if d > 0 && found < d => Err(WfdbError::TooFewSamples { declared: d, found }),
        Some(d) if d > 0 => Ok(d),
        _ => Ok(found),
    }
}

/// Converts a single-file format-16 record to millivolts:
/// `mV = (adc − baseline) / gain`. Returns `[N, num_signals]`.
pub fn parse_signal(bytes: &[u8], header: &WfdbHeader) -> Result<Tensor> {
    let adc = decode_format16(bytes, header.num_signals)?;
    let frames = frame_count(adc.len(), header.num_signals, header.num_samples)?;
    let specs: Vec<&SignalSpec> = header.signals.iter().collect();
    to_millivolts(&adc[..frames * header.num_signals], &specs, frames)
}

/// Like [`parse_signal`] for one file of a multi-file record: decodes the
/// signals stored in `file_name` (in header order) and returns their header
/// indices with the `[N, k]` millivolt matrix.
pub fn parse_signal_file(bytes: &[u8], header: &WfdbHeader, file_name: &str) -> Result<(Vec<usize>, Tensor)> {
    let idx: Vec<usize> = header
        .signals
        .iter()
        .enumerate()
        .filter(|(_, s)| s.file_name == file_name)
        .map(|(i, _)| i)
        .collect();
    let adc = decode_format16(bytes, idx.len())?;
    let frames = frame_count(adc.len(), idx.len(), header.num_samples)?;
    let specs: Vec<&SignalSpec> = idx.iter().map(|&i| &header.signals[i]).collect();
    let mv = to_millivolts(&adc[..frames * idx.len()], &specs, frames)?;
    Ok((idx, mv))
}

/// Writes `header` as `<dir>/<record_name>.hea` and the frame-major samples
/// `adc` (`num_signals` per frame) into the signal files the header names,
/// each file holding its signals in header order.
pub fn write_record(dir: impl AsRef<Path>, header: &WfdbHeader, adc: &[i16]) -> Result<()> {
    let dir = dir.as_ref();
    let n = header.num_signals;
    if n == 0 || adc.len() % n != 0 || header.signals.len() != n {
        return Err(Error::Contract(format!(
            "{} samples do not form frames of {n} signals",
            adc.len()
        )));
    }
    let hea = dir.join(format!("{}.hea", header.record_name));
    std::fs::write(&hea, write_header(header)).map_err(|e| Error::io(&hea, e))?;

    let mut files: Vec<&str> = Vec::new();
    for s in &header.signals {
        if !files.contains(&s.file_name.as_str()) {
            files.push(&s.file_name);
        }
    }
    for file in files {
        let cols: Vec<usize> = (0..n).filter(|&i| header.signals[i].file_name == file).collect();
        let samples: Vec<i16> = adc
            .chunks_exact(n)
            .flat_map(|frame| cols.iter().map(move |&c| frame[c]))
            .collect();
        let path = dir.join(file);
        std::fs::write(&path, encode_format16(&samples)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
