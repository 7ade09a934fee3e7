//! Binary weight files.
//!
//! Layout (little-endian, no padding): magic `MIRN`, version byte `0x01`,
//! then for each array of [`ModelParams::named_arrays`] in order: name
//! length (u8), ASCII name, rank (u8), extents (u32 each), row-major `f64`
//! data.

use std::fs;
use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::tensor::Tensor;

use super::{init_model, Architecture, ModelParams};

pub const WEIGHTS_MAGIC: [u8; 4] = *b"MIRN";
pub const WEIGHTS_VERSION: u8 = 0x01;

pub fn encode_weights(p: &ModelParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&WEIGHTS_MAGIC);
    out.push(WEIGHTS_VERSION);
    for (name, t) in p.named_arrays() {
        out.push(name.len() as u8);
        out.extend_from_slice(name.as_bytes());
        out.push(t.rank() as u8);
        for &e in t.shape() {
            out.extend_from_slice(&(e as u32).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], FormatError> {
        if self.buf.len() - self.pos < n {
            return Err(FormatError::Truncated(what.to_string()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8, FormatError> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn header(&mut self, magic: [u8; 4], version: u8) -> Result<(), FormatError> {
        let found = self.buf.get(..4).unwrap_or(self.buf);
        if found != magic {
            return Err(FormatError::BadMagic {
                expected: magic,
                found: found.to_vec(),
            });
        }
        self.pos = 4;
        let v = self.u8("version")?;
        if v != version {
            return Err(FormatError::UnsupportedVersion(v));
        }
        Ok(())
    }
}

/// Decodes a weight file for the given architecture. Array names, order and
/// shapes must match exactly.
pub fn decode_weights(bytes: &[u8], arch: Architecture) -> Result<ModelParams> {
    let mut r = Reader::new(bytes);
    r.header(WEIGHTS_MAGIC, WEIGHTS_VERSION)?;
    let mut params = init_model(arch, 0)?;
    let expected: Vec<(String, Vec<usize>)> = params
        .named_arrays()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    for ((name, shape), slot) in expected.into_iter().zip(params.named_arrays_mut()) {
        let len = r.u8(&name)? as usize;
        let found = r.take(len, &name)?;
        if found != name.as_bytes() {
            return Err(FormatError::UnexpectedArray {
                expected: name,
                found: String::from_utf8_lossy(found).into_owned(),
            }
            .into());
        }
        let rank = r.u8(&name)? as usize;
        let dims = (0..rank)
            .map(|_| r.u32(&name).map(|e| e as usize))
            .collect::<Result<Vec<_>, _>>()?;
        if dims != shape {
            return Err(FormatError::ShapeMismatch {
                name,
                expected: shape,
                found: dims,
            }
            .into());
        }
        let n: usize = shape.iter().product();
        let raw = r.take(8 * n, &name)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        *slot = Tensor::new(&shape, data)?;
    }
    if r.remaining() > 0 {
        return Err(FormatError::TrailingBytes(r.remaining()).into());
    }
    Ok(params)
}

pub fn save_weights(p: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_weights(p)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>, arch: Architecture) -> Result<ModelParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes, arch)
}
