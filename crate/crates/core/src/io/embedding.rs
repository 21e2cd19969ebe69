//! `RRMEMB01` container: magic, little-endian `u32` header `n d k flags`,
//! `n * d` `f32` features (row-major), `n` `u32` labels, and `n` `u32`
//! group ids when bit 0 of `flags` is set.

use std::fs;
use std::path::Path;

use crate::data::LabeledEmbeddings;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"RRMEMB01";
pub const HEADER_LEN: usize = 24;
pub const FLAG_GROUPS: u32 = 1;

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

pub fn encode_embeddings(data: &LabeledEmbeddings) -> Result<Vec<u8>> {
    let n = data.len();
    let d = data.dim();
    let groups = data.group_ids();
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| format_err(0, format!("{what} {v} does not fit in u32")))
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * n * d + 8 * n);
    out.extend_from_slice(MAGIC);
    for (v, what) in [(n, "n"), (d, "d"), (data.num_classes(), "k")] {
        out.extend_from_slice(&to_u32(v, what)?.to_le_bytes());
    }
    let flags = if groups.is_some() { FLAG_GROUPS } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    for (i, &v) in data.features().iter().enumerate() {
        let f = v as f32;
        if v.is_finite() && !f.is_finite() {
            return Err(format_err(
                HEADER_LEN + 4 * i,
                format!("feature {v} overflows f32"),
            ));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    for &y in data.labels() {
        out.extend_from_slice(&to_u32(y, "label")?.to_le_bytes());
    }
    if let Some(g) = groups {
        for &id in g {
            out.extend_from_slice(&id.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn u32(&mut self, what: &str) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| format_err(self.pos, format!("truncated while reading {what}")))?;
        self.pos = end;
        Ok(u32::from_le_bytes(chunk.try_into().expect("4-byte slice")))
    }
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<LabeledEmbeddings> {
    if bytes.len() < MAGIC.len() {
        return Err(format_err(bytes.len(), "truncated magic"));
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(format_err(0, "bad magic, expected RRMEMB01"));
    }
    let mut cur = Cursor {
        bytes,
        pos: MAGIC.len(),
    };
    let n = cur.u32("n")? as usize;
    let d = cur.u32("d")? as usize;
    let k = cur.u32("k")? as usize;
    let flags_at = cur.pos;
    let flags = cur.u32("flags")?;
    if flags & !FLAG_GROUPS != 0 {
        return Err(format_err(flags_at, format!("unknown flag bits {flags:#x}")));
    }
    let grouped = flags & FLAG_GROUPS != 0;
    let expected = (HEADER_LEN as u128)
        + 4 * (n as u128) * (d as u128)
        + 4 * n as u128 * if grouped { 2 } else { 1 };
    if (bytes.len() as u128) < expected {
        return Err(format_err(
            bytes.len(),
            format!("truncated: expected {expected} bytes for n={n} d={d}"),
        ));
    }
    if bytes.len() as u128 > expected {
        return Err(format_err(expected as usize, "trailing bytes after payload"));
    }
    let mut features = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        features.push(f32::from_bits(cur.u32("feature")?) as f64);
    }
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let at = cur.pos;
        let y = cur.u32("label")? as usize;
        if y >= k {
            return Err(format_err(at, format!("label {y} at index {i} is not below k={k}")));
        }
        labels.push(y);
    }
    let groups = if grouped {
        let mut g = Vec::with_capacity(n);
        for _ in 0..n {
            g.push(cur.u32("group id")?);
        }
        Some(g)
    } else {
        None
    };
    LabeledEmbeddings::new(features, d, labels, k, groups)
        .map_err(|e| format_err(0, format!("invalid dataset: {e}")))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<LabeledEmbeddings> {
    decode_embeddings(&fs::read(path)?)
}

pub fn write_embeddings(data: &LabeledEmbeddings, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_embeddings(data)?)?;
    Ok(())
}
