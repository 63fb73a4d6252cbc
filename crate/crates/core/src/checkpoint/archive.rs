//! Tensor archive codec.
//!
//! ```text
//! [0..8)        u64 little-endian header length N
//! [8..8+N)      UTF-8 JSON object:
//!                 { "__metadata__": { str: str },            (optional)
//!                   "<name>": { "dtype": "F16"|"BF16"|"F32"|"F64",
//!                               "shape": [ints],
//!                               "data_offsets": [begin, end] }, ... }
//! [8+N..)       raw little-endian row-major buffers, offsets relative to here
//! ```
//!
//! The writer emits tensors in lexicographic order with contiguous offsets and
//! pads the header with spaces to a multiple of 8 bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::Value;

use super::tensor::{element_count, DType, Tensor};
use super::Checkpoint;
use crate::error::{Error, Result};

const METADATA_KEY: &str = "__metadata__";

pub fn read_archive(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_archive(&bytes)
}

/// Writes `ckpt` to `path` through a temporary file and an atomic rename, so a
/// failed write never leaves a truncated archive behind.
pub fn write_archive(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let header = encode_header(ckpt)?;
    write_atomic(path.as_ref(), |out| {
        out.write_all(&(header.len() as u64).to_le_bytes())?;
        out.write_all(&header)?;
        for tensor in ckpt.tensors().values() {
            out.write_all(tensor.bytes())?;
        }
        Ok(())
    })
}

/// Runs `body` against a buffered temp file next to `path`, then renames it into place.
pub fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<&mut File>) -> std::io::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut out = BufWriter::new(tmp.as_file_mut());
        body(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn encode_archive(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let header = encode_header(ckpt)?;
    let payload: usize = ckpt.tensors().values().map(|t| t.bytes().len()).sum();
    let mut out = Vec::with_capacity(8 + header.len() + payload);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for tensor in ckpt.tensors().values() {
        out.extend_from_slice(tensor.bytes());
    }
    Ok(out)
}

fn encode_header(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let quote = |s: &str| serde_json::to_string(s).expect("strings always serialize");
    let mut parts = Vec::with_capacity(ckpt.len() + 1);
    if !ckpt.metadata().is_empty() {
        let meta = serde_json::to_string(ckpt.metadata())
            .map_err(|e| Error::Serialization(e.to_string()))?;
        parts.push(format!("{}:{meta}", quote(METADATA_KEY)));
    }
    let mut offset = 0usize;
    for (name, tensor) in ckpt.tensors() {
        if name == METADATA_KEY {
            return Err(Error::InvalidTensor {
                name: name.clone(),
                detail: "name is reserved for metadata".into(),
            });
        }
        let end = offset + tensor.bytes().len();
        let shape = tensor
            .shape()
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",");
        parts.push(format!(
            "{}:{{\"dtype\":\"{}\",\"shape\":[{shape}],\"data_offsets\":[{offset},{end}]}}",
            quote(name),
            tensor.dtype().tag()
        ));
        offset = end;
    }
    let mut header = format!("{{{}}}", parts.join(",")).into_bytes();
    while header.len() % 8 != 0 {
        header.push(b' ');
    }
    Ok(header)
}

struct Entry {
    name: String,
    dtype: DType,
    shape: Vec<usize>,
    begin: usize,
    end: usize,
}

pub fn decode_archive(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 8 {
        return Err(Error::MalformedHeader(format!(
            "file is {} bytes, shorter than the length prefix",
            bytes.len()
        )));
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().unwrap());
    let available = (bytes.len() - 8) as u64;
    if n > available {
        return Err(Error::MalformedHeader(format!(
            "length prefix {n} exceeds the {available} bytes that follow"
        )));
    }
    let header_end = 8 + n as usize;
    let text = std::str::from_utf8(&bytes[8..header_end])
        .map_err(|e| Error::MalformedHeader(format!("header is not UTF-8: {e}")))?;
    let root: serde_json::Map<String, Value> = serde_json::from_str(text)
        .map_err(|e| Error::MalformedHeader(format!("header is not a JSON object: {e}")))?;
    let data = &bytes[header_end..];

    let mut metadata = BTreeMap::new();
    let mut entries = Vec::with_capacity(root.len());
    for (name, value) in root {
        if name == METADATA_KEY {
            metadata = parse_metadata(&value)?;
        } else {
            entries.push(parse_entry(name, &value)?);
        }
    }

    for e in &entries {
        if e.end > data.len() {
            return Err(Error::OffsetOverlap(format!(
                "{:?} ends at {} but the data section is {} bytes",
                e.name,
                e.end,
                data.len()
            )));
        }
    }
    let mut ranges: Vec<&Entry> = entries.iter().filter(|e| e.end > e.begin).collect();
    ranges.sort_by_key(|e| (e.begin, e.end));
    for pair in ranges.windows(2) {
        if pair[1].begin < pair[0].end {
            return Err(Error::OffsetOverlap(format!(
                "{:?} [{}, {}) overlaps {:?} [{}, {})",
                pair[0].name, pair[0].begin, pair[0].end, pair[1].name, pair[1].begin, pair[1].end
            )));
        }
    }

    let mut ckpt = Checkpoint::new().with_metadata(metadata);
    for e in entries {
        let tensor = Tensor::from_bytes(e.dtype, e.shape, data[e.begin..e.end].to_vec())
            .map_err(|err| Error::MalformedHeader(format!("{:?}: {err}", e.name)))?;
        ckpt.insert(e.name, tensor);
    }
    Ok(ckpt)
}

fn parse_metadata(value: &Value) -> Result<BTreeMap<String, String>> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::MalformedHeader("__metadata__ is not an object".into()))?;
    obj.iter()
        .map(|(k, v)| match v {
            Value::String(s) => Ok((k.clone(), s.clone())),
            _ => Err(Error::MalformedHeader(format!(
                "__metadata__ value for {k:?} is not a string"
            ))),
        })
        .collect()
}

fn parse_entry(name: String, value: &Value) -> Result<Entry> {
    let bad = |what: &str| Error::MalformedHeader(format!("{name:?}: {what}"));
    let obj = value
        .as_object()
        .ok_or_else(|| bad("entry is not an object"))?;
    let dtype = obj
        .get("dtype")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("missing dtype"))?;
    let dtype = DType::from_tag(dtype)?;
    let shape = obj
        .get("shape")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing shape"))?
        .iter()
        .map(|d| d.as_u64().and_then(|d| usize::try_from(d).ok()))
        .collect::<Option<Vec<usize>>>()
        .ok_or_else(|| bad("shape must hold non-negative integers"))?;
    let offsets = obj
        .get("data_offsets")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing data_offsets"))?;
    let [begin, end] = match offsets.as_slice() {
        [b, e] => [b, e].map(|v| v.as_u64().and_then(|v| usize::try_from(v).ok())),
        _ => return Err(bad("data_offsets must have two entries")),
    };
    let (begin, end) = begin
        .zip(end)
        .ok_or_else(|| bad("data_offsets must be integers"))?;
    if begin > end {
        return Err(Error::OffsetOverlap(format!(
            "{name:?} has reversed offsets [{begin}, {end})"
        )));
    }
    let expected = element_count(&shape)
        .and_then(|n| n.checked_mul(dtype.size()))
        .ok_or_else(|| bad("shape overflows"))?;
    if end - begin != expected {
        return Err(bad(&format!(
            "byte range [{begin}, {end}) does not hold shape {shape:?} of {dtype}"
        )));
    }
    Ok(Entry {
        name,
        dtype,
        shape,
        begin,
        end,
    })
}
