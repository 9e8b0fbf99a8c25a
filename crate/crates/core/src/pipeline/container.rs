//! Binary container shared by checkpoints and embedding files.
//!
//! ```text
//! "CLMP"  0x01
//! u32 LE  metadata length, then UTF-8 JSON metadata
//! repeated sections:
//!   u16 LE name length, UTF-8 name
//!   u8 dtype code (0 = f32, 1 = f64, 2 = string list)
//!   u8 rank, then rank × u64 LE dims
//!   little-endian payload
//! u32 LE  CRC32 of every byte after the magic, up to this field
//! ```
//!
//! String-list payloads are repeated `u32 LE byte length + UTF-8`; their single
//! dim is the number of strings. The metadata carries `"section_crc32"`, a list
//! of `[name, crc32]` pairs in file order, so a damaged payload can be traced to
//! its section.

use serde_json::Value;

use crate::numcore::{DType, Scalar, Tensor};

pub const MAGIC: &[u8; 4] = b"CLMP";
pub const VERSION: u8 = 1;
const STRINGS_CODE: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum SectionData {
    F32(Tensor<f32>),
    F64(Tensor<f64>),
    Strings(Vec<String>),
}

impl SectionData {
    pub fn shape(&self) -> Vec<usize> {
        match self {
            SectionData::F32(t) => t.shape().to_vec(),
            SectionData::F64(t) => t.shape().to_vec(),
            SectionData::Strings(s) => vec![s.len()],
        }
    }

    /// The payload as a tensor of `T`, if it holds exactly that dtype.
    pub fn tensor<T: Scalar>(&self) -> Option<Tensor<T>> {
        match (self, T::DTYPE) {
            (SectionData::F32(t), DType::F32) => Some(t.cast()),
            (SectionData::F64(t), DType::F64) => Some(t.cast()),
            _ => None,
        }
    }
}

impl<T: Scalar> From<Tensor<T>> for SectionData {
    fn from(t: Tensor<T>) -> Self {
        match T::DTYPE {
            DType::F32 => SectionData::F32(t.cast()),
            DType::F64 => SectionData::F64(t.cast()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub metadata: Value,
    pub sections: Vec<(String, SectionData)>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ContainerError {
    #[error("not a CLMP file (bad magic)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    BadVersion(u8),
    #[error("checksum mismatch{}: file is corrupted or truncated", section.as_ref().map(|s| format!(" in section {s:?}")).unwrap_or_default())]
    Checksum { section: Option<String> },
    #[error("malformed container: {0}")]
    Malformed(String),
}

fn encode_section(name: &str, data: &SectionData) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    let code = match data {
        SectionData::F32(_) => DType::F32.code(),
        SectionData::F64(_) => DType::F64.code(),
        SectionData::Strings(_) => STRINGS_CODE,
    };
    out.push(code);
    let shape = data.shape();
    out.push(shape.len() as u8);
    for d in &shape {
        out.extend_from_slice(&(*d as u64).to_le_bytes());
    }
    match data {
        SectionData::F32(t) => t.data().iter().for_each(|v| v.write_le(&mut out)),
        SectionData::F64(t) => t.data().iter().for_each(|v| v.write_le(&mut out)),
        SectionData::Strings(list) => {
            for s in list {
                out.extend_from_slice(&(s.len() as u32).to_le_bytes());
                out.extend_from_slice(s.as_bytes());
            }
        }
    }
    out
}

impl Container {
    pub fn new(metadata: Value) -> Self {
        Container { metadata, sections: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, data: impl Into<SectionData>) {
        self.sections.push((name.into(), data.into()));
    }

    pub fn section(&self, name: &str) -> Option<&SectionData> {
        self.sections.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let encoded: Vec<Vec<u8>> = self.sections.iter().map(|(n, d)| encode_section(n, d)).collect();
        let crcs: Vec<(&str, u32)> =
            self.sections.iter().zip(&encoded).map(|((n, _), b)| (n.as_str(), crc32fast::hash(b))).collect();
        let mut meta = self.metadata.clone();
        if let Value::Object(m) = &mut meta {
            m.insert("section_crc32".into(), serde_json::to_value(crcs).unwrap());
        }
        let meta = serde_json::to_vec(&meta).expect("metadata serializes");
        let mut out = Vec::with_capacity(16 + meta.len() + encoded.iter().map(Vec::len).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        for e in &encoded {
            out.extend_from_slice(e);
        }
        let crc = crc32fast::hash(&out[MAGIC.len()..]);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContainerError> {
        if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        if bytes.len() < 5 {
            return Err(ContainerError::Checksum { section: None });
        }
        if bytes[4] != VERSION {
            return Err(ContainerError::BadVersion(bytes[4]));
        }
        if bytes.len() < 4 + 1 + 4 + 4 {
            return Err(ContainerError::Checksum { section: None });
        }
        let body = &bytes[4..bytes.len() - 4];
        let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(ContainerError::Checksum { section: locate_damage(&bytes[5..]) });
        }
        let (metadata, sections) = parse_body(&body[1..]).map_err(ContainerError::Malformed)?;
        let mut metadata = metadata;
        if let Value::Object(m) = &mut metadata {
            m.remove("section_crc32");
        }
        Ok(Container { metadata, sections: sections.into_iter().map(|(n, d, _)| (n, d)).collect() })
    }
}

/// Best-effort attribution of a checksum failure to one section.
fn locate_damage(rest: &[u8]) -> Option<String> {
    let rest = &rest[..rest.len().saturating_sub(4)];
    let (meta, sections) = parse_body_lenient(rest).ok()?;
    let crcs = section_crcs(&meta);
    sections
        .into_iter()
        .find(|(name, crc)| crc.is_none() || crcs.iter().find(|(n, _)| n == name).map(|c| c.1) != *crc)
        .map(|(name, _)| name)
}

fn section_crcs(meta: &Value) -> Vec<(String, u32)> {
    serde_json::from_value(meta.get("section_crc32").cloned().unwrap_or(Value::Null)).unwrap_or_default()
}

type Parsed = (Value, Vec<(String, SectionData, u32)>);

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or("unexpected end of data")?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, String> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn parse_body(buf: &[u8]) -> Result<Parsed, String> {
    let mut r = Reader { buf, pos: 0 };
    let meta_len = r.u32()? as usize;
    let meta: Value = serde_json::from_slice(r.take(meta_len)?).map_err(|e| format!("metadata: {e}"))?;
    let mut sections = Vec::new();
    while !r.done() {
        let start = r.pos;
        let name_len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?).map_err(|_| "section name is not UTF-8")?.to_string();
        let code = r.u8()?;
        let rank = r.u8()? as usize;
        let dims: Vec<usize> = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<_, _>>()?;
        let data = if code == STRINGS_CODE {
            if rank != 1 {
                return Err(format!("section {name:?}: string list must have rank 1"));
            }
            let mut list = Vec::with_capacity(dims[0].min(1 << 20));
            for _ in 0..dims[0] {
                let len = r.u32()? as usize;
                let s = std::str::from_utf8(r.take(len)?).map_err(|_| format!("section {name:?}: invalid UTF-8"))?;
                list.push(s.to_string());
            }
            SectionData::Strings(list)
        } else {
            let dtype = DType::from_code(code).ok_or_else(|| format!("section {name:?}: unknown dtype code {code}"))?;
            let n = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or("dims overflow")?;
            let bytes = r.take(n.checked_mul(dtype.size_of()).ok_or("size overflow")?)?;
            match dtype {
                DType::F32 => SectionData::F32(read_tensor(dims, bytes)?),
                DType::F64 => SectionData::F64(read_tensor(dims, bytes)?),
            }
        };
        let crc = crc32fast::hash(&buf[start..r.pos]);
        sections.push((name, data, crc));
    }
    Ok((meta, sections))
}

/// Section names with their CRC, or `None` where the payload could not be read.
type SectionCrcs = Vec<(String, Option<u32>)>;

fn parse_body_lenient(buf: &[u8]) -> Result<(Value, SectionCrcs), String> {
    // identical framing walk, but stops quietly at the first unreadable section
    let mut r = Reader { buf, pos: 0 };
    let meta_len = r.u32()? as usize;
    let meta: Value = serde_json::from_slice(r.take(meta_len)?).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    let expected: Vec<String> = section_crcs(&meta).into_iter().map(|(n, _)| n).collect();
    while !r.done() {
        let start = r.pos;
        let step = (|| -> Result<String, String> {
            let name_len = r.u16()? as usize;
            let name = String::from_utf8_lossy(r.take(name_len)?).into_owned();
            let code = r.u8()?;
            let rank = r.u8()? as usize;
            let dims: Vec<usize> = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<_, _>>()?;
            if code == STRINGS_CODE {
                for _ in 0..dims.first().copied().unwrap_or(0) {
                    let len = r.u32()? as usize;
                    r.take(len)?;
                }
            } else {
                let size = DType::from_code(code).ok_or("dtype")?.size_of();
                let n = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or("overflow")?;
                r.take(n.checked_mul(size).ok_or("overflow")?)?;
            }
            Ok(name)
        })();
        match step {
            Ok(name) => out.push((name, Some(crc32fast::hash(&buf[start..r.pos])))),
            Err(_) => break,
        }
    }
    // sections cut off entirely, or whose framing is unreadable
    for name in expected {
        if !out.iter().any(|(o, _)| *o == name) {
            out.push((name, None));
        }
    }
    Ok((meta, out))
}

fn read_tensor<T: Scalar>(dims: Vec<usize>, bytes: &[u8]) -> Result<Tensor<T>, String> {
    let size = T::DTYPE.size_of();
    let data: Vec<T> = bytes.chunks_exact(size).map(T::read_le).collect();
    Tensor::new(dims, data).map_err(|e| e.to_string())
}
